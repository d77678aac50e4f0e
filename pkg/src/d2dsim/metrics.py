"""Headline numbers and machine-readable exports from simulation results.

CSV layouts:
- per-sensor: scheme,sensor_id,distance_m,angle_rad,coverage,served_days,
  death_day,final_mode (death_day empty for survivors)
- CDF: scheme,subset,x_days,cum_fraction

Floats are written with repr so that reading them back reproduces the exact
binary values; headline recomputation from the CSV is bit-identical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .engine import SimulationResult, split_by_coverage
from .scenario import TransmissionMode

COVERAGE_LABELS = {0: "in", 1: "out"}
SUBSET_LABELS = ("all", "in", "out")


@dataclass
class HeadlineMetrics:
    outage_fraction_r12: float | None = None
    fraction_10y: dict[str, float] = field(default_factory=dict)
    fraction_10y_in_coverage: dict[str, float] = field(default_factory=dict)
    fraction_10y_out_of_coverage: dict[str, float] = field(default_factory=dict)
    cdf_step_at_requirement: float | None = None   # ContextAware only

    def as_lines(self) -> list[str]:
        out = []
        if self.outage_fraction_r12 is not None:
            out.append(f"outage_fraction_r12 = {self.outage_fraction_r12!r}")
        for scheme in sorted(self.fraction_10y):
            out.append(f"fraction_10y_{scheme} = {self.fraction_10y[scheme]!r}")
        for scheme in sorted(self.fraction_10y_in_coverage):
            out.append(f"fraction_10y_in_coverage_{scheme} = "
                       f"{self.fraction_10y_in_coverage[scheme]!r}")
        for scheme in sorted(self.fraction_10y_out_of_coverage):
            out.append(f"fraction_10y_out_of_coverage_{scheme} = "
                       f"{self.fraction_10y_out_of_coverage[scheme]!r}")
        if self.cdf_step_at_requirement is not None:
            out.append(f"cdf_step_at_requirement = "
                       f"{self.cdf_step_at_requirement!r}")
        return out


def cdf_step_at(cdf: list[tuple[float, float]], x: float) -> float:
    """Jump magnitude CDF(x) - CDF(x-) at the given abscissa."""
    prev = 0.0
    for xs, c in cdf:
        if xs == x:
            return c - prev
        if xs > x:
            break
        prev = c
    return 0.0


def compute_headlines(results: dict[str, SimulationResult]) -> HeadlineMetrics:
    """Aggregate headline ratios; `results` maps scheme name to result."""
    h = HeadlineMetrics()
    for name, r in results.items():
        inn, out = split_by_coverage(r)
        h.fraction_10y[name] = r.fraction_meeting_requirement
        h.fraction_10y_in_coverage[name] = inn.fraction_meeting_requirement
        h.fraction_10y_out_of_coverage[name] = out.fraction_meeting_requirement
        if r.scheme == "R12":
            h.outage_fraction_r12 = r.outage_fraction_day1
        if r.scheme == "ContextAware":
            h.cdf_step_at_requirement = cdf_step_at(
                r.cdf, float(r.life_requirement_days))
    return h


def write_sensor_csv(result: SimulationResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "sensor_id", "distance_m", "angle_rad",
                    "coverage", "served_days", "death_day", "final_mode"])
        for i in range(result.sensor_id.size):
            dd = result.death_day[i]
            w.writerow([
                result.scheme,
                int(result.sensor_id[i]),
                repr(float(result.distance_m[i])),
                repr(float(result.angle_rad[i])),
                COVERAGE_LABELS[int(result.coverage[i])],
                repr(float(result.served_days[i])),
                "" if math.isnan(dd) else repr(float(dd)),
                TransmissionMode(int(result.final_mode[i])).name.capitalize(),
            ])


def read_sensor_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_cdf_csv(result: SimulationResult, subset: str, path) -> None:
    if subset not in SUBSET_LABELS:
        raise ValueError(f"unknown subset {subset!r}")
    if subset == "all":
        sub = result
    else:
        inn, out = split_by_coverage(result)
        sub = inn if subset == "in" else out
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "subset", "x_days", "cum_fraction"])
        for x, c in sub.cdf:
            w.writerow([result.scheme, subset, repr(x), repr(c)])


def write_summary(headlines: HeadlineMetrics, path) -> None:
    Path(path).write_text("\n".join(headlines.as_lines()) + "\n")


def recount_fraction_10y(rows: list[dict], requirement_days: float) -> float:
    """Brute-force recount from per-sensor CSV rows (oracle for headlines)."""
    met = sum(1 for r in rows if float(r["served_days"]) >= requirement_days)
    return met / len(rows)
