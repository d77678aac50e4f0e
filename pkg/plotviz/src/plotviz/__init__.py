"""Figure rendering for the simulator's CSV exports.

This package is a pure view over the CDF CSV files written by the `d2dsim`
command line: it computes nothing beyond reading them, so every plotted point
is recoverable from its CSV source value, bit for bit.

Figure (a): CDF of served days over all sensors, one curve per scheme.
Figure (b): the same CDFs split by coverage class (in/out), one curve per
(scheme, subset).  Curves use right-continuous step interpolation so the
discrete MCS-driven plateaus stay visible; a vertical marker sits at the
10-year service requirement (3650 days).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIREMENT_DAYS = 3650.0
CDF_HEADER = ["scheme", "subset", "x_days", "cum_fraction"]

SUBSET_STYLES = {"in": "-", "out": "--"}
SUBSET_TITLES = {"in": "in coverage", "out": "out of coverage"}


class InputError(Exception):
    """A required CSV is missing or does not carry the documented layout."""


def load_cdf_csv(path: Path) -> tuple[str, list[tuple[float, float]]]:
    """Read one CDF CSV; returns (scheme label, [(x_days, cum_fraction)])."""
    if not path.is_file():
        raise InputError(f"missing input file: {path}")
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CDF_HEADER:
                raise InputError(f"malformed CSV (bad header): {path}")
            scheme = None
            points = []
            for row in reader:
                if len(row) != 4:
                    raise InputError(f"malformed CSV (bad row): {path}")
                scheme = row[0]
                points.append((float(row[2]), float(row[3])))
    except (OSError, ValueError) as exc:
        raise InputError(f"malformed CSV: {path} ({exc})") from exc
    if not points:
        raise InputError(f"malformed CSV (no data rows): {path}")
    return scheme, points


def discover_schemes(input_dir: Path) -> list[str]:
    """Scheme tokens present in the directory, by their cdf_*_all.csv files."""
    if not input_dir.is_dir():
        raise InputError(f"missing input directory: {input_dir}")
    tokens = sorted(p.name[len("cdf_"):-len("_all.csv")]
                    for p in input_dir.glob("cdf_*_all.csv"))
    if not tokens:
        raise InputError(f"no cdf_*_all.csv files in: {input_dir}")
    return tokens


def _draw_curve(ax, points, label, linestyle="-"):
    xs = [x for x, _ in points]
    ys = [c for _, c in points]
    # Right-continuous steps; anchor the curve at fraction 0 just before the
    # first data point so the initial jump is visible.
    (line,) = ax.step(xs, ys, where="post", label=label, linestyle=linestyle)
    return line


def _decorate(ax, title):
    ax.axvline(REQUIREMENT_DAYS, color="grey", linewidth=0.8, linestyle=":")
    ax.set_xlabel("served days")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize="small")


def render_all_sensors(input_dir: Path):
    """Figure (a): one CDF curve per scheme over all sensors."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for token in discover_schemes(input_dir):
        scheme, points = load_cdf_csv(input_dir / f"cdf_{token}_all.csv")
        _draw_curve(ax, points, scheme)
    _decorate(ax, "CDF of served days, all sensors")
    fig.tight_layout()
    return fig


def render_by_coverage(input_dir: Path):
    """Figure (b): one CDF curve per (scheme, coverage subset)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for token in discover_schemes(input_dir):
        for subset, style in SUBSET_STYLES.items():
            path = input_dir / f"cdf_{token}_{subset}.csv"
            scheme, points = load_cdf_csv(path)
            _draw_curve(ax, points, f"{scheme} ({SUBSET_TITLES[subset]})",
                        linestyle=style)
    _decorate(ax, "CDF of served days, by coverage class")
    fig.tight_layout()
    return fig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotviz-render",
        description="Render the two served-days CDF figures from a directory "
                    "of simulator CSV exports.")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="directory holding the cdf_*.csv files")
    parser.add_argument("--out-a", required=True,
                        help="output path of figure (a): all-sensor CDFs")
    parser.add_argument("--out-b", required=True,
                        help="output path of figure (b): coverage-split CDFs")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        fig_a = render_all_sensors(Path(args.input_dir))
        fig_b = render_by_coverage(Path(args.input_dir))
        fig_a.savefig(args.out_a)
        fig_b.savefig(args.out_b)
    except InputError as exc:
        print(f"plotviz-render: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"plotviz-render: cannot write output: {exc}", file=sys.stderr)
        return 1
    finally:
        plt.close("all")
    return 0


if __name__ == "__main__":
    sys.exit(main())
