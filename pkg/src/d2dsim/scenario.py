"""Deployment generation and the core domain types shared by all modules.

The cell is a single omnidirectional base station at the origin.  Sensor
positions are stored in polar coordinates (distance, azimuth) because every
geometric decision downstream works on distance or reference angle; Cartesian
coordinates are never needed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

SECONDS_PER_DAY = 86400.0
WH_TO_JOULES = 3600.0

# Sub-stream tags so that adding a consumer never perturbs another's draws.
STREAM_DEPLOYMENT = 0x0D3B
STREAM_SHADOW_CELL = 0x5AD0
STREAM_SHADOW_SIDE = 0x51DE


class ConfigError(ValueError):
    """Raised when a configuration violates a documented constraint."""


class TransmissionMode(enum.IntEnum):
    CELLULAR = 0
    RELAY = 1
    SIDELINK = 2
    # Engine-internal state: currently unable to deliver reports (out of
    # coverage with no relay, or battery dead).
    UNSERVED = 3


class CoverageClass(enum.IntEnum):
    IN_COVERAGE = 0
    OUT_OF_COVERAGE = 1


@dataclass
class ScenarioConfig:
    cell_radius_m: float = 2500.0
    n_sensors: int = 100_000
    sensor_height_m: float = 0.5
    bs_height_m: float = 35.0
    carrier_hz: float = 9.0e8
    report_period_s: float = 150.0
    payload_bits: int = 1000
    battery_wh: float = 5.0
    life_requirement_days: int = 3650
    relay_min_distance_m: float = 1500.0
    relay_battery_margin: float = 1.2
    relay_budget: int = 100
    n_clusters: int = 100
    tms_period_days: int = 1
    rng_seed: int = 0
    # Engine / signaling knobs.
    horizon_days: int = 5500
    kmeans_refine_passes: int = 0
    aggregation_ratio: float = 1.0
    allocation_mode: str = "semi_persistent"  # or "random_access"
    discovery_bits: int = 200
    ack_bits: int = 50
    grant_bits: int = 100
    page_bits: int = 100
    security_bits: int = 256

    def validate(self) -> None:
        if self.tms_period_days * SECONDS_PER_DAY <= self.report_period_s:
            raise ConfigError(
                "tms_period_days * 86400 must exceed report_period_s "
                f"({self.tms_period_days} d vs {self.report_period_s} s)"
            )
        if not (self.cell_radius_m > self.relay_min_distance_m > 0):
            raise ConfigError(
                "must satisfy cell_radius_m > relay_min_distance_m > 0 "
                f"(got {self.cell_radius_m}, {self.relay_min_distance_m})"
            )
        for name in ("n_sensors", "payload_bits", "life_requirement_days",
                     "relay_budget", "n_clusters", "tms_period_days",
                     "horizon_days"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.battery_wh <= 0:
            raise ConfigError(f"battery_wh must be > 0, got {self.battery_wh}")
        if self.report_period_s <= 0:
            raise ConfigError("report_period_s must be > 0")
        if self.relay_battery_margin <= 0:
            raise ConfigError("relay_battery_margin must be > 0")
        if self.aggregation_ratio <= 0:
            raise ConfigError("aggregation_ratio must be > 0")
        if self.allocation_mode not in ("semi_persistent", "random_access"):
            raise ConfigError(
                f"allocation_mode must be semi_persistent or random_access, "
                f"got {self.allocation_mode!r}"
            )
        if self.kmeans_refine_passes < 0:
            raise ConfigError("kmeans_refine_passes must be >= 0")

    @property
    def battery_j(self) -> float:
        return self.battery_wh * WH_TO_JOULES

    @property
    def reports_per_day(self) -> int:
        return int(SECONDS_PER_DAY // self.report_period_s)


@dataclass
class PowerProfile:
    """Device power-consumption constants.

    All powers are in milliwatts, durations in seconds.  Defaults round-trip
    bit-exactly through config save/load.
    """

    pa_efficiency: float = 0.45
    circuit_mw: float = 60.0
    p_rx_mw: float = 100.0
    p_paging_mw: float = 100.0
    t_paging_s: float = 0.010
    p_clock_mw: float = 100.0
    t_clock_s: float = 0.010
    p_cp_mw: float = 200.0
    t_cp_s: float = 0.010
    p_sleep_mw: float = 0.01
    drx_per_day: int = 4
    drx_cycle_h: float = 6.0

    def validate(self) -> None:
        for name in ("pa_efficiency", "circuit_mw", "p_rx_mw", "p_paging_mw",
                     "t_paging_s", "p_clock_mw", "t_clock_s", "p_cp_mw",
                     "t_cp_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.p_sleep_mw < 0:
            raise ConfigError("p_sleep_mw must be >= 0")
        if self.drx_per_day < 0:
            raise ConfigError("drx_per_day must be >= 0")


@dataclass
class SensorNode:
    """One deployed sensor."""

    id: int
    distance_m: float
    angle_rad: float
    battery_j: float
    tm: TransmissionMode = TransmissionMode.CELLULAR
    cluster_id: int | None = None
    relay_id: int | None = None
    served_days: float = 0.0
    alive: bool = True
    coverage_class: CoverageClass = CoverageClass.IN_COVERAGE
    blacklist: set[int] = field(default_factory=set)


def deployment_arrays(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Deployment draws as (distances_m, angles_rad) arrays.

    Uniform area density needs r = R*sqrt(u) for uniform u.  Deterministic
    for a given rng_seed; the deployment draws come from a dedicated
    sub-stream so other modules' randomness never shifts them.
    """
    config.validate()
    rng = np.random.default_rng(
        np.random.SeedSequence([config.rng_seed, STREAM_DEPLOYMENT]))
    n = config.n_sensors
    radii = config.cell_radius_m * np.sqrt(rng.random(n))
    angles = rng.random(n) * (2.0 * math.pi)
    return radii, angles


def generate_deployment(config: ScenarioConfig) -> list[SensorNode]:
    """Draw the sensor deployment: uniform over the disk, full batteries."""
    radii, angles = deployment_arrays(config)
    n = config.n_sensors
    battery = config.battery_j
    return [
        SensorNode(id=i, distance_m=float(radii[i]), angle_rad=float(angles[i]),
                   battery_j=battery)
        for i in range(n)
    ]
