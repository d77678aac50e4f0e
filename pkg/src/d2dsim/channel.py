"""Static link-budget computation.

Pathloss for the cellular and sidelink channels, log-normal shadowing frozen
per link, open-loop power control, SNR and SNR-to-MCS link adaptation.  All
operations are pure functions of their arguments.

Both pathloss models are log-distance closed forms with config-overridable
coefficients.  The cellular defaults are calibrated so that, with the default
deployment, a single-digit percentage of sensors cannot reach the BS at
maximum transmit power; the sidelink defaults keep device-to-device links
inside one angular cluster feasible at full power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
from scipy.special import ndtri

from .scenario import STREAM_SHADOW_CELL, STREAM_SHADOW_SIDE, ConfigError

MW_PER_DBM0 = 1.0  # 0 dBm == 1 mW


@dataclass
class ChannelConfig:
    bandwidth_hz: float = 180_000.0
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 5.0
    target_snr_cell_db: float = 3.0
    target_snr_side_db: float = 10.0
    outage_snr_db: float = -7.0
    relay_snr_db: float = 6.0
    max_tx_dbm: float = 20.0
    shadowing_sigma_cell_db: float = 8.0
    shadowing_sigma_side_db: float = 3.0
    antenna_gain_db: float = 0.0
    # None means: derived as the largest pathloss at which the sidelink
    # target SNR is reachable at full power (admission == feasibility).
    sidelink_admission_pl_db: float | None = None
    # Log-distance coefficients, PL(d) = intercept + slope*log10(d / 1 km)
    # for cellular, PL(d) = intercept + slope*log10(d / 1 m) for sidelink.
    cell_pl_intercept_db: float = 125.5
    cell_pl_slope_db: float = 22.0
    cell_pl_min_distance_m: float = 10.0
    side_pl_intercept_db: float = 16.0
    side_pl_slope_db: float = 28.0
    side_pl_min_distance_m: float = 3.0

    def validate(self) -> None:
        if not (self.outage_snr_db < self.target_snr_cell_db < self.relay_snr_db):
            raise ConfigError(
                "must satisfy outage_snr_db < target_snr_cell_db < relay_snr_db "
                f"(got {self.outage_snr_db}, {self.target_snr_cell_db}, "
                f"{self.relay_snr_db})"
            )
        if self.bandwidth_hz <= 0:
            raise ConfigError(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")
        for name in ("shadowing_sigma_cell_db", "shadowing_sigma_side_db"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def admission_pl_db(self) -> float:
        if self.sidelink_admission_pl_db is not None:
            return self.sidelink_admission_pl_db
        return (self.max_tx_dbm - noise_floor_dbm(self)
                - self.target_snr_side_db + self.antenna_gain_db)


@dataclass(frozen=True)
class McsEntry:
    min_snr_db: float
    spectral_eff_bps_hz: float


class McsTable:
    """Ordered SNR-to-spectral-efficiency steps, strictly increasing in both."""

    def __init__(self, entries: list[McsEntry], outage_snr_db: float = -7.0):
        if not entries:
            raise ConfigError("MCS table must not be empty")
        for a, b in zip(entries, entries[1:]):
            if not (a.min_snr_db < b.min_snr_db
                    and a.spectral_eff_bps_hz < b.spectral_eff_bps_hz):
                raise ConfigError(
                    "MCS table entries must be strictly increasing in both "
                    f"fields (at {a} -> {b})"
                )
        if entries[0].min_snr_db != outage_snr_db:
            raise ConfigError(
                f"lowest MCS threshold ({entries[0].min_snr_db}) must equal "
                f"the outage SNR ({outage_snr_db})"
            )
        self.entries = list(entries)
        self._thresholds = np.array([e.min_snr_db for e in entries])
        self._effs = np.array([e.spectral_eff_bps_hz for e in entries])

    def __len__(self) -> int:
        return len(self.entries)

    def select(self, snr_db: float) -> float | None:
        """Efficiency of the highest entry whose threshold is <= snr_db."""
        idx = int(np.searchsorted(self._thresholds, snr_db, side="right")) - 1
        if idx < 0:
            return None
        return float(self._effs[idx])

    def select_array(self, snr_db: np.ndarray) -> np.ndarray:
        """Vectorized select; NaN marks outage."""
        idx = np.searchsorted(self._thresholds, snr_db, side="right") - 1
        eff = np.where(idx >= 0, self._effs[np.clip(idx, 0, None)], np.nan)
        return eff

    @classmethod
    def load(cls, path, outage_snr_db: float = -7.0) -> "McsTable":
        entries = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'min_snr_db,spectral_eff'")
                entries.append(McsEntry(float(parts[0]), float(parts[1])))
        return cls(entries, outage_snr_db)

    @classmethod
    def default(cls, outage_snr_db: float = -7.0) -> "McsTable":
        with resources.as_file(
                resources.files("d2dsim.data") / "mcs_default.txt") as p:
            return cls.load(p, outage_snr_db)


@dataclass
class LinkState:
    """Cached per-link budget.  spectral_eff is None iff the link is in outage."""

    pathloss_db: float  # includes shadowing
    tx_power_dbm: float
    snr_db: float
    spectral_eff_bps_hz: float | None
    tx_duration_s: float | None


def milliwatts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def cellular_pathloss(distance_m, config: ChannelConfig):
    """Median cellular pathloss in dB, pre-shadowing.

    Distances below the model floor are clamped (degenerate-input rule).
    Accepts scalars or numpy arrays.
    """
    d = np.maximum(distance_m, config.cell_pl_min_distance_m)
    pl = config.cell_pl_intercept_db + config.cell_pl_slope_db * np.log10(d / 1000.0)
    return float(pl) if np.isscalar(distance_m) else pl


def sidelink_pathloss(distance_m, config: ChannelConfig):
    """Median sidelink pathloss in dB, pre-shadowing (clamped at the minimum)."""
    d = np.maximum(distance_m, config.side_pl_min_distance_m)
    pl = config.side_pl_intercept_db + config.side_pl_slope_db * np.log10(d)
    return float(pl) if np.isscalar(distance_m) else pl


def noise_floor_dbm(config: ChannelConfig) -> float:
    return (config.noise_density_dbm_hz
            + 10.0 * math.log10(config.bandwidth_hz)
            + config.noise_figure_db)


def open_loop_power(target_snr_db, pathloss_db, config: ChannelConfig):
    """Open-loop power control: reach the target SNR, capped at max_tx_dbm."""
    required = (target_snr_db + noise_floor_dbm(config) + pathloss_db
                - config.antenna_gain_db)
    return np.minimum(config.max_tx_dbm, required)


def achieved_snr(tx_dbm, pathloss_db, config: ChannelConfig):
    return (tx_dbm - pathloss_db + config.antenna_gain_db
            - noise_floor_dbm(config))


def select_mcs(snr_db: float, mcs_table: McsTable) -> float | None:
    """Spectral efficiency for the SNR, or None when below the lowest step."""
    return mcs_table.select(snr_db)


def tx_duration(payload_bits, spectral_eff, bandwidth_hz):
    return payload_bits / (spectral_eff * bandwidth_hz)


def cellular_shadowing(n_sensors: int, seed: int, config: ChannelConfig) -> np.ndarray:
    """Per-sensor cellular shadowing draws, frozen at deployment time."""
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, STREAM_SHADOW_CELL]))
    return rng.standard_normal(n_sensors) * config.shadowing_sigma_cell_db


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)).astype(np.uint64)
    x ^= x >> np.uint64(30)
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x = x * np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def sidelink_shadowing(id_a, id_b, seed: int, config: ChannelConfig):
    """Shadowing for a sidelink pair, frozen and symmetric in (id_a, id_b).

    Counter-based so any pair's draw is computable on demand without storing
    an n^2 matrix; mixing the run seed keeps it reproducible per seed.
    """
    a = np.asarray(id_a, dtype=np.uint64)
    b = np.asarray(id_b, dtype=np.uint64)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    with np.errstate(over="ignore"):
        key = _splitmix64((hi << np.uint64(32)) | lo)
        key = _splitmix64(key ^ np.uint64(seed * 0x9E3779B9 + STREAM_SHADOW_SIDE))
    # 53-bit mantissa uniform in (0, 1), then Gaussian via the inverse CDF.
    u = ((key >> np.uint64(11)).astype(np.float64) + 0.5) / float(1 << 53)
    g = ndtri(u) * config.shadowing_sigma_side_db
    return float(g) if np.isscalar(id_a) else g


def cellular_link(distance_m: float, shadow_db: float, config: ChannelConfig,
                  mcs: McsTable, payload_bits: int) -> LinkState:
    """Full cellular link budget for one sensor (scalar convenience)."""
    pl = cellular_pathloss(distance_m, config) + shadow_db
    tx = float(open_loop_power(config.target_snr_cell_db, pl, config))
    snr = float(achieved_snr(tx, pl, config))
    eff = select_mcs(snr, mcs)
    dur = tx_duration(payload_bits, eff, config.bandwidth_hz) if eff else None
    return LinkState(pl, tx, snr, eff, dur)


def sidelink_link(distance_m: float, shadow_db: float, config: ChannelConfig,
                  mcs: McsTable, payload_bits: int) -> LinkState:
    """Full sidelink link budget for one device pair (scalar convenience)."""
    pl = sidelink_pathloss(distance_m, config) + shadow_db
    tx = float(open_loop_power(config.target_snr_side_db, pl, config))
    snr = float(achieved_snr(tx, pl, config))
    eff = select_mcs(snr, mcs)
    dur = tx_duration(payload_bits, eff, config.bandwidth_hz) if eff else None
    return LinkState(pl, tx, snr, eff, dur)
