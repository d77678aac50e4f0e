"""Flat key-value configuration: one `key = value` per line, `#` comments.

Keys are exactly the lower_snake_case field names of the scenario, channel
and power-profile dataclasses.  Unknown keys are a load error so that typos
fail loudly instead of silently falling back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .channel import ChannelConfig, McsTable
from .scenario import ConfigError, PowerProfile, ScenarioConfig


@dataclass
class SimConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    power: PowerProfile = field(default_factory=PowerProfile)
    mcs_table_path: str | None = None

    def validate(self) -> None:
        self.scenario.validate()
        self.channel.validate()
        self.power.validate()

    def mcs_table(self) -> McsTable:
        if self.mcs_table_path:
            return McsTable.load(self.mcs_table_path, self.channel.outage_snr_db)
        return McsTable.default(self.channel.outage_snr_db)


def _sections(cfg: SimConfig):
    return (cfg.scenario, cfg.channel, cfg.power)


def _coerce(name: str, raw: str, target_type):
    raw = raw.strip()
    try:
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        if target_type is str:
            return raw
        if target_type == float | None or target_type == "float | None":
            return None if raw in ("derived", "none") else float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    raise ConfigError(f"unsupported type for {name}")


def load_config(path) -> SimConfig:
    """Parse a flat config file into a validated SimConfig."""
    cfg = SimConfig()
    known = {}
    for section in _sections(cfg):
        for f in fields(section):
            known[f.name] = (section, f)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "mcs_table_path":
            cfg.mcs_table_path = value
            continue
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        section, f = known[key]
        if f.name == "sidelink_admission_pl_db":
            parsed = None if value in ("derived", "none") else float(value)
        elif f.type in ("int",):
            parsed = _coerce(key, value, int)
        elif f.type in ("float",):
            parsed = _coerce(key, value, float)
        elif f.type in ("str",):
            parsed = value
        else:
            parsed = _coerce(key, value, float)
        setattr(section, key, parsed)
    cfg.validate()
    return cfg


def save_config(cfg: SimConfig, path) -> None:
    """Write every key so that a reload reproduces the config bit-exactly."""
    lines = []
    for title, section in (("scenario", cfg.scenario),
                           ("channel", cfg.channel),
                           ("power", cfg.power)):
        lines.append(f"# {title}")
        for f in fields(section):
            value = getattr(section, f.name)
            if value is None:
                value = "derived"
            lines.append(f"{f.name} = {value}")
        lines.append("")
    if cfg.mcs_table_path:
        lines.append(f"mcs_table_path = {cfg.mcs_table_path}")
        lines.append("")
    Path(path).write_text("\n".join(lines))


def default_config() -> SimConfig:
    cfg = SimConfig()
    cfg.validate()
    return cfg
