import pytest

from d2dsim.config import SimConfig, default_config


@pytest.fixture
def cfg() -> SimConfig:
    return default_config()


def small_config(n_sensors=500, horizon_days=10, seed=0) -> SimConfig:
    cfg = default_config()
    cfg.scenario.n_sensors = n_sensors
    cfg.scenario.horizon_days = horizon_days
    cfg.scenario.rng_seed = seed
    return cfg
