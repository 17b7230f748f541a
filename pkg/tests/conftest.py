import pytest

from fronthaul_mimo.sysmodel import SystemConfig


@pytest.fixture
def base_config() -> SystemConfig:
    """Default scenario at 15 dB reference SNR."""
    return SystemConfig.from_reference_snr(15.0)


def exact_gain_config(**overrides) -> SystemConfig:
    """Config with unit cell-edge gain (intercept 0, slope 0) so powers are
    exact floats; handy for boundary-precision tests."""
    fields = dict(
        pathloss_intercept_db=0.0,
        pathloss_slope=0.0,
        cell_radius_km=1.0,
        N_0=1.0,
    )
    fields.update(overrides)
    return SystemConfig(**fields)
