"""Test configuration and fixtures."""

import numpy as np
import pytest

from valleymap.landscape import profile_landscape
from valleymap.models import LandscapeSpec, NoiseConfig, SpinValleyParams, ValleyLandscape
from valleymap.physics import REFERENCE_DQD_PARAMS


@pytest.fixture
def reference_params() -> SpinValleyParams:
    """Anticrossing parameters of the y = 0 trace."""
    return REFERENCE_DQD_PARAMS


@pytest.fixture
def exact_noise() -> NoiseConfig:
    """Noise settings without shot noise."""
    return NoiseConfig(shots=None)


@pytest.fixture
def small_spec() -> LandscapeSpec:
    """Small landscape recipe that synthesizes in milliseconds."""
    return LandscapeSpec(x_extent=42.0, y_extent=8.4, y_origin=-4.2, pitch=1.4)


@pytest.fixture
def ramp_landscape() -> ValleyLandscape:
    """E_VS rising linearly from 20 to 50 µeV over 210 nm, uniform across y."""
    return profile_landscape(
        lambda x, y: 20.0 + 30.0 * x / 210.0 + 0.0 * y,
        x_extent=210.0,
        y_extent=14.0,
        pitch=1.4,
        y_origin=-7.0,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator."""
    return np.random.default_rng(1234)
