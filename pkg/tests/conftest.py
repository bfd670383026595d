"""Global fixtures for conemapr tests."""

from collections.abc import Callable

import numpy as np
import pytest

from conemapr.schemas.geometry import SourceMpr
from conemapr.schemas.measurement import Scenario, SensorArray
from conemapr.schemas.montecarlo import GeometryParams
from conemapr.services.montecarlo import (
    COVARIANCE_STREAM,
    GEOMETRY_STREAM,
    TRIAL_STREAM,
    random_covariance,
    random_geometry,
    random_source,
    stream,
)

ScenarioFactory = Callable[..., Scenario]


def _make_scenario(
    seed: int,
    source_range: float = 1000.0,
    sigma2: float = 1e-4,
    noiseless: bool = False,
    n_sensors: int = 12,
) -> Scenario:
    params = GeometryParams(n_sensors=n_sensors)
    sensors = random_geometry(params, stream(seed, GEOMETRY_STREAM, 0))
    Q = random_covariance(n_sensors, sigma2, stream(seed, COVARIANCE_STREAM, 0))
    truth = random_source(sensors, params, source_range, stream(seed, TRIAL_STREAM, 0, 0))
    return Scenario(sensors=sensors, noise_cov=Q, truth=truth, noiseless=noiseless)


@pytest.fixture
def scenario_factory() -> ScenarioFactory:
    """Seeded random scenario: 12 sensors in the 500 m cube, source at a given range."""
    return _make_scenario


@pytest.fixture
def near_scenario() -> Scenario:
    """12 sensors, source at 1000 m, sigma^2 = 1e-4 rad^2."""
    return _make_scenario(11)


@pytest.fixture
def noiseless_scenario() -> Scenario:
    """Same layout as near_scenario, flagged noiseless."""
    return _make_scenario(11, noiseless=True)


@pytest.fixture
def axis_sensors() -> list[SensorArray]:
    """Four sensors on the coordinate axes looking along +x, +y, +z and -x."""
    return [
        SensorArray(position=[0.0, 0.0, 0.0], attitude=[1.0, 0.0, 0.0]),
        SensorArray(position=[100.0, 0.0, 0.0], attitude=[0.0, 1.0, 0.0]),
        SensorArray(position=[0.0, 100.0, 0.0], attitude=[0.0, 0.0, 1.0]),
        SensorArray(position=[0.0, 0.0, 100.0], attitude=[-1.0, 0.0, 0.0]),
    ]


@pytest.fixture
def oblique_source() -> SourceMpr:
    """Source at 500 m, off every axis of axis_sensors."""
    return SourceMpr(azimuth=0.7, elevation=0.4, inverse_range=1.0 / 500.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
