"""Tests for the measurement service."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from conemapr.config import settings
from conemapr.exceptions import DomainError, RejectionOverflowError
from conemapr.schemas.geometry import CartesianPoint, SourceMpr
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.services.geometry import mpr_to_cartesian, mpr_to_unit
from conemapr.services.measurement import (
    cone_angle_cartesian,
    cone_angle_mpr,
    cone_angle_sphere,
    cone_angles,
    simulate,
)


class TestConeAngleCartesian:
    """Tests for cone_angle_cartesian."""

    @pytest.mark.parametrize(
        ("position", "attitude", "source", "expected"),
        [
            ([0, 0, 0], [1, 0, 0], [500, 0, 0], 0.0),
            ([0, 0, 0], [0, 0, 1], [100, 100, 0], math.pi / 2),
            ([10, 0, 0], [1, 0, 0], [20, 0, 10], math.pi / 4),
        ],
    )
    def test_examples(self, position, attitude, source, expected):
        """Boresight, orthogonal and 45 degree cases."""
        sensor = SensorArray(position=position, attitude=attitude)
        psi = cone_angle_cartesian(sensor, CartesianPoint.from_array(np.array(source, float)))
        assert psi == pytest.approx(expected, abs=1e-7)

    def test_coincident_source_raises(self):
        """A source on the sensor has no cone angle."""
        sensor = SensorArray(position=[1, 2, 3], attitude=[0, 1, 0])
        with pytest.raises(DomainError):
            cone_angle_cartesian(sensor, CartesianPoint(x=1.0, y=2.0, z=3.0))


class TestConeAngleMpr:
    """Tests for cone_angle_mpr and cone_angle_sphere."""

    def test_far_field_boresight(self):
        """g = 0 with rho along the attitude gives 0."""
        sensor = SensorArray(position=[50, -20, 10], attitude=[1, 0, 0])
        psi = cone_angle_mpr(sensor, SourceMpr(azimuth=0.0, elevation=0.0, inverse_range=0.0))
        assert psi == pytest.approx(0.0, abs=1e-7)

    def test_far_field_orthogonal(self):
        """g = 0 with rho orthogonal to the attitude gives pi/2."""
        sensor = SensorArray(position=[50, -20, 10], attitude=[0, 0, 1])
        psi = cone_angle_mpr(sensor, SourceMpr(azimuth=0.0, elevation=0.0, inverse_range=0.0))
        assert psi == pytest.approx(math.pi / 2, abs=1e-15)

    def test_matches_cartesian(self, axis_sensors, oblique_source):
        """Near field, both forms of the model agree."""
        point = mpr_to_cartesian(oblique_source)
        for sensor in axis_sensors:
            assert cone_angle_mpr(sensor, oblique_source) == pytest.approx(
                cone_angle_cartesian(sensor, point), abs=1e-12
            )

    def test_far_field_limit(self, rng):
        """|psi(g = 1e-9) - psi(g = 0)| < 1e-5 rad inside the 500 m cube."""
        for _ in range(50):
            attitude = rng.standard_normal(3)
            sensor = SensorArray(
                position=rng.uniform(-250, 250, 3), attitude=attitude / np.linalg.norm(attitude)
            )
            azimuth, elevation = rng.uniform(-math.pi, math.pi), rng.uniform(-1.5, 1.5)
            near = cone_angle_mpr(
                sensor, SourceMpr(azimuth=azimuth, elevation=elevation, inverse_range=1e-9)
            )
            far = cone_angle_mpr(
                sensor, SourceMpr(azimuth=azimuth, elevation=elevation, inverse_range=0.0)
            )
            assert abs(near - far) < 1e-5

    def test_sphere_form_agrees_on_unit_rho(self, axis_sensors, oblique_source):
        """cone_angle_sphere equals cone_angle_mpr for a unit bearing."""
        rho = mpr_to_unit(oblique_source.azimuth, oblique_source.elevation).components
        for sensor in axis_sensors:
            assert cone_angle_sphere(sensor, rho, oblique_source.inverse_range) == pytest.approx(
                cone_angle_mpr(sensor, oblique_source), abs=1e-12
            )

    def test_vectorised_matches_scalar(self, axis_sensors, oblique_source):
        """cone_angles stacks cone_angle_mpr."""
        expected = [cone_angle_mpr(s, oblique_source) for s in axis_sensors]
        np.testing.assert_allclose(cone_angles(axis_sensors, oblique_source), expected, atol=1e-15)


class TestSimulate:
    """Tests for simulate."""

    def test_noiseless_returns_true_angles(self, axis_sensors, oblique_source):
        """The noiseless path returns psi° exactly."""
        scenario = Scenario(
            sensors=axis_sensors, noise_cov=np.zeros((4, 4)), truth=oblique_source, noiseless=True
        )
        angles = simulate(scenario, np.random.default_rng(0))
        np.testing.assert_array_equal(angles.angles, cone_angles(axis_sensors, oblique_source))

    def test_same_seed_same_vector(self, axis_sensors, oblique_source):
        """Two runs with the same seed are identical."""
        scenario = Scenario(sensors=axis_sensors, noise_cov=1e-4 * np.eye(4), truth=oblique_source)
        first = simulate(scenario, np.random.default_rng(42))
        second = simulate(scenario, np.random.default_rng(42))
        np.testing.assert_array_equal(first.angles, second.angles)

    def test_empirical_covariance(self, axis_sensors, oblique_source):
        """Sample covariance of psi - psi° matches a correlated Q within 5%."""
        Q = 1e-4 * (0.5 * np.eye(4) + 0.5 * np.ones((4, 4)))
        scenario = Scenario(sensors=axis_sensors, noise_cov=Q, truth=oblique_source)
        rng = np.random.default_rng(7)
        true_angles = cone_angles(axis_sensors, oblique_source)
        errors = np.array([simulate(scenario, rng).angles - true_angles for _ in range(40_000)])
        np.testing.assert_allclose(np.cov(errors, rowvar=False), Q, rtol=0.05)

    def test_angles_stay_in_range(self, axis_sensors, oblique_source):
        """Large noise is redrawn, never clipped out of [0, pi]."""
        scenario = Scenario(sensors=axis_sensors, noise_cov=0.05 * np.eye(4), truth=oblique_source)
        rng = np.random.default_rng(3)
        for _ in range(200):
            angles = simulate(scenario, rng).angles
            assert np.all((angles >= 0.0) & (angles <= math.pi))

    def test_rejection_overflow(self, axis_sensors, oblique_source, monkeypatch):
        """Huge noise exhausts the redraw budget."""
        monkeypatch.setattr(settings, "rejection_limit", 5)
        scenario = Scenario(sensors=axis_sensors, noise_cov=1e6 * np.eye(4), truth=oblique_source)
        with pytest.raises(RejectionOverflowError):
            simulate(scenario, np.random.default_rng(0))

    def test_missing_truth_raises(self, axis_sensors):
        """Simulation needs a true source."""
        scenario = Scenario(sensors=axis_sensors, noise_cov=np.eye(4))
        with pytest.raises(DomainError):
            simulate(scenario, np.random.default_rng(0))


class TestMeasurementSchemas:
    """Validation of SensorArray, Scenario and Measurements."""

    def test_attitude_must_be_unit(self):
        """Non-unit attitudes are rejected."""
        with pytest.raises(ValidationError):
            SensorArray(position=[0, 0, 0], attitude=[1, 1, 0])

    def test_needs_four_sensors(self, axis_sensors):
        """Three sensors cannot localize a source."""
        with pytest.raises(ValidationError):
            Scenario(sensors=axis_sensors[:3], noise_cov=np.eye(3))

    def test_covariance_shape(self, axis_sensors):
        """Q must be N x N."""
        with pytest.raises(ValidationError):
            Scenario(sensors=axis_sensors, noise_cov=np.eye(3))

    def test_covariance_symmetric(self, axis_sensors):
        """Asymmetric Q is rejected."""
        Q = np.eye(4)
        Q[0, 1] = 0.5
        with pytest.raises(ValidationError):
            Scenario(sensors=axis_sensors, noise_cov=Q)

    def test_covariance_positive_definite(self, axis_sensors):
        """A singular Q is rejected unless the scenario is noiseless."""
        with pytest.raises(ValidationError):
            Scenario(sensors=axis_sensors, noise_cov=np.zeros((4, 4)))

    def test_angles_in_range(self):
        """Angles outside [0, pi] are rejected."""
        with pytest.raises(ValidationError):
            Measurements(angles=[0.1, 3.5])
        assert len(Measurements(angles=[0.0, math.pi])) == 2
