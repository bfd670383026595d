"""Cone-angle measurement model.

A 1-D array at s_i with axis a_i measures psi_i = arccos(a_i^T (u - s_i) / ||u - s_i||).
In MPR the same angle reads cos psi_i = a_i^T (rho - s_i g) / ||rho - s_i g||.
"""

import logging
import math

import numpy as np

from conemapr.config import settings
from conemapr.exceptions import DomainError, RejectionOverflowError
from conemapr.schemas.geometry import CartesianPoint, SourceMpr
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.services.geometry import mpr_to_unit

logger = logging.getLogger(__name__)

COINCIDENCE_TOL = 1e-12


def _arccos(cosine: np.ndarray | float) -> np.ndarray | float:
    return np.arccos(np.clip(cosine, -1.0, 1.0))


def cone_angle_cartesian(sensor: SensorArray, source: CartesianPoint) -> float:
    offset = source.as_array() - sensor.position
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise DomainError(
            "source coincides with sensor position",
            operation="cone_angle_cartesian",
            value=sensor.position,
        )
    return float(_arccos(sensor.attitude @ offset / distance))


def cone_angle_mpr(sensor: SensorArray, source: SourceMpr) -> float:
    rho = mpr_to_unit(source.azimuth, source.elevation).components
    d = rho - sensor.position * source.inverse_range
    norm = float(np.linalg.norm(d))
    if norm < COINCIDENCE_TOL:
        raise DomainError(
            "source coincides with sensor position",
            operation="cone_angle_mpr",
            value=norm,
        )
    return float(_arccos(sensor.attitude @ d / norm))


def cone_angle_sphere(sensor: SensorArray, rho: np.ndarray, g: float) -> float:
    """Cone angle with ||rho||^2 fixed at 1 in the range term.

    Agrees with cone_angle_mpr for unit rho; its unconstrained partials in (rho, g)
    are the closed-form CRLB Jacobians.
    """
    s = sensor.position
    range_sq = 1.0 - 2.0 * g * float(s @ rho) + g * g * float(s @ s)
    if range_sq < COINCIDENCE_TOL**2:
        raise DomainError("source coincides with sensor position", operation="cone_angle_sphere")
    return float(_arccos(sensor.attitude @ (rho - s * g) / math.sqrt(range_sq)))


def cone_angles_from_arrays(
    positions: np.ndarray,
    attitudes: np.ndarray,
    rho: np.ndarray,
    g: float,
) -> np.ndarray:
    """Vectorised psi for N x 3 positions/attitudes and any (not necessarily unit) rho."""
    d = rho[np.newaxis, :] - positions * g
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms < COINCIDENCE_TOL):
        raise DomainError("source coincides with a sensor position", operation="cone_angles")
    return _arccos(np.einsum("ij,ij->i", attitudes, d) / norms)


def cone_angles(sensors: list[SensorArray], source: SourceMpr) -> np.ndarray:
    """True angles psi° of every sensor."""
    rho = mpr_to_unit(source.azimuth, source.elevation).components
    positions = np.stack([s.position for s in sensors])
    attitudes = np.stack([s.attitude for s in sensors])
    return cone_angles_from_arrays(positions, attitudes, rho, source.inverse_range)


def simulate(scenario: Scenario, rng: np.random.Generator) -> Measurements:
    """psi = psi° + L z with Q = L L^T; vectors leaving [0, pi] are redrawn whole."""
    if scenario.truth is None:
        raise DomainError("scenario has no true source to simulate", operation="simulate")

    true_angles = cone_angles(scenario.sensors, scenario.truth)
    if scenario.noiseless:
        return Measurements(angles=true_angles)

    chol = np.linalg.cholesky(scenario.noise_cov)
    for draw in range(settings.rejection_limit):
        angles = true_angles + chol @ rng.standard_normal(scenario.n_sensors)
        if np.all((angles >= 0.0) & (angles <= math.pi)):
            if draw:
                logger.debug(f"Measurement vector accepted after {draw} rejections")
            return Measurements(angles=angles)

    raise RejectionOverflowError(
        "noisy angles kept leaving [0, pi]", draws=settings.rejection_limit
    )
