"""Cramer-Rao lower bound of the source in MPR.

The bound is first taken on omega = [rho^T, g]^T with the closed-form partials

    d psi_i / d rho = -(||d_i||^2 a_i^T + g (a_i^T d_i) s_i^T) / (||d_i||^3 |sin psi_i|)
    d psi_i / d g   = (a_i^T s_i ||d_i||^2 + (a_i^T d_i)(g ||s_i||^2 - s_i^T rho))
                      / (||d_i||^3 |sin psi_i|)

with d_i = rho - s_i g, and then mapped to (azimuth, elevation, g) through the Jacobian D
of that transformation: CRLB(u) = D CRLB(omega) D^T.
"""

import logging
import math

import numpy as np
import scipy.linalg

from conemapr.config import settings
from conemapr.exceptions import DegenerateGeometryError, DomainError, SingularFimError
from conemapr.schemas.crlb import CrlbResult
from conemapr.schemas.geometry import SourceMpr
from conemapr.schemas.measurement import Scenario, SensorArray
from conemapr.services.geometry import mpr_to_unit

logger = logging.getLogger(__name__)


def jacobian_blocks(
    positions: np.ndarray,
    attitudes: np.ndarray,
    rho: np.ndarray,
    g: float,
) -> tuple[np.ndarray, np.ndarray]:
    """(d psi / d rho as N x 3, d psi / d g as N) at (rho, g).

    Raises:
        DegenerateGeometryError: some |sin psi_i| is below settings.sin_floor
    """
    d = rho[np.newaxis, :] - positions * g
    norms = np.linalg.norm(d, axis=1)
    projections = np.einsum("ij,ij->i", attitudes, d)
    cosines = np.clip(projections / norms, -1.0, 1.0)
    sines = np.sqrt(1.0 - cosines**2)

    worst = int(np.argmin(sines))
    if sines[worst] < settings.sin_floor:
        raise DegenerateGeometryError(
            f"source on the cone axis of sensor {worst + 1}",
            quantity="|sin psi|",
            value=float(sines[worst]),
            threshold=settings.sin_floor,
        )

    denominators = norms**3 * sines
    J_rho = -(
        (norms**2)[:, np.newaxis] * attitudes + (g * projections)[:, np.newaxis] * positions
    ) / denominators[:, np.newaxis]

    along = np.einsum("ij,ij->i", attitudes, positions)
    J_g = (
        along * norms**2
        + projections * (g * np.einsum("ij,ij->i", positions, positions) - positions @ rho)
    ) / denominators
    return J_rho, J_g


def _blocks_at(sensors: list[SensorArray], source: SourceMpr) -> tuple[np.ndarray, np.ndarray]:
    positions = np.stack([s.position for s in sensors])
    attitudes = np.stack([s.attitude for s in sensors])
    rho = mpr_to_unit(source.azimuth, source.elevation).components
    return jacobian_blocks(positions, attitudes, rho, source.inverse_range)


def _truth(scenario: Scenario) -> SourceMpr:
    if scenario.truth is None:
        raise DomainError("the CRLB needs a true source", operation="crlb")
    return scenario.truth


def jacobian_rho(scenario: Scenario) -> np.ndarray:
    """N x 3 partials of the cone angles w.r.t. rho at the true source."""
    J_rho, _ = _blocks_at(scenario.sensors, _truth(scenario))
    return J_rho


def jacobian_g(scenario: Scenario) -> np.ndarray:
    """N partials of the cone angles w.r.t. g at the true source."""
    _, J_g = _blocks_at(scenario.sensors, _truth(scenario))
    return J_g


def d_matrix(azimuth: float, elevation: float) -> np.ndarray:
    """3 x 4 Jacobian of (azimuth, elevation, g) w.r.t. [rho^T, g].

    Raises:
        DegenerateGeometryError: at the poles, where the azimuth is undefined
    """
    ce, se = math.cos(elevation), math.sin(elevation)
    ca, sa = math.cos(azimuth), math.sin(azimuth)
    if abs(ce) < settings.sin_floor:
        raise DegenerateGeometryError(
            "azimuth undefined at the pole", quantity="|cos el|", value=abs(ce)
        )
    return np.array(
        [
            [-sa / ce, ca / ce, 0.0, 0.0],
            [-ca * se, -sa * se, ce, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def crlb_mpr(scenario: Scenario) -> CrlbResult:
    """CRLB of (azimuth, elevation, g) for the scenario's true source and noise covariance.

    Raises:
        DegenerateGeometryError: cone-axis or pole geometry
        DomainError: noise covariance not positive definite
        SingularFimError: cond(FIM) above settings.max_condition
    """
    truth = _truth(scenario)
    J_rho, J_g = _blocks_at(scenario.sensors, truth)
    J = np.column_stack([J_rho, J_g])

    try:
        factor = scipy.linalg.cho_factor(scenario.noise_cov)
    except np.linalg.LinAlgError as e:
        raise DomainError("noise covariance is not positive definite", operation="crlb") from e
    fim = J.T @ scipy.linalg.cho_solve(factor, J)
    fim = 0.5 * (fim + fim.T)

    condition = float(np.linalg.cond(fim))
    if not math.isfinite(condition) or condition > settings.max_condition:
        raise SingularFimError(f"FIM condition number {condition:.3e}", condition=condition)

    cov_omega = np.linalg.inv(fim)
    cov_omega = 0.5 * (cov_omega + cov_omega.T)
    D = d_matrix(truth.azimuth, truth.elevation)
    cov_mpr = D @ cov_omega @ D.T
    cov_mpr = 0.5 * (cov_mpr + cov_mpr.T)

    logger.debug(f"CRLB cond(FIM)={condition:.3e} diag={np.diag(cov_mpr)}")
    return CrlbResult(cov_mpr=cov_mpr, cov_omega=cov_omega, condition=condition)
