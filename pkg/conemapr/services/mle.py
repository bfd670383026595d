"""Maximum-likelihood refinement by damped Gauss-Newton in (azimuth, elevation, g).

Residuals are whitened with the Cholesky factor of Q, so the cost is
(psi - f(u))^T Q^-1 (psi - f(u)).
"""

import logging
import math

import numpy as np
import scipy.linalg

from conemapr.exceptions import DivergenceError
from conemapr.schemas.geometry import SourceMpr, wrap_angle
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.schemas.mle import GnConfig, GnResult
from conemapr.services.crlb import jacobian_blocks
from conemapr.services.geometry import mpr_to_unit, rho_jacobian
from conemapr.services.measurement import cone_angles_from_arrays

logger = logging.getLogger(__name__)

DAMPING_SEED = 1e-4  # first damping tried when the undamped step increases the cost


def _fold(x: np.ndarray) -> np.ndarray:
    """Reflect the elevation back into [-pi/2, pi/2] (azimuth turns by pi) and wrap."""
    azimuth, elevation, g = x[0], wrap_angle(x[1]), x[2]
    if elevation > math.pi / 2:
        elevation, azimuth = math.pi - elevation, azimuth + math.pi
    elif elevation < -math.pi / 2:
        elevation, azimuth = -math.pi - elevation, azimuth + math.pi
    return np.array([wrap_angle(azimuth), elevation, g])


def _model(positions: np.ndarray, attitudes: np.ndarray, x: np.ndarray) -> np.ndarray:
    rho = mpr_to_unit(x[0], x[1]).components
    return cone_angles_from_arrays(positions, attitudes, rho, float(x[2]))


def _jacobian(positions: np.ndarray, attitudes: np.ndarray, x: np.ndarray) -> np.ndarray:
    rho = mpr_to_unit(x[0], x[1]).components
    J_rho, J_g = jacobian_blocks(positions, attitudes, rho, float(x[2]))
    return np.column_stack([J_rho @ rho_jacobian(x[0], x[1]), J_g])


def mpr_jacobian(sensors: list[SensorArray], source: SourceMpr) -> np.ndarray:
    """N x 3 partials of the cone angles w.r.t. (azimuth, elevation, g)."""
    positions = np.stack([s.position for s in sensors])
    attitudes = np.stack([s.attitude for s in sensors])
    x = np.array([source.azimuth, source.elevation, source.inverse_range])
    return _jacobian(positions, attitudes, x)


def solve_gauss_newton(
    angles: Measurements,
    scenario: Scenario,
    init: SourceMpr,
    config: GnConfig | None = None,
) -> GnResult:
    """Gauss-Newton from `init`, with Levenberg-Marquardt damping whenever a step fails.

    Stops when ||step|| < step_tol (converged) or after max_iters.

    Raises:
        DivergenceError: the cost still increases with damping above max_damping
    """
    config = config or GnConfig()
    positions = scenario.positions()
    attitudes = scenario.attitudes()
    chol = np.linalg.cholesky(scenario.noise_cov)
    observed = angles.angles

    def whitened(x: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(
            chol, observed - _model(positions, attitudes, x), lower=True
        )

    x = np.array([init.azimuth, init.elevation, init.inverse_range])
    b = whitened(x)
    cost = float(b @ b)
    costs = [cost]
    damping = config.damping
    converged = False

    iteration = 0
    for iteration in range(1, config.max_iters + 1):
        A = scipy.linalg.solve_triangular(chol, _jacobian(positions, attitudes, x), lower=True)
        information = A.T @ A
        gradient = A.T @ b

        while True:
            damped = information + np.diag(damping * np.diag(information))
            step = scipy.linalg.solve(damped, gradient, assume_a="pos")
            if np.linalg.norm(step) < config.step_tol:
                converged = True
                break

            candidate = _fold(x + step)
            b_new = whitened(candidate)
            cost_new = float(b_new @ b_new)
            if math.isfinite(cost_new) and cost_new <= cost:
                x, b, cost = candidate, b_new, cost_new
                costs.append(cost)
                damping *= 0.1
                break

            damping = DAMPING_SEED if damping < DAMPING_SEED else 10.0 * damping
            if damping > config.max_damping:
                raise DivergenceError(
                    f"cost increased at iteration {iteration} under maximal damping",
                    iteration=iteration,
                    damping=damping,
                )

        if converged:
            break

    if not converged:
        logger.debug(f"Gauss-Newton stopped after {config.max_iters} iterations, cost={cost:.3e}")

    estimate = SourceMpr(azimuth=x[0], elevation=x[1], inverse_range=max(float(x[2]), 0.0))
    return GnResult(estimate=estimate, iterations=iteration, costs=costs, converged=converged)


def gauss_newton(
    angles: Measurements,
    scenario: Scenario,
    init: SourceMpr,
    config: GnConfig | None = None,
) -> SourceMpr:
    """MLE of the source started from `init`."""
    return solve_gauss_newton(angles, scenario, init, config).estimate
