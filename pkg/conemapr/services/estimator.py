"""Constrained-WLS conical localization relaxed to a tightened SDP.

Unknown h = [g, rho^T, r_1, ..., r_N]^T with r_i = ||rho - s_i g||. Index comments in this
module are 1-based like the stacked vector (h_1 = g, h_2..h_4 = rho, h_{4+i} = r_i); the code
itself is 0-based.

Pipeline:
    Pass A   W = Q^-1, no sign rows -> preliminary rho, g
    Stage 2  W = (B Q B^T)^-1 from the Pass-A ranges, sign rows on the confident axes
"""

import logging
import math

import numpy as np
import scipy.linalg

from conemapr.config import settings
from conemapr.exceptions import DegenerateGeometryError, DomainError, SolverError
from conemapr.schemas.conic import ConicProblem, LinearEquality, SocRow, SolverReport
from conemapr.schemas.estimator import (
    DesignMatrices,
    EstimationResult,
    EstimationStage,
    EstimatorConfig,
    StackedUnknown,
)
from conemapr.schemas.geometry import SourceMpr
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.services import conic
from conemapr.services.geometry import mpr_to_cartesian, mpr_to_unit, unit_to_angles

logger = logging.getLogger(__name__)

SignHints = tuple[int, int, int]  # +1 / -1 per axis, 0 = skip


# --- pseudo-linear system -------------------------------------------------------------


def build_F(sensors: list[SensorArray], angles: Measurements) -> np.ndarray:
    """Row i = [a_i^T s_i, -a_i^T, 0 ... cos(psi_i) at h_{4+i} ... 0]."""
    n = len(sensors)
    if n != len(angles):
        raise ValueError(f"{n} sensors but {len(angles)} angles")
    F = np.zeros((n, n + 4))
    for i, sensor in enumerate(sensors):
        F[i, 0] = sensor.attitude @ sensor.position
        F[i, 1:4] = -sensor.attitude
        F[i, 4 + i] = math.cos(angles.angles[i])
    return F


def build_B(angles: Measurements, normalized_ranges: np.ndarray) -> np.ndarray:
    """diag(-r_i sin psi_i) with |sin psi_i| floored at settings.sin_floor."""
    sines = np.maximum(np.abs(np.sin(angles.angles)), settings.sin_floor)
    return -np.diag(np.asarray(normalized_ranges, dtype=float) * sines)


def _weighting(B: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, bool]:
    """W = (B Q B^T)^-1, or Q^-1 when B Q B^T is too ill-conditioned (second value True)."""
    cov = B @ Q @ B.T
    cov = 0.5 * (cov + cov.T)
    condition = float(np.linalg.cond(cov))
    if not math.isfinite(condition) or condition > settings.max_condition:
        logger.warning(f"cond(BQB^T) = {condition:.3e} exceeds guard, keeping W = Q^-1")
        return _inverse_spd(Q), True
    return _inverse_spd(cov), False


def weighting(B: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """W = (B Q B^T)^-1 (falls back to Q^-1 past the conditioning guard)."""
    W, _ = _weighting(B, Q)
    return W


def _inverse_spd(M: np.ndarray) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(M)
    except np.linalg.LinAlgError as e:
        raise DomainError(
            "weighting matrix is not positive definite", operation="weighting"
        ) from e
    inverse = scipy.linalg.cho_solve(factor, np.eye(M.shape[0]))
    return 0.5 * (inverse + inverse.T)


def design_matrices(
    sensors: list[SensorArray],
    angles: Measurements,
    Q: np.ndarray,
    normalized_ranges: np.ndarray | None = None,
) -> DesignMatrices:
    """F, B and W for one pass; without ranges B = I and W = Q^-1 (Pass A)."""
    F = build_F(sensors, angles)
    if normalized_ranges is None:
        return DesignMatrices(F=F, B=np.eye(len(sensors)), W=_inverse_spd(Q))
    B = build_B(angles, normalized_ranges)
    W, fell_back = _weighting(B, Q)
    return DesignMatrices(F=F, B=B, W=W, weighting_fallback=fell_back)


# --- SDP assembly ---------------------------------------------------------------------


def _range_equality(dim: int, i: int, position: np.ndarray) -> LinearEquality:
    """tr{C_i^T C_i H} = H_{4+i,4+i} with C_i = [-s_i, I_3, 0]."""
    C = np.zeros((3, dim))
    C[:, 0] = -position
    C[:, 1:4] = np.eye(3)
    A = C.T @ C
    A[4 + i, 4 + i] -= 1.0
    return LinearEquality(matrix=A, rhs=0.0, label=f"range_{i + 1}")


def _soc_row(dim: int, column: int, position: np.ndarray, bound: np.ndarray, label: str) -> SocRow:
    """||H_{2:4,c} - s_i H_{1,c}|| <= bound @ svec(H) for 0-based column c."""
    selector = np.stack(
        [
            conic.entry(dim, 1 + k, column) - position[k] * conic.entry(dim, 0, column)
            for k in range(3)
        ]
    )
    return SocRow(selector=selector, rhs=bound, label=label)


def assemble_sdp(
    F: np.ndarray,
    W: np.ndarray,
    sensors: list[SensorArray],
    sign_hints: SignHints | None = None,
    *,
    tighten: bool = True,
) -> ConicProblem:
    """Relaxed CWLS: min tr{F^T W F H} over H PSD.

    Equalities: tr{H_{2:4,2:4}} = 1 and the N range identities. With `tighten`, the SOC rows
    ||H_{2:4,1} - s_i H_{1,1}|| <= H_{4+i,1} and, for every ordered pair (i, j),
    ||H_{2:4,4+j} - s_i H_{1,4+j}|| <= H_{4+j,4+i}. Sign hints add
    ||H_{2:4,1+j} - s_i H_{1,1+j}|| <= sign_j H_{1+j,4+i} for each axis j not skipped.
    """
    n = len(sensors)
    dim = n + 4
    if F.shape != (n, dim) or W.shape != (n, n):
        raise ValueError(f"inconsistent shapes F{F.shape} W{W.shape} for {n} sensors")

    objective = F.T @ W @ F
    objective = 0.5 * (objective + objective.T)

    trace_rho = np.zeros((dim, dim))
    trace_rho[1:4, 1:4] = np.eye(3)
    equalities = [LinearEquality(matrix=trace_rho, rhs=1.0, label="trace_rho")]
    equalities += [_range_equality(dim, i, s.position) for i, s in enumerate(sensors)]

    socs: list[SocRow] = []
    if tighten:
        for i, s in enumerate(sensors):
            socs.append(_soc_row(dim, 0, s.position, conic.entry(dim, 4 + i, 0), f"g_{i + 1}"))
        for i, s in enumerate(sensors):
            for j in range(n):
                socs.append(
                    _soc_row(
                        dim,
                        4 + j,
                        s.position,
                        conic.entry(dim, 4 + j, 4 + i),
                        f"r_{i + 1}_{j + 1}",
                    )
                )
    if sign_hints is not None:
        for axis, sign in enumerate(sign_hints):
            if sign == 0:
                continue
            for i, s in enumerate(sensors):
                socs.append(
                    _soc_row(
                        dim,
                        1 + axis,
                        s.position,
                        sign * conic.entry(dim, 1 + axis, 4 + i),
                        f"sign_{axis + 1}_{i + 1}",
                    )
                )

    return ConicProblem(dim=dim, objective=objective, equalities=equalities, socs=socs)


# --- recovery -------------------------------------------------------------------------


def eigen_ratio(H: np.ndarray) -> float:
    """lambda_1 / lambda_2 of H (inf when lambda_2 <= 0)."""
    eigenvalues = np.linalg.eigvalsh(H)
    largest, second = float(eigenvalues[-1]), float(eigenvalues[-2])
    if second <= 0.0:
        return math.inf
    return max(1.0, largest / second)


def recover_h(H_star: np.ndarray) -> StackedUnknown:
    """h = sqrt(lambda_1) v_1 of the dominant eigenpair, signed so most ranges are positive.

    A tie falls back to g >= 0. In the far field g sits at numerical zero with either sign
    while every r_i stays near 1, so the ranges carry the sign.
    """
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (H_star + H_star.T))
    largest = float(eigenvalues[-1])
    if largest <= 0.0:
        raise DegenerateGeometryError(
            "relaxed solution has no positive eigenvalue", quantity="lambda_1", value=largest
        )
    h = math.sqrt(largest) * eigenvectors[:, -1]
    ranges = h[4:]
    votes = int(np.sum(ranges > 0.0)) - int(np.sum(ranges < 0.0))
    if votes < 0 or (votes == 0 and h[0] < 0.0):
        h = -h
    return StackedUnknown(h=h)


def recover_mpr(h: StackedUnknown) -> SourceMpr:
    """g = h_1, azimuth/elevation from the normalised rho = h_2..h_4."""
    rho = h.rho
    norm = float(np.linalg.norm(rho))
    if norm < 1e-12:
        raise DegenerateGeometryError("recovered bearing is zero", quantity="|rho|", value=norm)
    azimuth, elevation = unit_to_angles(rho / norm)
    return SourceMpr(azimuth=azimuth, elevation=elevation, inverse_range=max(h.g, 0.0))


def true_stacked_unknown(sensors: list[SensorArray], source: SourceMpr) -> StackedUnknown:
    """h° = [g°, rho°^T, ||rho° - s_i g°||, ...]^T."""
    rho = mpr_to_unit(source.azimuth, source.elevation).components
    g = source.inverse_range
    ranges = [float(np.linalg.norm(rho - s.position * g)) for s in sensors]
    return StackedUnknown(h=np.concatenate([[g], rho, ranges]))


def constraint_residual(h: StackedUnknown, sensors: list[SensorArray]) -> float:
    """Largest violation of ||rho|| = 1 and r_i = ||rho - s_i g|| (squared form)."""
    rho, g = h.rho, h.g
    residuals = [abs(float(rho @ rho) - 1.0)]
    for s, r in zip(sensors, h.ranges):
        d = rho - s.position * g
        residuals.append(abs(float(d @ d) - float(r) ** 2))
    return max(residuals)


# --- pipeline -------------------------------------------------------------------------


def _length_scale(sensors: list[SensorArray]) -> float:
    scale = max(float(np.linalg.norm(s.position)) for s in sensors)
    return scale if scale > 0.0 else 1.0


def _scaled(sensors: list[SensorArray], length: float) -> list[SensorArray]:
    return [SensorArray(position=s.position / length, attitude=s.attitude) for s in sensors]


def _sign_hints(rho: np.ndarray) -> SignHints:
    unit = rho / np.linalg.norm(rho)
    hints = [
        int(np.sign(component)) if abs(component) >= settings.sign_hint_threshold else 0
        for component in unit
    ]
    return hints[0], hints[1], hints[2]


def _solve_pass(
    design: DesignMatrices,
    sensors: list[SensorArray],
    sign_hints: SignHints | None,
    config: EstimatorConfig,
) -> tuple[StackedUnknown, float, SolverReport]:
    problem = assemble_sdp(design.F, design.W, sensors, sign_hints, tighten=config.tighten)
    H_star, report = conic.solve(problem, tol=config.tol)
    return recover_h(H_star), eigen_ratio(H_star), report


def pass_a_problem(
    scenario: Scenario,
    angles: Measurements,
    config: EstimatorConfig | None = None,
) -> ConicProblem:
    """The first-pass relaxation exactly as `estimate` hands it to the solver."""
    config = config or EstimatorConfig()
    sensors = _scaled(scenario.sensors, _length_scale(scenario.sensors))
    design = design_matrices(sensors, angles, scenario.noise_cov)
    return assemble_sdp(design.F, design.W, sensors, tighten=config.tighten)


def _to_result(
    h_scaled: StackedUnknown,
    length: float,
    sensors: list[SensorArray],
    ratio: float,
    stage: EstimationStage,
    report: SolverReport,
    **extra,
) -> EstimationResult:
    h = h_scaled.h.copy()
    h[0] /= length
    h_star = StackedUnknown(h=h)
    estimate = recover_mpr(h_star)
    position = mpr_to_cartesian(estimate) if estimate.inverse_range > 0.0 else None
    return EstimationResult(
        estimate=estimate,
        h_star=h_star,
        eig_ratio=ratio,
        constraint_residual=constraint_residual(h_star, sensors),
        stage=stage,
        solver=report,
        position=position,
        **extra,
    )


def estimate(
    scenario: Scenario,
    angles: Measurements,
    config: EstimatorConfig | None = None,
) -> EstimationResult:
    """Two-pass estimate of the source in MPR.

    Sensor positions are divided by the largest sensor norm L before assembly (g is carried
    as g L), which leaves s_i g and every constraint unchanged while keeping H well scaled
    from near to far field.

    Raises:
        SolverError: when Pass A fails (a failing Stage 2 falls back to Pass A)
    """
    config = config or EstimatorConfig()
    if scenario.n_sensors != len(angles):
        raise ValueError(f"{scenario.n_sensors} sensors but {len(angles)} angles")

    length = _length_scale(scenario.sensors)
    sensors = _scaled(scenario.sensors, length)
    Q = scenario.noise_cov

    design = design_matrices(sensors, angles, Q)
    h_a, ratio_a, report_a = _solve_pass(design, sensors, None, config)
    first_pass = _to_result(
        h_a, length, scenario.sensors, ratio_a, EstimationStage.PASS_A, report_a
    )
    logger.debug(f"Pass A: {first_pass.estimate} eig_ratio={ratio_a:.3e}")

    if not (config.two_stage or config.sign_constraints):
        return first_pass

    flags: list[str] = []
    sign_hints = _sign_hints(h_a.rho) if config.sign_constraints else None
    if config.two_stage:
        rho = h_a.rho / np.linalg.norm(h_a.rho)
        g = max(h_a.g, 0.0)
        ranges = np.array([np.linalg.norm(rho - s.position * g) for s in sensors])
        design = design_matrices(sensors, angles, Q, ranges)
        if design.weighting_fallback:
            flags.append("stage2_conditioning_guard")

    try:
        h_2, ratio_2, report_2 = _solve_pass(design, sensors, sign_hints, config)
    except SolverError as e:
        logger.warning(f"Stage 2 failed ({e.code}), returning the Pass-A estimate")
        return first_pass.model_copy(update={"flags": [*flags, "pass_a_fallback"]})

    return _to_result(
        h_2,
        length,
        scenario.sensors,
        ratio_2,
        EstimationStage.STAGE_2,
        report_2,
        first_pass=first_pass,
        flags=flags,
    )
