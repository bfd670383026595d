"""Seeded Monte-Carlo evaluation of the estimators against the CRLB.

Every random quantity comes from its own stream keyed by (seed, stream, geometry[, run]), so a
trial sees the same sensors, source and standard-normal noise at every axis value of a sweep,
and results do not depend on the number of worker processes.
"""

import logging
import math
import os
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor

import numpy as np

from conemapr.config import settings
from conemapr.exceptions import (
    DegenerateGeometryError,
    DivergenceError,
    DomainError,
    RejectionOverflowError,
    SingularFimError,
    SolverError,
)
from conemapr.schemas.estimator import EstimatorConfig
from conemapr.schemas.geometry import SourceMpr, wrap_angle
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.schemas.montecarlo import (
    CRLB_LABEL,
    GeometryParams,
    MseRecord,
    SingleShotReport,
    SweepAxis,
    SweepConfig,
    TrialOutcome,
)
from conemapr.services.crlb import crlb_mpr
from conemapr.services.estimator import estimate
from conemapr.services.geometry import mpr_to_unit
from conemapr.services.measurement import cone_angles, simulate
from conemapr.services.mle import gauss_newton

logger = logging.getLogger(__name__)

GEOMETRY_STREAM = 0
COVARIANCE_STREAM = 1
TRIAL_STREAM = 2

FAILURE_WARN_RATE = 0.01

# Failures an estimator may raise on one trial; they are counted, not propagated
TRIAL_ERRORS = (SolverError, DegenerateGeometryError, DivergenceError, DomainError)

# sensors, Q, source range, layout params, seed, geometry, run, estimator labels, solver tol
TrialTask = tuple[
    list[SensorArray],
    np.ndarray,
    float,
    GeometryParams,
    int,
    int,
    int,
    tuple[str, ...],
    float | None,
]


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


# --- scenario generation --------------------------------------------------------------


def _min_abs_sin(sensors: list[SensorArray], source: SourceMpr) -> float:
    try:
        angles = cone_angles(sensors, source)
    except DomainError:
        return 0.0
    return float(np.min(np.abs(np.sin(angles))))


def random_geometry(
    params: GeometryParams,
    rng: np.random.Generator,
    source: SourceMpr | None = None,
) -> list[SensorArray]:
    """Sensors uniform in the cube, attitudes from uniform azimuth/elevation.

    With a source, the whole layout is redrawn until every |sin psi_i| >= min_sin_angle.

    Raises:
        RejectionOverflowError: no acceptable layout within settings.rejection_limit draws
    """
    n, width = params.n_sensors, params.cube_half_width
    for _ in range(settings.rejection_limit):
        positions = rng.uniform(-width, width, size=(n, 3))
        azimuths = rng.uniform(-math.pi, math.pi, size=n)
        elevations = rng.uniform(-math.pi / 2, math.pi / 2, size=n)
        sensors = [
            SensorArray(position=p, attitude=mpr_to_unit(az, el).components)
            for p, az, el in zip(positions, azimuths, elevations)
        ]
        if source is None or _min_abs_sin(sensors, source) >= params.min_sin_angle:
            return sensors

    raise RejectionOverflowError(
        "no sensor layout clears the cone-axis guard", draws=settings.rejection_limit
    )


def random_covariance(n: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Diagonal Q with U(0.5, 1.5) shape rescaled so tr(Q) / n = sigma2."""
    weights = rng.uniform(0.5, 1.5, size=n)
    return np.diag(weights * (n * sigma2 / weights.sum()))


def random_source(
    sensors: list[SensorArray],
    params: GeometryParams,
    source_range: float,
    rng: np.random.Generator,
) -> SourceMpr:
    """Source at `source_range` with uniform azimuth/elevation, clear of poles and cone axes.

    Raises:
        RejectionOverflowError: no acceptable direction within settings.rejection_limit draws
    """
    for _ in range(settings.rejection_limit):
        azimuth = rng.uniform(-math.pi, math.pi)
        elevation = rng.uniform(-math.pi / 2, math.pi / 2)
        if math.cos(elevation) < params.min_sin_angle:
            continue
        source = SourceMpr(azimuth=azimuth, elevation=elevation, inverse_range=1.0 / source_range)
        if _min_abs_sin(sensors, source) >= params.min_sin_angle:
            return source

    raise RejectionOverflowError(
        "no source direction clears the guards", draws=settings.rejection_limit
    )


# --- metrics --------------------------------------------------------------------------


def mse_metrics(
    estimates: Sequence[SourceMpr],
    truths: Sequence[SourceMpr],
) -> tuple[float, float]:
    """(mean of wrapped dphi^2 + dtheta^2, mean of dg^2); NaN for no pairs."""
    if len(estimates) != len(truths):
        raise ValueError(f"{len(estimates)} estimates but {len(truths)} truths")
    if not estimates:
        return math.nan, math.nan
    angle = [
        wrap_angle(e.azimuth - t.azimuth) ** 2 + (e.elevation - t.elevation) ** 2
        for e, t in zip(estimates, truths)
    ]
    g = [(e.inverse_range - t.inverse_range) ** 2 for e, t in zip(estimates, truths)]
    return float(np.mean(angle)), float(np.mean(g))


def _crlb_bounds(scenario: Scenario) -> tuple[float, float]:
    try:
        bound = crlb_mpr(scenario)
    except (DegenerateGeometryError, SingularFimError) as e:
        logger.debug(f"CRLB unavailable: {e.message}")
        return math.nan, math.nan
    return bound.angle_bound, bound.g_bound


# --- trials ---------------------------------------------------------------------------


def run_estimator(
    label: str,
    scenario: Scenario,
    angles: Measurements,
    tol: float | None = None,
) -> SourceMpr:
    """Run one estimator by label; the MLE starts from the true source."""
    if label == "proposed":
        return estimate(scenario, angles, EstimatorConfig(tol=tol)).estimate
    if label == "sdr":
        return estimate(scenario, angles, EstimatorConfig.plain_relaxation(tol)).estimate
    if label == "mle":
        if scenario.truth is None:
            raise DomainError("the MLE is initialised at the true source", operation="mle")
        return gauss_newton(angles, scenario, scenario.truth)
    raise ValueError(f"unknown estimator {label!r}")


def run_trial(task: TrialTask) -> TrialOutcome:
    sensors, noise_cov, source_range, params, seed, geometry, run, labels, tol = task
    rng = stream(seed, TRIAL_STREAM, geometry, run)
    truth = random_source(sensors, params, source_range, rng)
    scenario = Scenario(sensors=sensors, noise_cov=noise_cov, truth=truth)
    crlb_angle, crlb_g = _crlb_bounds(scenario)
    angles = simulate(scenario, rng)

    estimates: dict[str, SourceMpr | None] = {}
    for label in labels:
        try:
            estimates[label] = run_estimator(label, scenario, angles, tol)
        except TRIAL_ERRORS as e:
            logger.debug(f"{label} failed on geometry {geometry} run {run}: {e.code}")
            estimates[label] = None

    return TrialOutcome(
        geometry=geometry,
        run=run,
        truth=truth,
        estimates=estimates,
        crlb_angle=crlb_angle,
        crlb_g=crlb_g,
    )


def crlb_trial(task: TrialTask) -> TrialOutcome:
    """Bound-only trial: same draws as run_trial, no measurements."""
    sensors, noise_cov, source_range, params, seed, geometry, run, _, _ = task
    rng = stream(seed, TRIAL_STREAM, geometry, run)
    truth = random_source(sensors, params, source_range, rng)
    crlb_angle, crlb_g = _crlb_bounds(Scenario(sensors=sensors, noise_cov=noise_cov, truth=truth))
    return TrialOutcome(
        geometry=geometry,
        run=run,
        truth=truth,
        estimates={},
        crlb_angle=crlb_angle,
        crlb_g=crlb_g,
    )


def _finite_mean(values: list[float]) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.nan


def aggregate(
    axis_value: float,
    outcomes: list[TrialOutcome],
    labels: Sequence[str],
) -> list[MseRecord]:
    """One record per estimator; failed trials are counted and left out of the MSE."""
    crlb_angle = _finite_mean([o.crlb_angle for o in outcomes])
    crlb_g = _finite_mean([o.crlb_g for o in outcomes])
    trials = len(outcomes)

    records = []
    for label in labels:
        pairs = [
            (o.estimates[label], o.truth)
            for o in outcomes
            if o.estimates.get(label) is not None
        ]
        failures = trials - len(pairs)
        if trials and failures / trials > FAILURE_WARN_RATE:
            logger.warning(f"{label} failed on {failures}/{trials} trials at {axis_value:g}")
        mse_angle, mse_g = mse_metrics([p[0] for p in pairs], [p[1] for p in pairs])
        records.append(
            MseRecord(
                axis_value=axis_value,
                estimator=label,
                mse_angle=mse_angle,
                mse_g=mse_g,
                crlb_angle=crlb_angle,
                crlb_g=crlb_g,
                failures=failures,
                trials=trials,
            )
        )
    return records


# --- sweeps ---------------------------------------------------------------------------


def _workers(threads: int | None) -> int:
    return threads or settings.threads or os.cpu_count() or 1


def _map(
    trial: Callable[[TrialTask], TrialOutcome],
    tasks: list[TrialTask],
    pool: Executor | None,
) -> list[TrialOutcome]:
    if pool is None:
        return [trial(task) for task in tasks]
    chunksize = max(1, len(tasks) // 64)
    return list(pool.map(trial, tasks, chunksize=chunksize))


def _axis(cfg: SweepConfig, axis: SweepAxis) -> list[tuple[float, float, float]]:
    """(axis value, source range, noise power) per point of the sweep."""
    if axis == SweepAxis.NOISE:
        return [(p, cfg.source_range, p) for p in cfg.noise_powers]
    return [(r, r, cfg.noise_power) for r in cfg.ranges]


def _sweep(
    cfg: SweepConfig,
    params: GeometryParams,
    axis: SweepAxis,
    trial: Callable[[TrialTask], TrialOutcome],
    labels: Sequence[str],
) -> Iterator[MseRecord]:
    geometries = [
        random_geometry(params, stream(cfg.seed, GEOMETRY_STREAM, j))
        for j in range(cfg.n_geometries)
    ]
    workers = _workers(cfg.threads)
    logger.info(
        f"{axis.value} sweep: {cfg.n_geometries} geometries x {cfg.n_runs} runs "
        f"on {workers} worker(s)"
    )

    labels_key = tuple(cfg.estimators)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for axis_value, source_range, noise_power in _axis(cfg, axis):
            tasks: list[TrialTask] = []
            for j, sensors in enumerate(geometries):
                Q = random_covariance(
                    params.n_sensors, noise_power, stream(cfg.seed, COVARIANCE_STREAM, j)
                )
                tasks += [
                    (sensors, Q, source_range, params, cfg.seed, j, run, labels_key, cfg.tol)
                    for run in range(cfg.n_runs)
                ]
            outcomes = _map(trial, tasks, pool)
            logger.info(f"{axis.value} = {axis_value:g}: {len(outcomes)} trials done")
            yield from aggregate(axis_value, outcomes, labels)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)


def iter_sweep(
    cfg: SweepConfig,
    params: GeometryParams,
    axis: SweepAxis,
) -> Iterator[MseRecord]:
    """Records of a sweep, yielded as each axis value completes."""
    return _sweep(cfg, params, axis, run_trial, cfg.estimators)


def run_noise_sweep(cfg: SweepConfig, params: GeometryParams | None = None) -> list[MseRecord]:
    return list(iter_sweep(cfg, params or GeometryParams(), SweepAxis.NOISE))


def run_range_sweep(cfg: SweepConfig, params: GeometryParams | None = None) -> list[MseRecord]:
    return list(iter_sweep(cfg, params or GeometryParams(), SweepAxis.RANGE))


def iter_crlb_only(
    cfg: SweepConfig,
    params: GeometryParams,
    axis: SweepAxis,
) -> Iterator[MseRecord]:
    """Bound-only records (estimator `crlb`, NaN MSE) over the same draws as the sweep."""
    return _sweep(cfg, params, axis, crlb_trial, [CRLB_LABEL])


def run_crlb_only(
    cfg: SweepConfig,
    params: GeometryParams | None = None,
    axis: SweepAxis = SweepAxis.NOISE,
) -> list[MseRecord]:
    return list(iter_crlb_only(cfg, params or GeometryParams(), axis))


# --- single shot ----------------------------------------------------------------------


def single_shot_scenario(
    seed: int,
    params: GeometryParams,
    source_range: float,
    noise_power: float,
) -> tuple[Scenario, Measurements]:
    """Scenario and measurements of geometry 0, run 0 of a sweep with the same seed."""
    sensors = random_geometry(params, stream(seed, GEOMETRY_STREAM, 0))
    Q = random_covariance(params.n_sensors, noise_power, stream(seed, COVARIANCE_STREAM, 0))
    rng = stream(seed, TRIAL_STREAM, 0, 0)
    truth = random_source(sensors, params, source_range, rng)
    scenario = Scenario(sensors=sensors, noise_cov=Q, truth=truth)
    return scenario, simulate(scenario, rng)


def run_single_shot(
    seed: int,
    params: GeometryParams,
    source_range: float,
    noise_power: float,
    estimators: Sequence[str] = ("proposed", "mle"),
    tol: float | None = None,
) -> SingleShotReport:
    """One seeded trial; estimator errors propagate."""
    scenario, angles = single_shot_scenario(seed, params, source_range, noise_power)

    estimates: dict[str, SourceMpr | None] = {}
    eig_ratio, flags = math.nan, []
    for label in estimators:
        if label == "proposed":
            result = estimate(scenario, angles, EstimatorConfig(tol=tol))
            estimates[label] = result.estimate
            eig_ratio, flags = result.eig_ratio, list(result.flags)
        else:
            estimates[label] = run_estimator(label, scenario, angles, tol)

    try:
        cov = crlb_mpr(scenario).cov_mpr
        crlb_std = tuple(float(math.sqrt(v)) for v in np.diag(cov))
    except (DegenerateGeometryError, SingularFimError) as e:
        logger.warning(f"CRLB unavailable: {e.message}")
        crlb_std = (math.nan, math.nan, math.nan)

    return SingleShotReport(
        truth=scenario.truth,
        estimates=estimates,
        crlb_std=crlb_std,
        eig_ratio=eig_ratio,
        flags=flags,
    )
