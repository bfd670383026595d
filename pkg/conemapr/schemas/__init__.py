from conemapr.schemas.conic import ConicProblem, LinearEquality, SocRow, SolverReport, SolverStatus
from conemapr.schemas.crlb import CrlbResult
from conemapr.schemas.estimator import (
    DesignMatrices,
    EstimationResult,
    EstimationStage,
    EstimatorConfig,
    StackedUnknown,
)
from conemapr.schemas.geometry import CartesianPoint, SourceMpr, UnitBearing, wrap_angle
from conemapr.schemas.measurement import Measurements, Scenario, SensorArray
from conemapr.schemas.mle import GnConfig, GnResult
from conemapr.schemas.montecarlo import (
    GeometryParams,
    MseRecord,
    SingleShotReport,
    SweepAxis,
    SweepConfig,
    TrialOutcome,
)
from conemapr.schemas.run_config import RunConfig, RunMode

__all__ = [
    "CartesianPoint",
    "ConicProblem",
    "CrlbResult",
    "DesignMatrices",
    "EstimationResult",
    "EstimationStage",
    "EstimatorConfig",
    "GeometryParams",
    "GnConfig",
    "GnResult",
    "LinearEquality",
    "Measurements",
    "MseRecord",
    "RunConfig",
    "RunMode",
    "Scenario",
    "SensorArray",
    "SingleShotReport",
    "SocRow",
    "SolverReport",
    "SolverStatus",
    "SourceMpr",
    "StackedUnknown",
    "SweepAxis",
    "SweepConfig",
    "TrialOutcome",
    "UnitBearing",
    "wrap_angle",
]
