from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from conemapr.schemas.common import ArrayModel, Matrix, Vector
from conemapr.schemas.conic import SolverReport
from conemapr.schemas.geometry import CartesianPoint, SourceMpr


class EstimationStage(str, Enum):
    """Which solve produced an estimate."""

    PASS_A = "pass_a"  # W = Q^-1, no sign constraints
    STAGE_2 = "stage_2"  # W = (B Q B^T)^-1 with sign constraints


class StackedUnknown(ArrayModel):
    """h = [g, rho^T, r_1, ..., r_N]^T (1-based: h_1 = g, h_2..h_4 = rho, h_{4+i} = r_i)."""

    h: Vector

    @field_validator("h")
    @classmethod
    def _length(cls, value: np.ndarray) -> np.ndarray:
        if value.shape[0] < 5:
            raise ValueError(f"stacked unknown needs at least 5 entries, got {value.shape[0]}")
        return value

    @property
    def g(self) -> float:
        return float(self.h[0])

    @property
    def rho(self) -> np.ndarray:
        return self.h[1:4]

    @property
    def ranges(self) -> np.ndarray:
        return self.h[4:]


class DesignMatrices(ArrayModel):
    """Pseudo-linear system F h = B n and its weighting W."""

    F: Matrix
    B: Matrix
    W: Matrix
    weighting_fallback: bool = False  # W = Q^-1 kept by the conditioning guard


class EstimatorConfig(BaseModel):
    """Switches for the relaxation variants."""

    model_config = ConfigDict(frozen=True)

    tighten: bool = True  # SOC rows from the range/inverse-range products
    sign_constraints: bool = True  # second pass with per-axis sign rows
    two_stage: bool = True  # rebuild W = (B Q B^T)^-1 from the first estimate
    tol: float | None = Field(default=None, gt=0.0)  # None -> settings.solver_tol

    @classmethod
    def plain_relaxation(cls, tol: float | None = None) -> "EstimatorConfig":
        return cls(tighten=False, sign_constraints=False, two_stage=False, tol=tol)


class EstimationResult(ArrayModel):
    """Recovered MPR estimate with diagnostics from the solve that produced it."""

    estimate: SourceMpr
    h_star: StackedUnknown
    eig_ratio: float = Field(ge=1.0)
    constraint_residual: float
    stage: EstimationStage
    solver: SolverReport
    position: CartesianPoint | None = None
    first_pass: "EstimationResult | None" = None
    flags: list[str] = Field(default_factory=list)


EstimationResult.model_rebuild()
