from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from conemapr.schemas.common import ArrayModel, Matrix, Vector

SYMMETRY_TOL = 1e-12


def svec_length(dim: int) -> int:
    """Length of the upper-triangular vectorisation of a dim x dim symmetric matrix."""
    return dim * (dim + 1) // 2


class SolverStatus(str, Enum):
    """Outcome of a conic solve."""

    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


class LinearEquality(ArrayModel):
    """tr{A H} = b."""

    matrix: Matrix
    rhs: float
    label: str = ""

    @field_validator("matrix")
    @classmethod
    def _symmetric(cls, value: np.ndarray) -> np.ndarray:
        if value.shape[0] != value.shape[1]:
            raise ValueError("equality matrix must be square")
        if np.max(np.abs(value - value.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("equality matrix must be symmetric")
        return value


class SocRow(ArrayModel):
    """||selector @ svec(H)|| <= rhs @ svec(H)."""

    selector: Matrix
    rhs: Vector
    label: str = ""


class ConicProblem(ArrayModel):
    """min tr{M0 H} s.t. linear equalities, SOC rows over svec(H), H PSD."""

    dim: int = Field(gt=0)
    objective: Matrix
    equalities: list[LinearEquality] = Field(default_factory=list)
    socs: list[SocRow] = Field(default_factory=list)
    psd: bool = True

    @model_validator(mode="after")
    def _consistent(self) -> "ConicProblem":
        m = self.dim
        if self.objective.shape != (m, m):
            raise ValueError(f"objective shape {self.objective.shape} != ({m}, {m})")
        if np.max(np.abs(self.objective - self.objective.T)) > SYMMETRY_TOL * max(
            1.0, float(np.max(np.abs(self.objective)))
        ):
            raise ValueError("objective must be symmetric")
        for eq in self.equalities:
            if eq.matrix.shape != (m, m):
                raise ValueError(f"equality '{eq.label}' has shape {eq.matrix.shape}")
        n_vec = svec_length(m)
        for row in self.socs:
            if row.selector.shape[1] != n_vec or row.rhs.shape != (n_vec,):
                raise ValueError(f"SOC row '{row.label}' references invalid svec indices")
        if not self.psd:
            raise ValueError("ConicProblem always carries the PSD block")
        return self


class SolverReport(BaseModel):
    """Diagnostics of one conic solve."""

    model_config = ConfigDict(frozen=True)

    status: SolverStatus
    objective_value: float
    iterations: int = 0
    max_equality_residual: float = 0.0
    backend: str = ""
