from pydantic import BaseModel, ConfigDict, Field

from conemapr.schemas.geometry import SourceMpr


class GnConfig(BaseModel):
    """Damped Gauss-Newton settings."""

    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(default=50, gt=0)
    step_tol: float = Field(default=1e-10, gt=0.0)
    damping: float = Field(default=0.0, ge=0.0)  # initial Levenberg parameter
    max_damping: float = Field(default=1e12, gt=0.0)


class GnResult(BaseModel):
    """Gauss-Newton outcome with its cost history."""

    model_config = ConfigDict(frozen=True)

    estimate: SourceMpr
    iterations: int
    costs: list[float]
    converged: bool
