import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from conemapr.schemas.geometry import SourceMpr

ESTIMATOR_LABELS = ("proposed", "sdr", "mle")
CRLB_LABEL = "crlb"


class SweepAxis(str, Enum):
    NOISE = "noise"  # axis values are noise powers in rad^2
    RANGE = "range"  # axis values are source ranges in m


class GeometryParams(BaseModel):
    """Random sensor network layout."""

    model_config = ConfigDict(frozen=True)

    n_sensors: int = Field(default=12, ge=4)
    cube_half_width: float = Field(default=250.0, gt=0.0)  # m
    min_sin_angle: float = Field(default=0.05, ge=0.0, lt=1.0)


class SweepConfig(BaseModel):
    """Monte-Carlo sweep over noise powers or over source ranges."""

    model_config = ConfigDict(frozen=True)

    n_geometries: int = Field(default=10, gt=0)
    n_runs: int = Field(default=1000, gt=0)
    seed: int = Field(default=0, ge=0)
    noise_powers: list[float] = Field(default_factory=lambda: [1e-5, 1e-4, 1e-3])  # rad^2
    ranges: list[float] = Field(default_factory=lambda: [1e3, 1e4, 1e5, 1e6])  # m
    source_range: float = Field(default=1000.0, gt=0.0)  # fixed range of the noise sweep
    noise_power: float = Field(default=1e-6, gt=0.0)  # fixed power of the range sweep
    estimators: list[str] = Field(default_factory=lambda: ["proposed", "mle"])
    threads: int | None = Field(default=None, gt=0)
    tol: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_axes(self) -> "SweepConfig":
        if any(p <= 0.0 for p in self.noise_powers):
            raise ValueError("noise powers must be positive")
        if any(r <= 0.0 for r in self.ranges):
            raise ValueError("ranges must be positive")
        unknown = [e for e in self.estimators if e not in ESTIMATOR_LABELS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; choose from {list(ESTIMATOR_LABELS)}")
        return self


class MseRecord(BaseModel):
    """One row of results.csv."""

    model_config = ConfigDict(frozen=True)

    axis_value: float  # rad^2 (noise sweep) or m (range sweep)
    estimator: str
    mse_angle: float  # rad^2, NaN for bound-only rows
    mse_g: float  # m^-2
    crlb_angle: float
    crlb_g: float
    failures: int = 0
    trials: int = 0

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0


class TrialOutcome(BaseModel):
    """Estimates of one Monte-Carlo trial, keyed by estimator label (None = failed)."""

    model_config = ConfigDict(frozen=True)

    geometry: int
    run: int
    truth: SourceMpr
    estimates: dict[str, SourceMpr | None]
    crlb_angle: float
    crlb_g: float


class SingleShotReport(BaseModel):
    """Truth, estimates and CRLB standard deviations of one seeded trial."""

    model_config = ConfigDict(frozen=True)

    truth: SourceMpr
    estimates: dict[str, SourceMpr | None]
    crlb_std: tuple[float, float, float]  # azimuth, elevation, inverse-range
    eig_ratio: float = math.nan
    flags: list[str] = Field(default_factory=list)
