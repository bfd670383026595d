from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from conemapr.schemas.montecarlo import (
    ESTIMATOR_LABELS,
    GeometryParams,
    SweepAxis,
    SweepConfig,
)


class RunMode(str, Enum):
    NOISE_SWEEP = "noise-sweep"
    RANGE_SWEEP = "range-sweep"
    SINGLE_SHOT = "single-shot"
    CRLB_ONLY = "crlb-only"


class RunConfig(BaseModel):
    """Flat run configuration as read from --config JSON and the CLI flags.

    `range` and `noise` are the fixed source range and noise power of a run. In a noise sweep
    an explicit `noise` collapses `noise_powers` to that level; in a range sweep an explicit
    `range` collapses `ranges`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: RunMode = RunMode.SINGLE_SHOT
    seed: int = Field(default=0, ge=0)

    sensors: int = Field(default=12, ge=4)
    cube_half_width: float = Field(default=250.0, gt=0.0)
    min_sin_angle: float = Field(default=0.05, ge=0.0, lt=1.0)

    range: float | None = Field(default=None, gt=0.0)  # m
    noise: float | None = Field(default=None, gt=0.0)  # rad^2
    noise_powers: list[float] = Field(default_factory=lambda: [1e-5, 1e-4, 1e-3])
    ranges: list[float] = Field(default_factory=lambda: [1e3, 1e4, 1e5, 1e6])
    axis: SweepAxis = SweepAxis.NOISE  # crlb-only mode

    geometries: int = Field(default=10, gt=0)
    runs: int = Field(default=1000, gt=0)
    estimators: list[str] = Field(default_factory=lambda: ["proposed", "mle"])

    out: Path = Path("results")
    plot: bool = True
    db: bool = False
    threads: int | None = Field(default=None, gt=0)
    tol: float | None = Field(default=None, gt=0.0)
    dump_problem: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        unknown = [e for e in self.estimators if e not in ESTIMATOR_LABELS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; choose from {list(ESTIMATOR_LABELS)}")
        if not self.noise_powers or not self.ranges:
            raise ValueError("sweep axes must not be empty")
        return self

    @property
    def source_range(self) -> float:
        return self.range if self.range is not None else 1000.0

    @property
    def noise_power(self) -> float:
        """Fixed noise power: 1e-4 rad^2 for a single shot, 1e-6 rad^2 for the range sweep."""
        if self.noise is not None:
            return self.noise
        return 1e-4 if self.mode == RunMode.SINGLE_SHOT else 1e-6

    @property
    def sweep_axis(self) -> SweepAxis:
        if self.mode == RunMode.NOISE_SWEEP:
            return SweepAxis.NOISE
        if self.mode == RunMode.RANGE_SWEEP:
            return SweepAxis.RANGE
        return self.axis

    def geometry_params(self) -> GeometryParams:
        return GeometryParams(
            n_sensors=self.sensors,
            cube_half_width=self.cube_half_width,
            min_sin_angle=self.min_sin_angle,
        )

    def sweep_config(self) -> SweepConfig:
        axis = self.sweep_axis
        noise_powers = self.noise_powers
        ranges = self.ranges
        if axis == SweepAxis.NOISE and self.noise is not None:
            noise_powers = [self.noise]
        if axis == SweepAxis.RANGE and self.range is not None:
            ranges = [self.range]
        return SweepConfig(
            n_geometries=self.geometries,
            n_runs=self.runs,
            seed=self.seed,
            noise_powers=noise_powers,
            ranges=ranges,
            source_range=self.source_range,
            noise_power=self.noise_power,
            estimators=self.estimators,
            threads=self.threads,
            tol=self.tol,
        )
