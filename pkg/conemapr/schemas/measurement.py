import math

import numpy as np
from pydantic import Field, field_validator, model_validator

from conemapr.schemas.common import ArrayModel, Matrix, Vector, Vector3
from conemapr.schemas.geometry import UNIT_NORM_TOL, SourceMpr

MIN_SENSORS = 4
SYMMETRY_TOL = 1e-12


class SensorArray(ArrayModel):
    """1-D linear array: known position s_i and unit attitude a_i."""

    position: Vector3  # m
    attitude: Vector3  # unit axis of the array

    @field_validator("attitude")
    @classmethod
    def _unit_attitude(cls, value: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(value))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"attitude norm {norm!r} is not 1")
        return value


class Scenario(ArrayModel):
    """Sensor set, noise covariance Q (rad^2) and optional true source."""

    sensors: list[SensorArray]
    noise_cov: Matrix
    truth: SourceMpr | None = None
    # Zero-noise path for exactness checks; noise_cov is then not required to be SPD
    noiseless: bool = False

    @model_validator(mode="after")
    def _check_shapes(self) -> "Scenario":
        n = len(self.sensors)
        if n < MIN_SENSORS:
            raise ValueError(f"need at least {MIN_SENSORS} sensors, got {n}")
        if self.noise_cov.shape != (n, n):
            raise ValueError(f"noise_cov shape {self.noise_cov.shape} does not match {n} sensors")
        scale = max(1.0, float(np.max(np.abs(self.noise_cov))))
        if np.max(np.abs(self.noise_cov - self.noise_cov.T)) > SYMMETRY_TOL * scale:
            raise ValueError("noise_cov is not symmetric")
        if not self.noiseless:
            try:
                np.linalg.cholesky(self.noise_cov)
            except np.linalg.LinAlgError as e:
                raise ValueError("noise_cov is not positive definite") from e
        return self

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    def positions(self) -> np.ndarray:
        """Sensor positions stacked as an N x 3 array."""
        return np.stack([s.position for s in self.sensors])

    def attitudes(self) -> np.ndarray:
        """Sensor attitudes stacked as an N x 3 array."""
        return np.stack([s.attitude for s in self.sensors])


class Measurements(ArrayModel):
    """Measured cone angles psi (rad)."""

    angles: Vector = Field(description="N cone angles in [0, pi]")

    @field_validator("angles")
    @classmethod
    def _in_range(cls, value: np.ndarray) -> np.ndarray:
        if np.any(value < 0.0) or np.any(value > math.pi):
            raise ValueError("cone angles must lie in [0, pi]")
        return value

    def __len__(self) -> int:
        return len(self.angles)
