import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from conemapr.schemas.common import ArrayModel, Vector3

UNIT_NORM_TOL = 1e-12


def wrap_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if -math.pi < angle <= math.pi:
        return angle
    return math.pi - (math.pi - angle) % (2.0 * math.pi)


class SourceMpr(BaseModel):
    """Source in modified polar representation (azimuth, elevation, inverse-range)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    azimuth: float  # rad, (-pi, pi]
    elevation: float = Field(ge=-math.pi / 2, le=math.pi / 2)  # rad
    inverse_range: float = Field(ge=0.0)  # 1/m, 0 = far field

    @field_validator("azimuth")
    @classmethod
    def _wrap_azimuth(cls, value: float) -> float:
        return wrap_angle(value)


class UnitBearing(ArrayModel):
    """Unit direction vector rho."""

    components: Vector3

    @field_validator("components")
    @classmethod
    def _unit_norm(cls, value: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(value))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"bearing norm {norm!r} is not 1")
        return value


class CartesianPoint(BaseModel):
    """Point in the local Cartesian frame (meters)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, array: np.ndarray) -> "CartesianPoint":
        x, y, z = (float(v) for v in np.asarray(array, dtype=float).reshape(3))
        return cls(x=x, y=y, z=z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])
