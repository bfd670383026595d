from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict


def _as_float_array(value: object) -> np.ndarray:
    array = np.array(value, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValueError("array entries must be finite")
    return array


def _as_vector3(value: object) -> np.ndarray:
    array = _as_float_array(value).reshape(-1)
    if array.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {array.shape}")
    return array


def _as_vector(value: object) -> np.ndarray:
    return _as_float_array(value).reshape(-1)


def _as_matrix(value: object) -> np.ndarray:
    array = _as_float_array(value)
    if array.ndim != 2:
        raise ValueError(f"expected a matrix, got {array.ndim} dimensions")
    return array


# numpy-backed field types, coerced from any array-like input
Vector3 = Annotated[np.ndarray, BeforeValidator(_as_vector3)]
Vector = Annotated[np.ndarray, BeforeValidator(_as_vector)]
Matrix = Annotated[np.ndarray, BeforeValidator(_as_matrix)]


class ArrayModel(BaseModel):
    """Base model for immutable value types holding numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
