"""Conversions between Cartesian and modified polar representation.

A source at range r along unit bearing rho sits at u = rho / g with g = 1 / r.
g = 0 is a legal far-field source without a Cartesian image.
"""

import math

import numpy as np

from conemapr.exceptions import DomainError
from conemapr.schemas.geometry import CartesianPoint, SourceMpr, UnitBearing, wrap_angle

__all__ = [
    "cartesian_to_mpr",
    "mpr_to_cartesian",
    "mpr_to_unit",
    "rho_jacobian",
    "unit_to_angles",
    "wrap_angle",
]


def mpr_to_unit(azimuth: float, elevation: float) -> UnitBearing:
    """Unit bearing rho = [cos(el)cos(az), cos(el)sin(az), sin(el)]."""
    if abs(elevation) > math.pi / 2:
        raise DomainError(
            "elevation outside [-pi/2, pi/2]", operation="mpr_to_unit", value=elevation
        )
    cos_el = math.cos(elevation)
    components = np.array(
        [cos_el * math.cos(azimuth), cos_el * math.sin(azimuth), math.sin(elevation)]
    )
    # renormalise to absorb the last-ulp error of the trig products
    return UnitBearing(components=components / np.linalg.norm(components))


def unit_to_angles(rho: np.ndarray) -> tuple[float, float]:
    """(azimuth, elevation) of a direction; azimuth is 0 at the poles."""
    x, y, z = (float(v) for v in rho)
    horizontal = math.hypot(x, y)
    azimuth = math.atan2(y, x) if horizontal > 0.0 else 0.0
    return wrap_angle(azimuth), math.atan2(z, horizontal)


def mpr_to_cartesian(u: SourceMpr) -> CartesianPoint:
    """u = rho / g."""
    if u.inverse_range <= 0.0:
        raise DomainError(
            "far-field source (inverse_range = 0) has no Cartesian image",
            operation="mpr_to_cartesian",
            value=u.inverse_range,
        )
    rho = mpr_to_unit(u.azimuth, u.elevation).components
    return CartesianPoint.from_array(rho / u.inverse_range)


def cartesian_to_mpr(p: CartesianPoint) -> SourceMpr:
    point = p.as_array()
    r = float(np.linalg.norm(point))
    if r == 0.0:
        raise DomainError("origin has no MPR image", operation="cartesian_to_mpr", value=point)
    azimuth, elevation = unit_to_angles(point)
    return SourceMpr(azimuth=azimuth, elevation=elevation, inverse_range=1.0 / r)


def rho_jacobian(azimuth: float, elevation: float) -> np.ndarray:
    """3x2 matrix [d rho / d azimuth, d rho / d elevation]."""
    ca, sa = math.cos(azimuth), math.sin(azimuth)
    ce, se = math.cos(elevation), math.sin(elevation)
    return np.array(
        [
            [-ce * sa, -se * ca],
            [ce * ca, -se * sa],
            [0.0, ce],
        ]
    )
