import numpy as np
from numbers import Number
from dataclasses import dataclass
from typing import Tuple


__all__ = [
    "Position3",
    "euclidean_distance",
    "clamp_to_area",
    "link_angles"
]


@dataclass(frozen=True)
class Position3:
    """
    Point in the scenario's 3D Cartesian frame, in meters.
    """
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"Position3.{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.z < 0:
            raise ValueError(f"Position3.z must be non-negative, got {self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def moved(self, dx: Number, dy: Number) -> "Position3":
        return Position3(x=self.x + dx, y=self.y + dy, z=self.z)


def euclidean_distance(a: Position3, b: Position3) -> float:
    """
    Euclidean norm of the difference of two positions.

    Args:
        a (Position3): First point.
        b (Position3): Second point.

    Returns:
        float: Distance in meters.
    """
    return float(np.linalg.norm(a.as_array() - b.as_array()))


def clamp_to_area(
        point: Position3,
        bbox: Tuple[Number, Number, Number, Number]
) -> Tuple[Position3, bool]:
    """
    Clamp the horizontal coordinates of a point into a rectangle.

    Args:
        point (Position3): Point to clamp.
        bbox (Tuple[Number, Number, Number, Number]): (minx, miny, maxx, maxy).

    Returns:
        Tuple[Position3, bool]: The clamped point and whether clamping was
            needed (the point was outside the rectangle).
    """
    minx, miny, maxx, maxy = bbox
    x = min(max(point.x, minx), maxx)
    y = min(max(point.y, miny), maxy)
    outside = (x != point.x) or (y != point.y)
    return Position3(x=x, y=y, z=point.z), outside


def link_angles(src: Position3, dst: Position3) -> Tuple[float, float]:
    """
    Elevation and azimuth of the vector from `src` to `dst`.

    Returns:
        Tuple[float, float]: (theta, xi) in radians; theta = arcsin(dz / d),
            xi = atan2(dy, dx).
    """
    delta = dst.as_array() - src.as_array()
    distance = np.linalg.norm(delta)
    if distance == 0:
        raise ValueError("Link angles are undefined for coincident points")
    theta = float(np.arcsin(np.clip(delta[2] / distance, -1.0, 1.0)))
    xi = float(np.arctan2(delta[1], delta[0]))
    return theta, xi
