"""World-space gaze rays to pixel coordinates on the text image.

The transform chain is: intersect the gaze ray with the plane of the
virtual screen, express the hit point in the screen's local frame
(u rightward, v upward, meters, origin at the screen center), then scale
into image pixels (origin top-left, y down). Every step is a pure
function over immutable value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

# Dimensionless noise floor for parallel-ray and unit-norm checks.
EPS_PARALLEL = 1e-9
EPS_UNIT = 1e-9
# Max distance (m) a point may sit off the screen plane and still be
# treated as on it.
EPS_ON_PLANE = 1e-6

Vec3 = Tuple[float, float, float]


def _dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _norm(a: Vec3) -> float:
    return math.sqrt(_dot(a, a))


@dataclass(frozen=True)
class WorldPoint:
    """A point in the world frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite world point: {self}")

    def as_tuple(self) -> Vec3:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion, Hamilton convention, rotating local frame vectors
    into the parent frame via q * v * q^-1."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ValueError("zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vec3) -> Vec3:
        # v' = v + 2*w*(q_v x v) + 2*(q_v x (q_v x v))
        qv = (self.x, self.y, self.z)
        t = _cross(qv, v)
        t = (2.0 * t[0], 2.0 * t[1], 2.0 * t[2])
        c = _cross(qv, t)
        return (
            v[0] + self.w * t[0] + c[0],
            v[1] + self.w * t[1] + c[1],
            v[2] + self.w * t[2] + c[2],
        )

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_rad: float) -> "Quaternion":
        n = _norm(axis)
        if n == 0.0:
            raise ValueError("zero rotation axis")
        h = angle_rad / 2.0
        s = math.sin(h) / n
        return Quaternion(math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s)


@dataclass(frozen=True)
class GazeRay:
    """Gaze ray in world space at time t (ms since session start).

    Modeled as a single ray; whether the tracker reports a monocular or a
    fused binocular ray is up to the device and irrelevant downstream.
    """

    origin: WorldPoint
    direction: Vec3
    t: float = 0.0

    def __post_init__(self):
        n = _norm(self.direction)
        if abs(n - 1.0) > EPS_UNIT:
            raise ValueError(f"gaze direction not unit length (|d|={n})")


@dataclass(frozen=True)
class ScreenPose:
    """Position, orientation and physical extent of the virtual text screen.

    ``orientation`` maps screen-frame vectors (+x right, +y up, +z normal)
    into the world frame.
    """

    center: WorldPoint
    orientation: Quaternion
    width_m: float
    height_m: float

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError("screen extent must be positive")
        if abs(self.orientation.norm() - 1.0) > EPS_UNIT:
            raise ValueError("screen orientation quaternion not normalized")

    def normal(self) -> Vec3:
        return self.orientation.rotate((0.0, 0.0, 1.0))


@dataclass(frozen=True)
class ImageDims:
    """Pixel dimensions of the cropped text image."""

    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("image dims must be >= 1 px")


@dataclass(frozen=True)
class PixelPoint:
    """Real-valued image coordinates, origin top-left, y down. May lie
    outside the image: off-text gaze stays representable."""

    x_px: float
    y_px: float

    def __post_init__(self):
        if not (math.isfinite(self.x_px) and math.isfinite(self.y_px)):
            raise ValueError(f"non-finite pixel point: {self}")


def intersect_ray_screen(ray: GazeRay, pose: ScreenPose) -> Optional[WorldPoint]:
    """Intersect a gaze ray with the (infinite) screen plane.

    Returns None for rays parallel to the plane or hits behind the ray
    origin. Bounds against the physical screen extent are intentionally
    not checked here; off-screen gaze is resolved later in hit-testing.
    """
    n = pose.normal()
    denom = _dot(ray.direction, n)
    if abs(denom) < EPS_PARALLEL:
        return None
    o = ray.origin.as_tuple()
    c = pose.center.as_tuple()
    s = _dot((c[0] - o[0], c[1] - o[1], c[2] - o[2]), n) / denom
    if s < 0.0:
        return None
    d = ray.direction
    return WorldPoint(o[0] + s * d[0], o[1] + s * d[1], o[2] + s * d[2])


def world_to_screen_local(p: WorldPoint, pose: ScreenPose) -> Tuple[float, float]:
    """Express an on-plane world point in the screen's local frame.

    Applies the full inverse rigid transform (rotation included), so
    tilted screens come out right. Raises ValueError if ``p`` sits more
    than EPS_ON_PLANE off the plane.
    """
    c = pose.center.as_tuple()
    d = (p.x - c[0], p.y - c[1], p.z - c[2])
    local = pose.orientation.conjugate().rotate(d)
    if abs(local[2]) > EPS_ON_PLANE:
        raise ValueError(f"point is {local[2]:.3e} m off the screen plane")
    return (local[0], local[1])


def screen_local_to_pixel(
    uv: Tuple[float, float], pose: ScreenPose, dims: ImageDims
) -> PixelPoint:
    """Scale screen-local meters into image pixels.

    The screen center maps to the image center; the y axis is mirrored
    (v up, pixels down), so the top-left screen corner maps to (0, 0).
    """
    u, v = uv
    x_px = u * (dims.width_px / pose.width_m) + dims.width_px / 2.0
    y_px = dims.height_px / 2.0 - v * (dims.height_px / pose.height_m)
    return PixelPoint(x_px, y_px)


def pixel_to_screen_local(
    p: PixelPoint, pose: ScreenPose, dims: ImageDims
) -> Tuple[float, float]:
    """Exact algebraic inverse of :func:`screen_local_to_pixel`."""
    u = (p.x_px - dims.width_px / 2.0) * (pose.width_m / dims.width_px)
    v = (dims.height_px / 2.0 - p.y_px) * (pose.height_m / dims.height_px)
    return (u, v)


def gaze_to_pixel(
    ray: GazeRay, pose: ScreenPose, dims: ImageDims
) -> Optional[PixelPoint]:
    """Full chain: ray -> plane hit -> local frame -> pixels.

    None when the ray misses the plane (parallel or behind the origin).
    """
    hit = intersect_ray_screen(ray, pose)
    if hit is None:
        return None
    return screen_local_to_pixel(world_to_screen_local(hit, pose), pose, dims)
