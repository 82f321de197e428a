"""Oriented 3D boxes, rigid transforms, distances, containment and IoU.

Conventions used throughout the package:

* Points are float arrays of shape ``(3,)`` or ``(N, 3)``; no wrapper class.
* ``Box3D`` extents are full lengths along the box-local axes; ``yaw`` rotates
  counterclockwise about +z viewed from above (KITTI lidar convention after
  label conversion) and is normalized to ``(-pi, pi]``.
* Boxes are closed: boundary points count as inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LIDAR_FRAME = "lidar"
CAMERA_FRAME = "camera"
_FRAMES = (LIDAR_FRAME, CAMERA_FRAME)

# Degenerate rotated-rectangle overlaps (shared edges, collinear vertices)
# produce clipped polygons of this magnitude; treat them as empty.
_AREA_EPS = 1e-12


def wrap_angle(angle: float) -> float:
    """Normalize an angle in radians to the interval (-pi, pi]."""
    wrapped = (angle + math.pi) % (2.0 * math.pi) - math.pi
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D bounding box: center, full extents, yaw about vertical.

    Attributes:
        cx, cy, cz: center coordinates in meters.
        dx, dy, dz: full extents in meters, all strictly positive.
        yaw: rotation about +z in radians, stored normalized to (-pi, pi].
        frame: coordinate frame tag, "lidar" or "camera".
    """

    cx: float
    cy: float
    cz: float
    dx: float
    dy: float
    dz: float
    yaw: float = 0.0
    frame: str = LIDAR_FRAME

    def __post_init__(self):
        vals = (self.cx, self.cy, self.cz, self.dx, self.dy, self.dz, self.yaw)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"box parameters must be finite, got {vals}")
        if self.dx <= 0 or self.dy <= 0 or self.dz <= 0:
            raise ValueError(
                f"box extents must be positive, got ({self.dx}, {self.dy}, {self.dz})"
            )
        if self.frame not in _FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}, expected one of {_FRAMES}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz], dtype=np.float64)

    @property
    def volume(self) -> float:
        return self.dx * self.dy * self.dz

    def as_array(self) -> np.ndarray:
        """(7,) array [cx, cy, cz, dx, dy, dz, yaw]; the frame tag is dropped."""
        return np.array(
            [self.cx, self.cy, self.cz, self.dx, self.dy, self.dz, self.yaw],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr, frame: str = LIDAR_FRAME) -> "Box3D":
        a = np.asarray(arr, dtype=np.float64).reshape(7)
        return cls(a[0], a[1], a[2], a[3], a[4], a[5], a[6], frame=frame)


def boxes_to_array(boxes) -> np.ndarray:
    """Stack a sequence of Box3D into an (N, 7) array."""
    if len(boxes) == 0:
        return np.zeros((0, 7), dtype=np.float64)
    return np.stack([b.as_array() for b in boxes])


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation; rotation must be orthonormal within 1e-6."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        tra = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.isfinite(rot).all() and np.isfinite(tra).all()):
            raise ValueError("transform entries must be finite")
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal within 1e-6")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tra)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rotation_z(cls, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(rot, np.asarray(translation, dtype=np.float64))

    def apply(self, points) -> np.ndarray:
        """p' = R @ p + t, applied row-wise; preserves input shape (3,) or (N, 3)."""
        pts = np.asarray(points, dtype=np.float64)
        out = pts @ self.rotation.T + self.translation
        return out

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying `other` first, then `self`."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -rot_inv @ self.translation)


def transform_points(points, transform: RigidTransform) -> np.ndarray:
    """Apply a rigid transform to one point or a stack of points."""
    return transform.apply(points)


def transform_box(box: Box3D, transform: RigidTransform) -> Box3D:
    """Transform a box by an in-plane rigid motion (rotation about +z only).

    General rotations do not map a yaw-parameterized box onto another, so the
    rotation part must fix the vertical axis.
    """
    rot = transform.rotation
    if not (
        math.isclose(rot[2, 2], 1.0, abs_tol=1e-9)
        and abs(rot[0, 2]) < 1e-9
        and abs(rot[1, 2]) < 1e-9
        and abs(rot[2, 0]) < 1e-9
        and abs(rot[2, 1]) < 1e-9
    ):
        raise ValueError("transform_box requires a rotation about the vertical axis")
    center = transform.apply(box.center)
    dyaw = math.atan2(rot[1, 0], rot[0, 0])
    return Box3D(
        center[0], center[1], center[2],
        box.dx, box.dy, box.dz,
        box.yaw + dyaw,
        frame=box.frame,
    )


def horizontal_distance(p, k):
    """Distance between the xy-projections of two points; z is ignored.

    Accepts single points or (N, 3) stacks and broadcasts like numpy.
    """
    p = np.asarray(p, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    dx = p[..., 0] - k[..., 0]
    dy = p[..., 1] - k[..., 1]
    out = np.hypot(dx, dy)
    return float(out) if out.ndim == 0 else out


# Box-local corner offsets in units of half extents. Bottom face first,
# counterclockwise in xy viewed from above, then the top face in the same
# xy order.
_CORNER_SIGNS = np.array(
    [
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, -1],
        [+1, -1, -1],
        [+1, +1, +1],
        [-1, +1, +1],
        [-1, -1, +1],
        [+1, -1, +1],
    ],
    dtype=np.float64,
)


def box_corners(box: Box3D) -> np.ndarray:
    """The 8 corners of a box, shape (8, 3), in the fixed order documented
    on `_CORNER_SIGNS`: bottom face counterclockwise, then top face."""
    half = np.array([box.dx, box.dy, box.dz]) / 2.0
    local = _CORNER_SIGNS * half
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return local @ rot.T + box.center


def bev_corners(box: Box3D) -> np.ndarray:
    """The xy footprint of a box as a (4, 2) counterclockwise polygon."""
    return box_corners(box)[:4, :2]


def points_in_box(points, box: Box3D) -> np.ndarray:
    """Boolean mask of the points lying inside a closed box.

    Points are expressed in the box's local frame (inverse yaw rotation about
    the center); containment is the axis-aligned check on half extents.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rel = pts - box.center
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    local_x = c * rel[:, 0] + s * rel[:, 1]
    local_y = -s * rel[:, 0] + c * rel[:, 1]
    return (
        (np.abs(local_x) <= box.dx / 2.0)
        & (np.abs(local_y) <= box.dy / 2.0)
        & (np.abs(rel[:, 2]) <= box.dz / 2.0)
    )


def point_in_box(p, box: Box3D, frame: str | None = None) -> bool:
    """True iff a single point lies inside the closed box.

    `frame`, when given, must match the box's frame tag; points carry no
    frame of their own, so this is the caller's assertion to be checked.
    """
    if frame is not None and frame != box.frame:
        raise ValueError(f"point frame {frame!r} does not match box frame {box.frame!r}")
    return bool(points_in_box(np.asarray(p, dtype=np.float64).reshape(1, 3), box)[0])


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area of a 2D polygon; positive for counterclockwise."""
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex subject by a convex CCW polygon."""
    output = [tuple(v) for v in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        vertices = output
        output = []
        m = len(vertices)
        for j in range(m):
            px, py = vertices[j]
            qx, qy = vertices[(j + 1) % m]
            p_side = ex * (py - ay) - ey * (px - ax)
            q_side = ex * (qy - ay) - ey * (qx - ax)
            p_in = p_side >= 0.0
            q_in = q_side >= 0.0
            if p_in and q_in:
                output.append((qx, qy))
            elif p_in != q_in:
                t = p_side / (p_side - q_side)
                inter = (px + t * (qx - px), py + t * (qy - py))
                output.append(inter)
                if q_in:
                    output.append((qx, qy))
    return np.array(output, dtype=np.float64).reshape(-1, 2)


def _bev_intersection_area(a: Box3D, b: Box3D) -> float:
    inter_poly = _clip_polygon(bev_corners(a), bev_corners(b))
    if len(inter_poly) < 3:
        return 0.0
    area = abs(polygon_area(inter_poly))
    return area if area > _AREA_EPS else 0.0


def _check_iou_inputs(a: Box3D, b: Box3D):
    if a.frame != b.frame:
        raise ValueError(f"frame mismatch: {a.frame!r} vs {b.frame!r}")
    if a.dx * a.dy <= _AREA_EPS or b.dx * b.dy <= _AREA_EPS:
        raise ValueError("degenerate zero-area box")


def bev_iou(a: Box3D, b: Box3D) -> float:
    """Intersection-over-union of the yaw-rotated xy footprints."""
    _check_iou_inputs(a, b)
    inter = _bev_intersection_area(a, b)
    union = a.dx * a.dy + b.dx * b.dy - inter
    return inter / union


def iou3d(a: Box3D, b: Box3D) -> float:
    """3D IoU: BEV intersection area times vertical overlap, over volume union."""
    _check_iou_inputs(a, b)
    inter_area = _bev_intersection_area(a, b)
    z_lo = max(a.cz - a.dz / 2.0, b.cz - b.dz / 2.0)
    z_hi = min(a.cz + a.dz / 2.0, b.cz + b.dz / 2.0)
    inter_vol = inter_area * max(0.0, z_hi - z_lo)
    union = a.volume + b.volume - inter_vol
    return inter_vol / union


def segments_intersect_box(starts, end, box: Box3D) -> np.ndarray:
    """Per-row test whether the segment from ``starts[i]`` to ``end`` meets a box.

    Implemented as a slab test in the box-local frame with the segment
    parameterized on t in [0, 1]. Endpoints inside the box count as hits.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    end = np.asarray(end, dtype=np.float64).reshape(3)

    c, s = math.cos(box.yaw), math.sin(box.yaw)
    rot_inv = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    p0 = (starts - box.center) @ rot_inv.T
    p1 = rot_inv @ (end - box.center)
    d = p1 - p0
    half = np.array([box.dx, box.dy, box.dz]) / 2.0

    t_lo = np.zeros(len(p0))
    t_hi = np.ones(len(p0))
    alive = np.ones(len(p0), dtype=bool)
    for axis in range(3):
        da = d[:, axis]
        oa = p0[:, axis]
        parallel = da == 0.0
        # Parallel to the slab: the segment hits only if it starts inside it.
        alive &= ~parallel | (np.abs(oa) <= half[axis])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half[axis] - oa) / da
            t2 = (half[axis] - oa) / da
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        t_lo = np.where(parallel, t_lo, np.maximum(t_lo, near))
        t_hi = np.where(parallel, t_hi, np.minimum(t_hi, far))
    return alive & (t_lo <= t_hi)
