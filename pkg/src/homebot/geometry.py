"""Axis-aligned boxes, ray casting, and quaternion helpers shared across modules.

Everything here is pure and deterministic; vectorized variants take numpy
arrays and are used by the simulated sensors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec2 = tuple[float, float]
Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)


@dataclass(frozen=True)
class AABB:
    """Axis-aligned box in world coordinates, stored as min/max corners."""

    lo: Vec3
    hi: Vec3

    def __post_init__(self):
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"inverted AABB: lo={self.lo} hi={self.hi}")

    @staticmethod
    def from_center(center: Vec3, extents: Vec3) -> "AABB":
        cx, cy, cz = center
        ex, ey, ez = extents
        return AABB((cx - ex / 2, cy - ey / 2, cz - ez / 2),
                    (cx + ex / 2, cy + ey / 2, cz + ez / 2))

    @property
    def center(self) -> Vec3:
        return tuple((l + h) / 2 for l, h in zip(self.lo, self.hi))

    @property
    def extents(self) -> Vec3:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, point, eps: float = 0.0) -> bool:
        return all(l - eps <= p <= h + eps for p, l, h in zip(point, self.lo, self.hi))

    def intersects(self, other: "AABB", eps: float = 0.0) -> bool:
        return all(l1 <= h2 + eps and l2 <= h1 + eps
                   for l1, h1, l2, h2 in zip(self.lo, self.hi, other.lo, other.hi))

    def overlap_volume(self, other: "AABB") -> float:
        v = 1.0
        for l1, h1, l2, h2 in zip(self.lo, self.hi, other.lo, other.hi):
            d = min(h1, h2) - max(l1, l2)
            if d <= 0.0:
                return 0.0
            v *= d
        return v

    def inflate(self, margin: float) -> "AABB":
        return AABB(tuple(l - margin for l in self.lo), tuple(h + margin for h in self.hi))

    def union(self, other: "AABB") -> "AABB":
        return AABB(tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
                    tuple(max(a, b) for a, b in zip(self.hi, other.hi)))

    def translated(self, offset) -> "AABB":
        return AABB(tuple(l + o for l, o in zip(self.lo, offset)),
                    tuple(h + o for h, o in zip(self.hi, offset)))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def rot2(theta: float, v: Vec2) -> Vec2:
    c, s = math.cos(theta), math.sin(theta)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


# ---------------------------------------------------------------------------
# Ray casting (2D slab tests, vectorized over rays x shapes)
# ---------------------------------------------------------------------------

def ray_rects_2d(origin: np.ndarray, dirs: np.ndarray, rects: np.ndarray,
                 max_range: float) -> np.ndarray:
    """First-hit distances of N rays against M rectangles.

    origin: (2,), dirs: (N, 2) unit vectors, rects: (M, 4) as (lox, loy, hix, hiy).
    Returns (N,) distances, max_range where nothing is hit.
    """
    n = dirs.shape[0]
    if rects.shape[0] == 0:
        return np.full(n, max_range)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs  # inf where a component is 0 is fine for the slab test
        t1 = (rects[None, :, 0] - origin[0]) * inv[:, None, 0]
        t2 = (rects[None, :, 2] - origin[0]) * inv[:, None, 0]
        t3 = (rects[None, :, 1] - origin[1]) * inv[:, None, 1]
        t4 = (rects[None, :, 3] - origin[1]) * inv[:, None, 1]
    tmin = np.maximum(np.minimum(t1, t2), np.minimum(t3, t4))
    tmax = np.minimum(np.maximum(t1, t2), np.maximum(t3, t4))
    # Rays parallel to a slab with origin inside it produce nan; treat as no constraint.
    tmin = np.nan_to_num(tmin, nan=-np.inf)
    tmax = np.nan_to_num(tmax, nan=np.inf)
    hit = (tmax >= tmin) & (tmax > 0.0)
    t = np.where(hit, np.maximum(tmin, 1e-12), np.inf)
    return np.minimum(t.min(axis=1), max_range)


def ray_circles_2d(origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray,
                   radii: np.ndarray, max_range: float) -> np.ndarray:
    """First-hit distances of N rays against M circles; max_range for misses."""
    n = dirs.shape[0]
    if centers.shape[0] == 0:
        return np.full(n, max_range)
    rel = centers[None, :, :] - origin[None, None, :]          # (1, M, 2)
    b = dirs[:, None, 0] * rel[:, :, 0] + dirs[:, None, 1] * rel[:, :, 1]
    c = (rel ** 2).sum(axis=2) - radii[None, :] ** 2
    disc = b * b - c
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(np.maximum(disc, 0.0))
    t = b - sq
    hit = (disc >= 0.0) & (t > 1e-12)
    t = np.where(hit, t, np.inf)
    return np.minimum(t.min(axis=1), max_range)


def ray_boxes_3d(origin: np.ndarray, direction: np.ndarray, los: np.ndarray,
                 his: np.ndarray) -> float:
    """First positive hit distance of one 3D ray against M boxes, inf on miss."""
    if los.shape[0] == 0:
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / direction
        ta = (los - origin) * inv
        tb = (his - origin) * inv
    tmin = np.nan_to_num(np.minimum(ta, tb), nan=-np.inf).max(axis=1)
    tmax = np.nan_to_num(np.maximum(ta, tb), nan=np.inf).min(axis=1)
    hit = (tmax >= tmin) & (tmax > 0.0)
    t = np.where(hit, np.maximum(tmin, 1e-12), np.inf)
    return float(t.min())


def segment_hits_boxes_3d(p0: np.ndarray, p1: np.ndarray, los: np.ndarray,
                          his: np.ndarray, shrink: float = 1e-9) -> bool:
    """True if the open segment p0->p1 intersects any of the M boxes."""
    if los.shape[0] == 0:
        return False
    d = p1 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        ta = (los - p0) * inv
        tb = (his - p0) * inv
    tmin = np.nan_to_num(np.minimum(ta, tb), nan=-np.inf).max(axis=1)
    tmax = np.nan_to_num(np.maximum(ta, tb), nan=np.inf).min(axis=1)
    # Degenerate axes (d == 0) need an explicit inside check.
    for ax in range(3):
        if d[ax] == 0.0:
            outside = (p0[ax] < los[:, ax]) | (p0[ax] > his[:, ax])
            tmin = np.where(outside, np.inf, tmin)
    hit = (tmax >= tmin) & (tmax > shrink) & (tmin < 1.0 - shrink)
    return bool(hit.any())


# ---------------------------------------------------------------------------
# Quaternions, stored (w, x, y, z)
# ---------------------------------------------------------------------------

def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    n = math.sqrt(sum(a * a for a in axis))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    s = math.sin(angle / 2.0) / n
    return (math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s)


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    w, x, y, z = q
    # v + 2 * r x (r x v + w v), r = (x, y, z)
    rx, ry, rz = x, y, z
    cx = ry * v[2] - rz * v[1] + w * v[0]
    cy = rz * v[0] - rx * v[2] + w * v[1]
    cz = rx * v[1] - ry * v[0] + w * v[2]
    return (v[0] + 2.0 * (ry * cz - rz * cy),
            v[1] + 2.0 * (rz * cx - rx * cz),
            v[2] + 2.0 * (rx * cy - ry * cx))


def quat_normalize(q: Quat) -> Quat:
    n = math.sqrt(sum(c * c for c in q))
    if n == 0.0:
        raise ValueError("zero quaternion")
    return tuple(c / n for c in q)


def quat_from_basis(x_axis: Vec3, y_axis: Vec3, z_axis: Vec3) -> Quat:
    """Quaternion whose rotation maps the body axes to the given world axes."""
    m00, m01, m02 = x_axis[0], y_axis[0], z_axis[0]
    m10, m11, m12 = x_axis[1], y_axis[1], z_axis[1]
    m20, m21, m22 = x_axis[2], y_axis[2], z_axis[2]
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = ((0.25 * s), (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    return quat_normalize(q)


def normalize3(v: Vec3) -> Vec3:
    n = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    if n == 0.0:
        raise ValueError("zero vector")
    return (v[0] / n, v[1] / n, v[2] / n)


def cross3(a: Vec3, b: Vec3) -> Vec3:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def dot3(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
