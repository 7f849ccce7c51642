"""Simulated sensors: planar LIDAR, pinhole object detector, skeleton detector,
and a coarse depth-ray grid for map building.

All sensors are pure functions of a world snapshot. Detection noise is seeded
per (world seed, clock, entity id, camera), so repeated calls on the same
snapshot are identical and whole runs replay bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import segment_hits_boxes_3d
from .seeding import stable_rng
from .world import SimConfig, World, gripper_pose

WAVE_FREQ_HZ = 2.0
WAVE_AMPLITUDE = 0.30
SHOULDER_HEIGHT = 1.40
TORSO_HEIGHT = 1.20
WRIST_DROP = 0.35          # idle wrist hangs this far below the shoulder
WRIST_RAISE = 0.25         # waving wrist rides this far above the shoulder


@dataclass(frozen=True)
class Scan:
    """One LIDAR sweep. Angles are relative to the robot heading."""

    origin_pose: tuple[float, float, float]
    angles: tuple[float, ...]
    ranges: tuple[float, ...]
    max_range: float

    def __post_init__(self):
        if len(self.angles) != len(self.ranges):
            raise ValueError("angle/range lists must have equal length")

    def points_xy(self) -> np.ndarray:
        """Hit endpoints in world frame, max-range returns included."""
        x, y, th = self.origin_pose
        a = np.asarray(self.angles) + th
        r = np.asarray(self.ranges)
        return np.stack([x + r * np.cos(a), y + r * np.sin(a)], axis=1)


@dataclass(frozen=True)
class Detection:
    class_label: str
    center_3d: tuple[float, float, float]
    bbox_2d: tuple[float, float, float, float]   # x0, y0, x1, y1 pixels
    camera: str


@dataclass(frozen=True)
class Skeleton:
    person_id: str
    shoulder: tuple[float, float, float]
    wrist: tuple[float, float, float]
    torso: tuple[float, float, float]
    shoulder_px: tuple[float, float]
    wrist_px: tuple[float, float]
    torso_px: tuple[float, float]
    torso_color: tuple[float, float, float]
    has_drink: bool


@dataclass(frozen=True)
class CameraFrame:
    origin: np.ndarray
    x_axis: np.ndarray   # image right
    y_axis: np.ndarray   # image down
    z_axis: np.ndarray   # optical axis
    max_range: float


def _clock_ms(world: World) -> int:
    return int(round(world.clock * 1000.0))


def leg_centers(world: World, person) -> list[tuple[float, float]]:
    """Two leg-cylinder centers straddling the walking direction."""
    x, y = person.position_at(world.clock)
    th = person.heading_at(world.clock)
    half = world.config.leg_separation / 2.0
    px, py = -math.sin(th), math.cos(th)
    return [(x + half * px, y + half * py), (x - half * px, y - half * py)]


def lidar_scan(world: World) -> Scan:
    """Planar sweep at scanner height against walls, furniture, objects
    (including a low-carried bag), and people's legs."""
    cfg = world.config
    x, y, th = world.robot.base_pose
    local = np.linspace(-cfg.scan_fov / 2.0, cfg.scan_fov / 2.0, cfg.scan_beams)
    dirs = np.stack([np.cos(local + th), np.sin(local + th)], axis=1)
    origin = np.array([x, y])

    zs = cfg.scanner_height
    rects = [(b.aabb.lo[0], b.aabb.lo[1], b.aabb.hi[0], b.aabb.hi[1])
             for b in world.blocking_boxes() if b.aabb.lo[2] <= zs <= b.aabb.hi[2]]
    rects += [(o.aabb.lo[0], o.aabb.lo[1], o.aabb.hi[0], o.aabb.hi[1])
              for o in world.objects if o.aabb.lo[2] <= zs <= o.aabb.hi[2]]
    rects_arr = np.array(rects, dtype=float).reshape(-1, 4)

    centers = [c for p in world.people for c in leg_centers(world, p)]
    centers_arr = np.array(centers, dtype=float).reshape(-1, 2)
    radii = np.full(centers_arr.shape[0], cfg.leg_radius)

    from .geometry import ray_circles_2d, ray_rects_2d
    r_boxes = ray_rects_2d(origin, dirs, rects_arr, cfg.scan_max_range)
    r_legs = ray_circles_2d(origin, dirs, centers_arr, radii, cfg.scan_max_range)
    ranges = np.minimum(r_boxes, r_legs)
    return Scan(origin_pose=(x, y, th), angles=tuple(local.tolist()),
                ranges=tuple(ranges.tolist()), max_range=cfg.scan_max_range)


# ---------------------------------------------------------------------------
# Cameras
# ---------------------------------------------------------------------------

def head_camera(world: World) -> CameraFrame:
    cfg = world.config
    x, y, th = world.robot.base_pose
    phi = cfg.head_pitch
    z = np.array([math.cos(th) * math.cos(phi), math.sin(th) * math.cos(phi), -math.sin(phi)])
    xr = np.array([math.sin(th), -math.cos(th), 0.0])
    yd = np.cross(z, xr)
    return CameraFrame(np.array([x, y, cfg.head_height]), xr, yd, z, cfg.head_range)


def hand_camera(world: World) -> CameraFrame:
    cfg = world.config
    pos, approach, up = gripper_pose(world.robot, cfg)
    z = np.array(approach)
    yd = -np.array(up)
    xr = np.cross(yd, z)
    return CameraFrame(np.array(pos), xr, yd, z, cfg.hand_range)


def camera_frame(world: World, camera: str) -> CameraFrame:
    if camera == "head":
        return head_camera(world)
    if camera == "hand":
        return hand_camera(world)
    raise ValueError(f"unknown camera {camera!r}")


def project(cam: CameraFrame, cfg: SimConfig, point) -> tuple[float, float, float]:
    """Pixel (u, v) and camera depth of a world point."""
    rel = np.asarray(point, dtype=float) - cam.origin
    zc = float(rel @ cam.z_axis)
    u = cfg.image_width / 2.0 + cfg.focal_px * float(rel @ cam.x_axis) / zc
    v = cfg.image_height / 2.0 + cfg.focal_px * float(rel @ cam.y_axis) / zc
    return u, v, zc


def in_frustum(cam: CameraFrame, cfg: SimConfig, point) -> bool:
    rel = np.asarray(point, dtype=float) - cam.origin
    zc = float(rel @ cam.z_axis)
    if not (cfg.near_clip < zc <= cam.max_range):
        return False
    half_w = zc * (cfg.image_width / 2.0) / cfg.focal_px
    half_h = zc * (cfg.image_height / 2.0) / cfg.focal_px
    return abs(float(rel @ cam.x_axis)) <= half_w and abs(float(rel @ cam.y_axis)) <= half_h


def _occluder_arrays(world: World) -> tuple[np.ndarray, np.ndarray]:
    boxes = world.blocking_boxes()
    los = np.array([b.aabb.lo for b in boxes], dtype=float).reshape(-1, 3)
    his = np.array([b.aabb.hi for b in boxes], dtype=float).reshape(-1, 3)
    return los, his


def _occluded(world: World, cam: CameraFrame, point) -> bool:
    los, his = _occluder_arrays(world)
    return segment_hits_boxes_3d(cam.origin, np.asarray(point, dtype=float), los, his)


def camera_detect(world: World, camera: str) -> list[Detection]:
    """One detection per unoccluded in-frustum object, with seeded center noise."""
    cfg = world.config
    cam = camera_frame(world, camera)
    ms = _clock_ms(world)
    out: list[Detection] = []
    for obj in world.objects:
        center = obj.aabb.center
        if not in_frustum(cam, cfg, center):
            continue
        if _occluded(world, cam, center):
            continue
        rng = stable_rng(world.rng_seed, ms, "det", camera, obj.id)
        noisy = tuple(c + rng.gauss(0.0, cfg.detection_sigma) for c in center)

        lo, hi = obj.aabb.lo, obj.aabb.hi
        us, vs = [], []
        for cx in (lo[0], hi[0]):
            for cy in (lo[1], hi[1]):
                for cz in (lo[2], hi[2]):
                    u, v, zc = project(cam, cfg, (cx, cy, cz))
                    if zc > cfg.near_clip:
                        us.append(u)
                        vs.append(v)
        if not us:
            u, v, _ = project(cam, cfg, center)
            us, vs = [u - 2, u + 2], [v - 2, v + 2]
        bbox = (max(0.0, min(us)), max(0.0, min(vs)),
                min(float(cfg.image_width), max(us)), min(float(cfg.image_height), max(vs)))
        out.append(Detection(class_label=obj.class_label, center_3d=noisy,
                             bbox_2d=bbox, camera=camera))
    return out


def skeleton_joints(world: World, person) -> tuple[tuple[float, float, float], ...]:
    """Ground-truth (shoulder, wrist, torso) for a person at the current clock."""
    x, y = person.position_at(world.clock)
    th = person.heading_at(world.clock)
    px, py = -math.sin(th), math.cos(th)
    shoulder = (x + 0.18 * px, y + 0.18 * py, SHOULDER_HEIGHT)
    phase = person.wave_phase(world.clock)
    if phase is None:
        wrist = (shoulder[0], shoulder[1], shoulder[2] - WRIST_DROP)
    else:
        s = WAVE_AMPLITUDE * math.sin(2.0 * math.pi * WAVE_FREQ_HZ * phase)
        wrist = (shoulder[0] + s * px, shoulder[1] + s * py, shoulder[2] + WRIST_RAISE)
    torso = (x, y, TORSO_HEIGHT)
    return shoulder, wrist, torso


def skeleton_detect(world: World) -> list[Skeleton]:
    """Skeletons for people visible in the head camera; the wrist oscillates
    inside wave-script intervals and the torso color carries seeded noise."""
    cfg = world.config
    cam = head_camera(world)
    ms = _clock_ms(world)
    out: list[Skeleton] = []
    for person in world.people:
        shoulder, wrist, torso = skeleton_joints(world, person)
        if not in_frustum(cam, cfg, torso) or _occluded(world, cam, torso):
            continue
        rng = stable_rng(world.rng_seed, ms, "skel", person.id)
        color = tuple(min(255.0, max(0.0, c + rng.gauss(0.0, cfg.color_sigma)))
                      for c in person.torso_color)
        s_px = project(cam, cfg, shoulder)[:2]
        w_px = project(cam, cfg, wrist)[:2]
        t_px = project(cam, cfg, torso)[:2]
        out.append(Skeleton(person_id=person.id, shoulder=shoulder, wrist=wrist,
                            torso=torso, shoulder_px=s_px, wrist_px=w_px,
                            torso_px=t_px, torso_color=color,
                            has_drink=person.has_drink))
    return out


def depth_rays(world: World, camera: str, stride: int = 24
               ) -> tuple[np.ndarray, np.ndarray]:
    """Coarse depth image as (origin, hit endpoints (N, 3)) for map building.

    Casts one ray per ``stride`` pixels against static geometry and object
    boxes; misses are dropped.
    """
    cfg = world.config
    cam = camera_frame(world, camera)
    us = np.arange(stride / 2, cfg.image_width, stride)
    vs = np.arange(stride / 2, cfg.image_height, stride)
    uu, vv = np.meshgrid(us, vs)
    dx = (uu.ravel() - cfg.image_width / 2.0) / cfg.focal_px
    dy = (vv.ravel() - cfg.image_height / 2.0) / cfg.focal_px
    dirs = (dx[:, None] * cam.x_axis[None, :] + dy[:, None] * cam.y_axis[None, :]
            + cam.z_axis[None, :])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    boxes = [(b.aabb.lo, b.aabb.hi) for b in world.blocking_boxes()]
    boxes += [(o.aabb.lo, o.aabb.hi) for o in world.objects
              if o.id != world.robot.held_object]
    los = np.array([b[0] for b in boxes], dtype=float).reshape(-1, 3)
    his = np.array([b[1] for b in boxes], dtype=float).reshape(-1, 3)
    if los.shape[0] == 0:
        return cam.origin, np.zeros((0, 3))

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs                                      # (N, 3)
        ta = (los[None, :, :] - cam.origin) * inv[:, None, :]  # (N, M, 3)
        tb = (his[None, :, :] - cam.origin) * inv[:, None, :]
    tmin = np.nan_to_num(np.minimum(ta, tb), nan=-np.inf).max(axis=2)
    tmax = np.nan_to_num(np.maximum(ta, tb), nan=np.inf).min(axis=2)
    hit = (tmax >= tmin) & (tmax > 0.0)
    t = np.where(hit, np.maximum(tmin, 1e-9), np.inf).min(axis=1)
    mask = t <= cam.max_range
    return cam.origin, cam.origin[None, :] + t[mask, None] * dirs[mask]
