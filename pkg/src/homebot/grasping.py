"""Grasp pose generation from bounding boxes, collision and orientation
filters, standoff retraction, proportional visual servoing, and straight-line
gap closure. Everything here is pure."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import AABB, Quat, Vec3, cross3, dot3, quat_from_basis, quat_rotate

FACES = ("top", "+x", "-x", "+y", "-y")

_FACE_APPROACH = {          # world approach direction, pointing into the object
    "top": (0.0, 0.0, -1.0),
    "+x": (-1.0, 0.0, 0.0),
    "-x": (1.0, 0.0, 0.0),
    "+y": (0.0, -1.0, 0.0),
    "-y": (0.0, 1.0, 0.0),
}


@dataclass(frozen=True)
class GripperModel:
    body: Vec3 = (0.12, 0.10, 0.12)     # extents; z is along the tool axis
    finger_span: float = 0.08
    approach_axis: Vec3 = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if any(e <= 0 for e in self.body) or self.finger_span < 0:
            raise ValueError("gripper extents must be positive")


@dataclass(frozen=True)
class GraspPose:
    position: Vec3
    orientation: Quat                    # gripper frame -> world; +z is the tool axis
    face: str
    wrist_roll: int
    standoff: float = 0.0

    def __post_init__(self):
        n = math.sqrt(sum(c * c for c in self.orientation))
        if abs(n - 1.0) > 1e-9:
            raise ValueError("orientation quaternion must be normalized")

    @property
    def approach(self) -> Vec3:
        return quat_rotate(self.orientation, (0.0, 0.0, 1.0))

    @property
    def up(self) -> Vec3:
        return quat_rotate(self.orientation, (0.0, 1.0, 0.0))


def _rotate_about(v: Vec3, axis: Vec3, angle: float) -> Vec3:
    c, s = math.cos(angle), math.sin(angle)
    cr = cross3(axis, v)
    d = dot3(axis, v)
    return (v[0] * c + cr[0] * s + axis[0] * d * (1 - c),
            v[1] * c + cr[1] * s + axis[1] * d * (1 - c),
            v[2] * c + cr[2] * s + axis[2] * d * (1 - c))


def generate_grasp_poses(object_aabb: AABB, gripper: GripperModel, n_rolls: int,
                         insertion_depth: float = 0.02) -> list[GraspPose]:
    """Candidate gripper poses on the top and all four sides (never the
    bottom), each centered on its face and pushed in by the insertion depth,
    with wrist rolls evenly spaced in [0, pi)."""
    if n_rolls < 1:
        raise ValueError("n_rolls must be >= 1")
    if any(e <= 0 for e in object_aabb.extents):
        raise ValueError("degenerate object box")
    cx, cy, cz = object_aabb.center
    lo, hi = object_aabb.lo, object_aabb.hi
    face_centers = {
        "top": (cx, cy, hi[2]),
        "+x": (hi[0], cy, cz),
        "-x": (lo[0], cy, cz),
        "+y": (cx, hi[1], cz),
        "-y": (cx, lo[1], cz),
    }
    poses: list[GraspPose] = []
    for face in FACES:
        approach = _FACE_APPROACH[face]
        fc = face_centers[face]
        pos = tuple(p + insertion_depth * a for p, a in zip(fc, approach))
        up0 = (1.0, 0.0, 0.0) if face == "top" else (0.0, 0.0, 1.0)
        for k in range(n_rolls):
            roll = k * math.pi / n_rolls
            up = _rotate_about(up0, approach, roll)
            x_axis = cross3(up, approach)
            q = quat_from_basis(x_axis, up, approach)
            poses.append(GraspPose(position=pos, orientation=q, face=face,
                                   wrist_roll=k))
    return poses


def filter_colliding(poses, occupancy_query, threshold: float, target_aabb: AABB,
                     gripper: GripperModel, resolution: float = 0.05,
                     sweep: float = 0.05) -> list[GraspPose]:
    """Keep poses whose gripper body, swept along the approach axis to contact,
    overlaps no occupied voxel outside the target object's own region.

    occupancy_query maps a world point to occupancy probability; points at or
    above the threshold count as occupied. Order is preserved.
    """
    target = target_aabb.inflate(resolution)
    bx, by, bz = gripper.body
    out: list[GraspPose] = []
    for pose in poses:
        a = pose.approach
        up = pose.up
        x_axis = cross3(up, a)
        hit = False
        for c in _steps(-bz / 2.0 - sweep, bz / 2.0, resolution):
            for u in _steps(-bx / 2.0, bx / 2.0, resolution):
                for v in _steps(-by / 2.0, by / 2.0, resolution):
                    p = (pose.position[0] + u * x_axis[0] + v * up[0] + c * a[0],
                         pose.position[1] + u * x_axis[1] + v * up[1] + c * a[1],
                         pose.position[2] + u * x_axis[2] + v * up[2] + c * a[2])
                    if target.contains(p):
                        continue
                    if occupancy_query(p) >= threshold:
                        hit = True
                        break
                if hit:
                    break
            if hit:
                break
        if not hit:
            out.append(pose)
    return out


def _steps(lo: float, hi: float, step: float) -> list[float]:
    n = max(1, int(math.ceil((hi - lo) / step)))
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


def filter_orientation(poses, cos_tolerance: float = 0.5) -> list[GraspPose]:
    """Keep poses whose hand up-vector points downward: up_z <= -cos_tolerance.
    Used for the upside-down pouring grasp constraint. Order is preserved."""
    return [p for p in poses if p.up[2] <= -cos_tolerance]


def standoff_pose(pose: GraspPose, offset: float) -> GraspPose:
    """Retract the pose along its approach axis; composition accumulates."""
    if offset <= 0.0:
        raise ValueError("standoff offset must be positive")
    a = pose.approach
    pos = tuple(p - offset * c for p, c in zip(pose.position, a))
    return replace(pose, position=pos, standoff=pose.standoff + offset)


@dataclass(frozen=True)
class ServoCommand:
    done: bool
    velocity: tuple[float, float]        # base frame vx, vy
    raw: tuple[float, float]             # gain * pixel error, before axis mapping


# Hand camera pointing down with roll 0: image x is the robot's -y, image y is
# the robot's -x, so base velocity = gain * (-ey, -ex).
CAMERA_TO_BASE = ((0.0, -1.0), (-1.0, 0.0))


def servo_step(pixel_error: tuple[float, float], gain: float, tolerance: float,
               axis_map=CAMERA_TO_BASE) -> ServoCommand:
    """One proportional visual-servo step from hand-camera pixel error.

    Inside tolerance the command is done with zero velocity; otherwise the
    raw command gain*error is mapped through the camera-to-base convention.
    """
    if gain <= 0.0:
        raise ValueError("gain must be positive")
    ex, ey = pixel_error
    if math.hypot(ex, ey) <= tolerance:
        return ServoCommand(done=True, velocity=(0.0, 0.0), raw=(0.0, 0.0))
    raw = (gain * ex, gain * ey)
    vel = (axis_map[0][0] * raw[0] + axis_map[0][1] * raw[1],
           axis_map[1][0] * raw[0] + axis_map[1][1] * raw[1])
    return ServoCommand(done=False, velocity=vel, raw=raw)


def close_gap(pose: GraspPose, step: float = 0.01) -> list[Vec3]:
    """Straight-line approach from a standoff pose back to the grasp contact.

    Returns interpolated positions covering exactly the recorded standoff
    distance along the approach axis; the last point recovers the
    pre-standoff position.
    """
    if pose.standoff <= 0.0:
        raise ValueError("pose has no standoff to close")
    a = pose.approach
    end = tuple(p + pose.standoff * c for p, c in zip(pose.position, a))
    n = max(1, int(math.ceil(pose.standoff / step)))
    pts = []
    for i in range(n + 1):
        u = i / n
        pts.append(tuple(p + u * (e - p) for p, e in zip(pose.position, end)))
    return pts
