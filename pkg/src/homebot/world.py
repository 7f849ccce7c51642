"""Deterministic 2.5D arena: ground-truth state and the fixed-step integrator.

World values are immutable snapshots; ``step`` returns a new World with the
clock advanced. People follow scripted timed trajectories, so their state is
derived from the clock rather than integrated. All randomness downstream is
seeded from ``rng_seed`` plus the clock, never from global RNG state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import AABB, Vec3, rot2, wrap_angle


@dataclass(frozen=True)
class SimConfig:
    """Fixed simulation parameters. Controllers assume the default dt."""

    dt: float = 0.1
    base_half_width: float = 0.25     # axis-aligned square collision footprint
    base_clearance: float = 0.30      # boxes whose bottom is below this block the base
    max_base_speed: float = 1.2       # m/s per axis
    max_turn_rate: float = 2.5        # rad/s
    max_joint_speed: float = 2.0      # rad/s or m/s

    # LIDAR
    scanner_height: float = 0.20
    scan_fov: float = math.radians(240.0)
    scan_beams: int = 161
    scan_max_range: float = 10.0
    leg_radius: float = 0.07
    leg_separation: float = 0.20      # center-to-center

    # cameras (shared pinhole model)
    image_width: int = 640
    image_height: int = 480
    focal_px: float = 400.0
    head_height: float = 1.05
    head_pitch: float = 0.25          # downward tilt, rad
    head_range: float = 6.0
    hand_range: float = 2.0
    near_clip: float = 0.05
    detection_sigma: float = 0.02     # m, per-axis center noise
    color_sigma: float = 8.0          # 0-255 units, torso color sample noise

    # arm: torso lift + planar 3R chain + wrist roll
    arm_base_x: float = 0.10
    arm_base_z: float = 0.35
    link_lengths: tuple[float, float, float] = (0.34, 0.34, 0.15)
    lift_range: tuple[float, float] = (0.0, 0.35)
    joint_limits: tuple[tuple[float, float], ...] = (
        (0.0, 0.35), (-1.6, 1.6), (-2.4, 2.4), (-2.2, 2.2), (-math.pi, math.pi))
    grasp_tolerance: float = 0.12     # close succeeds within this of an object center

    wall_thickness: float = 0.05
    furniture_overlap_eps: float = 0.01


@dataclass(frozen=True)
class StaticBox:
    """Wall segment or furniture piece. A wall may carry a timed door flag."""

    aabb: AABB
    kind: str                  # "wall" | "furniture"
    name: str
    door: str | None = None
    opens_at: float | None = None

    def blocks(self, clock: float) -> bool:
        if self.door is not None and self.opens_at is not None:
            return clock < self.opens_at
        return True


@dataclass(frozen=True)
class SimObject:
    id: int
    class_label: str
    aabb: AABB
    category: str | None = None
    graspable: bool = False

    def __post_init__(self):
        if any(e <= 0.0 for e in self.aabb.extents):
            raise ValueError(f"object {self.class_label} has non-positive extents")


@dataclass(frozen=True)
class SimPerson:
    id: str
    trajectory: tuple[tuple[float, float, float], ...]   # (t, x, y), t strictly increasing
    torso_color: tuple[float, float, float]              # RGB, 0-255
    wave_script: tuple[tuple[float, float], ...] = ()
    has_drink: bool = False

    def __post_init__(self):
        ts = [t for t, _, _ in self.trajectory]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"person {self.id}: trajectory timestamps must strictly increase")

    def position_at(self, t: float) -> tuple[float, float]:
        traj = self.trajectory
        if t <= traj[0][0]:
            return (traj[0][1], traj[0][2])
        for (t0, x0, y0), (t1, x1, y1) in zip(traj, traj[1:]):
            if t <= t1:
                u = (t - t0) / (t1 - t0)
                return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))
        return (traj[-1][1], traj[-1][2])

    def heading_at(self, t: float) -> float:
        traj = self.trajectory
        for (t0, x0, y0), (t1, x1, y1) in zip(traj, traj[1:]):
            if t <= t1 and (x1 != x0 or y1 != y0):
                return math.atan2(y1 - y0, x1 - x0)
        # stationary or past the end: face the last motion direction, default +x
        for (t0, x0, y0), (t1, x1, y1) in zip(reversed(traj[:-1]), reversed(traj[1:])):
            if x1 != x0 or y1 != y0:
                return math.atan2(y1 - y0, x1 - x0)
        return 0.0

    def wave_phase(self, t: float) -> float | None:
        """Seconds into the active wave interval, or None when not waving."""
        for t0, t1 in self.wave_script:
            if t0 <= t <= t1:
                return t - t0
        return None


@dataclass(frozen=True)
class RobotState:
    base_pose: tuple[float, float, float]        # x, y, heading
    arm: tuple[float, float, float, float, float]  # lift, q1, q2, q3, wrist roll
    gripper_open: bool = True
    held_object: int | None = None
    carry_height: float = 0.0


@dataclass(frozen=True)
class Commands:
    base: tuple[float, float, float] = (0.0, 0.0, 0.0)   # vx, vy (robot frame), omega
    joints: tuple[float, float, float, float, float] = (0.0,) * 5
    gripper: str | None = None                           # "open" | "close"


@dataclass(frozen=True)
class World:
    bounds: tuple[float, float]
    static_boxes: tuple[StaticBox, ...]
    objects: tuple[SimObject, ...]
    people: tuple[SimPerson, ...]
    robot: RobotState
    clock: float = 0.0
    rng_seed: int = 0
    zones: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    dialogue: tuple[tuple[str, str], ...] = ()           # scripted (person_id, text) lines
    config: SimConfig = field(default_factory=SimConfig)
    events: tuple[str, ...] = ()                         # raised by the last step

    def door_open(self, name: str | None = None) -> bool:
        doors = [b for b in self.static_boxes
                 if b.door is not None and (name is None or b.door == name)]
        return bool(doors) and all(not b.blocks(self.clock) for b in doors)

    def blocking_boxes(self) -> list[StaticBox]:
        return [b for b in self.static_boxes if b.blocks(self.clock)]

    def object_by_id(self, obj_id: int) -> SimObject:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(f"no object with id {obj_id}")

    def person_by_id(self, pid: str) -> SimPerson:
        for p in self.people:
            if p.id == pid:
                return p
        raise KeyError(f"no person with id {pid}")


# ---------------------------------------------------------------------------
# Arm kinematics
# ---------------------------------------------------------------------------

def gripper_pose(robot: RobotState, cfg: SimConfig
                 ) -> tuple[Vec3, Vec3, Vec3]:
    """Gripper position, approach axis, and hand up-vector in world frame.

    The arm is a planar 3R chain in the robot's vertical x-z plane riding on
    the torso lift; the wrist roll spins the up-vector about the approach axis.
    """
    x, y, th = robot.base_pose
    lift, q1, q2, q3, roll = robot.arm
    l1, l2, l3 = cfg.link_lengths
    a1, a2, a3 = q1, q1 + q2, q1 + q2 + q3
    r = cfg.arm_base_x + l1 * math.cos(a1) + l2 * math.cos(a2) + l3 * math.cos(a3)
    z = cfg.arm_base_z + lift + l1 * math.sin(a1) + l2 * math.sin(a2) + l3 * math.sin(a3)
    ct, st = math.cos(th), math.sin(th)
    pos = (x + r * ct, y + r * st, z)
    ca3, sa3 = math.cos(a3), math.sin(a3)
    approach = (ct * ca3, st * ca3, sa3)
    up0 = (-ct * sa3, -st * sa3, ca3)      # in-plane normal, before wrist roll
    # Rodrigues rotation of up0 about approach by roll
    cr, sr = math.cos(roll), math.sin(roll)
    ax, ay, az = approach
    ux, uy, uz = up0
    cx = ay * uz - az * uy
    cy = az * ux - ax * uz
    cz = ax * uy - ay * ux
    dot = ax * ux + ay * uy + az * uz
    up = (ux * cr + cx * sr + ax * dot * (1 - cr),
          uy * cr + cy * sr + ay * dot * (1 - cr),
          uz * cr + cz * sr + az * dot * (1 - cr))
    return pos, approach, up


def solve_arm(target_r: float, target_z: float, hand_pitch: float,
              cfg: SimConfig, roll: float = 0.0
              ) -> tuple[float, float, float, float, float] | None:
    """Joint values placing the gripper at radial distance ``target_r`` and
    height ``target_z`` with the hand pitched at ``hand_pitch`` (0 = forward,
    -pi/2 = straight down). Returns None when out of reach."""
    l1, l2, l3 = cfg.link_lengths
    wr = target_r - l3 * math.cos(hand_pitch)
    wz = target_z - l3 * math.sin(hand_pitch)
    lo, hi = cfg.lift_range
    for lift in [lo + k * (hi - lo) / 14.0 for k in range(15)]:
        dx = wr - cfg.arm_base_x
        dz = wz - (cfg.arm_base_z + lift)
        d2 = dx * dx + dz * dz
        if d2 > (l1 + l2 - 1e-6) ** 2 or d2 < (abs(l1 - l2) + 1e-6) ** 2:
            continue
        for elbow in (-1.0, 1.0):
            c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
            q2 = elbow * math.acos(max(-1.0, min(1.0, c2)))
            q1 = math.atan2(dz, dx) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
            q3 = wrap_angle(hand_pitch - q1 - q2)
            joints = (lift, q1, q2, q3, roll)
            if all(lo_i <= v <= hi_i for v, (lo_i, hi_i) in zip(joints, cfg.joint_limits)):
                return joints
    return None


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def _clamp(v: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, v))


def _validate_commands(cmd: Commands, cfg: SimConfig) -> None:
    vx, vy, om = cmd.base
    if abs(vx) > cfg.max_base_speed + 1e-9 or abs(vy) > cfg.max_base_speed + 1e-9:
        raise ValueError(f"base velocity {cmd.base} exceeds limit {cfg.max_base_speed}")
    if abs(om) > cfg.max_turn_rate + 1e-9:
        raise ValueError(f"turn rate {om} exceeds limit {cfg.max_turn_rate}")
    if any(abs(j) > cfg.max_joint_speed + 1e-9 for j in cmd.joints):
        raise ValueError("joint velocity exceeds limit")
    if cmd.gripper not in (None, "open", "close"):
        raise ValueError(f"unknown gripper command {cmd.gripper!r}")


def _base_blockers(world: World) -> np.ndarray:
    """2D rects (lox, loy, hix, hiy) of static boxes that obstruct the base."""
    cfg = world.config
    rects = [(*b.aabb.lo[:2], *b.aabb.hi[:2]) for b in world.blocking_boxes()
             if b.aabb.lo[2] < cfg.base_clearance]
    return np.array(rects, dtype=float).reshape(-1, 4)


def _swept_fraction(p: tuple[float, float], d: tuple[float, float],
                    rects: np.ndarray, half: float) -> float:
    """Largest fraction of displacement d the square footprint can travel.

    Minkowski sum: inflate every rect by the footprint half-width and sweep
    the center point; returns min entry time clamped to [0, 1], 1 = no hit.
    """
    if rects.shape[0] == 0 or (d[0] == 0.0 and d[1] == 0.0):
        return 1.0
    s = 1.0
    for lox, loy, hix, hiy in rects:
        lox, loy, hix, hiy = lox - half, loy - half, hix + half, hiy + half
        t_in, t_out = 0.0, 1.0
        hit = True
        for axis, (lo, hi) in enumerate(((lox, hix), (loy, hiy))):
            pa, da = p[axis], d[axis]
            if da == 0.0:
                if pa <= lo or pa >= hi:
                    hit = False
                    break
            else:
                ta = (lo - pa) / da
                tb = (hi - pa) / da
                if ta > tb:
                    ta, tb = tb, ta
                t_in = max(t_in, ta)
                t_out = min(t_out, tb)
        if hit and t_in <= t_out and t_in < s:
            s = t_in
    return s


def _rest_height(world: World, x: float, y: float, below_z: float) -> float:
    """Top of the highest support under (x, y) at or below below_z (floor = 0)."""
    z = 0.0
    for b in world.blocking_boxes():
        lo, hi = b.aabb.lo, b.aabb.hi
        if lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1] and hi[2] <= below_z + 1e-6:
            z = max(z, hi[2])
    return z


def step(world: World, dt: float, commands: Commands) -> World:
    """Advance the world by one fixed step.

    Base collision with static geometry halts base motion for the step and
    raises a bumper event; arm joints clamp to limits; a close command grabs
    the nearest graspable object within tolerance; held objects ride the
    gripper with their top face at gripper height.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    cfg = world.config
    _validate_commands(commands, cfg)
    events: list[str] = []
    robot = world.robot

    # arm
    arm = tuple(_clamp(q + v * dt, lo, hi)
                for q, v, (lo, hi) in zip(robot.arm, commands.joints, cfg.joint_limits))

    # base: rotate, then translate with swept-box collision against statics
    x, y, th = robot.base_pose
    vx, vy, om = commands.base
    th_new = wrap_angle(th + om * dt)
    dx, dy = rot2(th, (vx * dt, vy * dt))
    frac = _swept_fraction((x, y), (dx, dy), _base_blockers(world), cfg.base_half_width)
    if frac < 1.0:
        events.append("bumper")
        frac = max(0.0, frac - 1e-6)
    base = (x + frac * dx, y + frac * dy, th_new)

    robot = replace(robot, base_pose=base, arm=arm)
    grip_pos, _, _ = gripper_pose(robot, cfg)
    held = robot.held_object
    gripper_open = robot.gripper_open
    objects = world.objects

    if commands.gripper == "close" and gripper_open:
        gripper_open = False
        if held is None:
            best = None
            for o in objects:
                if not o.graspable:
                    continue
                c = o.aabb.center
                d = math.dist(c, grip_pos)
                if d <= cfg.grasp_tolerance and (best is None or d < best[0]):
                    best = (d, o.id)
            if best is not None:
                held = best[1]
                events.append(f"grasp id={held}")
    elif commands.gripper == "open" and not gripper_open:
        gripper_open = True
        if held is not None:
            obj = world.object_by_id(held)
            ex, ey, ez = obj.aabb.extents
            support = _rest_height(world, grip_pos[0], grip_pos[1], grip_pos[2] - ez)
            new_aabb = AABB.from_center((grip_pos[0], grip_pos[1], support + ez / 2),
                                        (ex, ey, ez))
            objects = tuple(replace(o, aabb=new_aabb) if o.id == held else o
                            for o in objects)
            events.append(f"release id={held}")
            held = None

    carry = 0.0
    if held is not None:
        obj = world.object_by_id(held)
        ex, ey, ez = obj.aabb.extents
        # carried objects hang from the hand: top face at gripper height
        new_aabb = AABB.from_center((grip_pos[0], grip_pos[1], grip_pos[2] - ez / 2),
                                    (ex, ey, ez))
        objects = tuple(replace(o, aabb=new_aabb) if o.id == held else o
                        for o in objects)
        carry = grip_pos[2]

    robot = replace(robot, gripper_open=gripper_open, held_object=held, carry_height=carry)
    return replace(world, robot=robot, objects=objects,
                   clock=world.clock + dt, events=tuple(events))
