"""Line-oriented arena document format.

Directives (one per line, ``#`` starts a comment):

    arena W H
    wall x1 y1 x2 y2 h [door=<name>] [opens=<seconds>]
    furniture <name> x y z dx dy dz
    object <class> x y z dx dy dz [category=<c>] [graspable]
    person <id> color R G B [drink] [wave t0 t1 ...] waypoints t,x,y t,x,y ...
    robot x y theta
    zone <name> x y r
    say <person_id> <text...>

Coordinates are meters in the world frame; for furniture and objects, x y z is
the box center and dx dy dz its extents. Wall segments are axis-aligned and
become thin boxes of configured thickness; the arena perimeter is walled
automatically. ``say`` lines form the scripted dialogue channel consumed in
order by task scripts.
"""
from __future__ import annotations

from .geometry import AABB
from .world import SimConfig, SimObject, SimPerson, StaticBox, RobotState, World

BOUNDARY_WALL_HEIGHT = 2.5


class ArenaError(Exception):
    """Base for arena document problems."""


class ArenaSyntaxError(ArenaError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ArenaSemanticError(ArenaError):
    pass


def _floats(tokens, n, line_no, what):
    if len(tokens) < n:
        raise ArenaSyntaxError(line_no, f"{what}: expected {n} numbers, got {len(tokens)}")
    try:
        return [float(t) for t in tokens[:n]]
    except ValueError as e:
        raise ArenaSyntaxError(line_no, f"{what}: {e}") from None


def _wall_box(x1, y1, x2, y2, h, thickness, line_no) -> AABB:
    if x1 != x2 and y1 != y2:
        raise ArenaSyntaxError(line_no, "wall segments must be axis-aligned")
    lo = (min(x1, x2) - (thickness / 2 if x1 == x2 else 0.0),
          min(y1, y2) - (thickness / 2 if y1 == y2 else 0.0), 0.0)
    hi = (max(x1, x2) + (thickness / 2 if x1 == x2 else 0.0),
          max(y1, y2) + (thickness / 2 if y1 == y2 else 0.0), h)
    return AABB(lo, hi)


def _parse_person(tokens, line_no) -> SimPerson:
    if len(tokens) < 5 or tokens[1] != "color":
        raise ArenaSyntaxError(line_no, "person: expected '<id> color R G B ...'")
    pid = tokens[0]
    r, g, b = _floats(tokens[2:5], 3, line_no, "person color")
    rest = tokens[5:]
    has_drink = False
    if rest and rest[0] == "drink":
        has_drink = True
        rest = rest[1:]
    wave: list[tuple[float, float]] = []
    if rest and rest[0] == "wave":
        rest = rest[1:]
        times = []
        while rest and rest[0] != "waypoints":
            times.append(rest.pop(0))
        if len(times) % 2 != 0:
            raise ArenaSyntaxError(line_no, "person wave: expected pairs of start/end times")
        vals = _floats(times, len(times), line_no, "person wave")
        wave = [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
        if any(t1 <= t0 for t0, t1 in wave):
            raise ArenaSyntaxError(line_no, "person wave: intervals must have t0 < t1")
    if not rest or rest[0] != "waypoints" or len(rest) < 2:
        raise ArenaSyntaxError(line_no, "person: expected 'waypoints t,x,y ...'")
    waypoints = []
    for tok in rest[1:]:
        parts = tok.split(",")
        if len(parts) != 3:
            raise ArenaSyntaxError(line_no, f"person waypoint {tok!r}: expected t,x,y")
        vals = _floats(parts, 3, line_no, "person waypoint")
        waypoints.append((vals[0], vals[1], vals[2]))
    try:
        return SimPerson(id=pid, trajectory=tuple(waypoints),
                         torso_color=(r, g, b), wave_script=tuple(wave),
                         has_drink=has_drink)
    except ValueError as e:
        raise ArenaSemanticError(f"line {line_no}: {e}") from None


def load_arena(text: str, config: SimConfig | None = None, rng_seed: int = 0) -> World:
    """Parse an arena document into a World. Parsing is total and order-preserving."""
    cfg = config or SimConfig()
    bounds: tuple[float, float] | None = None
    walls: list[StaticBox] = []
    furniture: list[StaticBox] = []
    objects: list[SimObject] = []
    people: list[SimPerson] = []
    zones: dict[str, tuple[float, float, float]] = {}
    dialogue: list[tuple[str, str]] = []
    robot_pose: tuple[float, float, float] | None = None
    wall_count = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0], tokens[1:]

        if directive == "arena":
            w, h = _floats(args, 2, line_no, "arena")
            if w <= 0 or h <= 0:
                raise ArenaSemanticError(f"line {line_no}: arena dimensions must be positive")
            bounds = (w, h)
        elif directive == "wall":
            x1, y1, x2, y2, h = _floats(args, 5, line_no, "wall")
            door = None
            opens = None
            for extra in args[5:]:
                if extra.startswith("door="):
                    door = extra[5:]
                elif extra.startswith("opens="):
                    try:
                        opens = float(extra[6:])
                    except ValueError:
                        raise ArenaSyntaxError(line_no, f"bad opens value {extra!r}") from None
                else:
                    raise ArenaSyntaxError(line_no, f"unknown wall option {extra!r}")
            wall_count += 1
            walls.append(StaticBox(_wall_box(x1, y1, x2, y2, h, cfg.wall_thickness, line_no),
                                   kind="wall", name=f"wall{wall_count}",
                                   door=door, opens_at=opens))
        elif directive == "furniture":
            if len(args) < 7:
                raise ArenaSyntaxError(line_no, "furniture: expected name and 6 numbers")
            name = args[0]
            x, y, z, dx, dy, dz = _floats(args[1:7], 6, line_no, "furniture")
            if dx <= 0 or dy <= 0 or dz <= 0:
                raise ArenaSemanticError(f"line {line_no}: furniture {name} extents must be positive")
            furniture.append(StaticBox(AABB.from_center((x, y, z), (dx, dy, dz)),
                                       kind="furniture", name=name))
        elif directive == "object":
            if len(args) < 7:
                raise ArenaSyntaxError(line_no, "object: expected class and 6 numbers")
            label = args[0]
            x, y, z, dx, dy, dz = _floats(args[1:7], 6, line_no, "object")
            category = None
            graspable = False
            for extra in args[7:]:
                if extra.startswith("category="):
                    category = extra[9:]
                elif extra == "graspable":
                    graspable = True
                else:
                    raise ArenaSyntaxError(line_no, f"unknown object option {extra!r}")
            if dx <= 0 or dy <= 0 or dz <= 0:
                raise ArenaSemanticError(f"line {line_no}: object {label} extents must be positive")
            objects.append(SimObject(id=len(objects) + 1, class_label=label,
                                     aabb=AABB.from_center((x, y, z), (dx, dy, dz)),
                                     category=category, graspable=graspable))
        elif directive == "person":
            people.append(_parse_person(args, line_no))
        elif directive == "robot":
            x, y, th = _floats(args, 3, line_no, "robot")
            robot_pose = (x, y, th)
        elif directive == "zone":
            if len(args) < 4:
                raise ArenaSyntaxError(line_no, "zone: expected name x y r")
            x, y, r = _floats(args[1:4], 3, line_no, "zone")
            zones[args[0]] = (x, y, r)
        elif directive == "say":
            if len(args) < 2:
                raise ArenaSyntaxError(line_no, "say: expected person id and text")
            dialogue.append((args[0], " ".join(args[1:])))
        else:
            raise ArenaSyntaxError(line_no, f"unknown directive {directive!r}")

    if bounds is None:
        raise ArenaSemanticError("missing 'arena W H' directive")
    w, h = bounds
    t = cfg.wall_thickness

    # perimeter walls sit just outside the declared bounds
    for name, lo, hi in (
            ("boundary-w", (-t, -t, 0.0), (0.0, h + t, BOUNDARY_WALL_HEIGHT)),
            ("boundary-e", (w, -t, 0.0), (w + t, h + t, BOUNDARY_WALL_HEIGHT)),
            ("boundary-s", (-t, -t, 0.0), (w + t, 0.0, BOUNDARY_WALL_HEIGHT)),
            ("boundary-n", (-t, h, 0.0), (w + t, h + t, BOUNDARY_WALL_HEIGHT))):
        walls.append(StaticBox(AABB(lo, hi), kind="wall", name=name))

    for obj in objects:
        cx, cy, _ = obj.aabb.center
        if not (0.0 <= cx <= w and 0.0 <= cy <= h):
            raise ArenaSemanticError(
                f"object {obj.class_label} center ({cx}, {cy}) outside arena bounds {bounds}")

    eps = cfg.furniture_overlap_eps
    for i, a in enumerate(furniture):
        for b in furniture[i + 1:]:
            if a.name != b.name:
                continue
            depth = min(min(h1, h2) - max(l1, l2)
                        for l1, h1, l2, h2 in zip(a.aabb.lo, a.aabb.hi, b.aabb.lo, b.aabb.hi))
            if depth > eps:
                raise ArenaSemanticError(
                    f"furniture {a.name!r}: boxes overlap by {depth:.3f} m (> {eps})")

    known = {p.id for p in people}
    for pid, _ in dialogue:
        if pid not in known:
            raise ArenaSemanticError(f"say: unknown person {pid!r}")

    if robot_pose is None:
        robot_pose = (w / 2.0, h / 2.0, 0.0)
    robot = RobotState(base_pose=robot_pose, arm=(0.0, 0.0, 0.0, 0.0, 0.0))
    return World(bounds=bounds, static_boxes=tuple(walls + furniture),
                 objects=tuple(objects), people=tuple(people), robot=robot,
                 zones=zones, dialogue=tuple(dialogue), config=cfg,
                 rng_seed=rng_seed)
