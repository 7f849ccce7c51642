"""Semantic object memory: KD-tree-indexed point estimates with gate-based
fusion, surface queries, RANSAC edge finding, bounding-box fitting, and an
event-based subscriber model.

The KD-tree is rebuilt eagerly after each write batch; at desk scale
correctness beats incremental cleverness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import AABB
from .seeding import stable_rng


@dataclass(frozen=True)
class ObjectEstimate:
    id: int
    class_label: str
    centroid: tuple[float, float, float]
    aabb: AABB                       # union of observed centers
    observation_count: int = 1
    last_seen: float = 0.0


@dataclass(frozen=True)
class SurfaceModel:
    kind: str                        # "horizontal-edge" | "plane"
    height: float
    inliers: tuple[int, ...]
    support: tuple[float, float]     # extent of inliers along the profile axis


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 50
    inlier_tol: float = 0.01
    min_inliers: int = 10
    height_tol: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class Subscriber:
    name: str
    class_label: str | None = None
    region: AABB | None = None

    def matches(self, est: ObjectEstimate) -> bool:
        if self.class_label is not None and est.class_label != self.class_label:
            return False
        if self.region is not None and not self.region.contains(est.centroid):
            return False
        return True


# ---------------------------------------------------------------------------
# KD-tree (3D, exact k-NN with id tie-break)
# ---------------------------------------------------------------------------

class _KDNode:
    __slots__ = ("point", "eid", "axis", "left", "right")

    def __init__(self, point, eid, axis):
        self.point = point
        self.eid = eid
        self.axis = axis
        self.left: "_KDNode | None" = None
        self.right: "_KDNode | None" = None


def _build(items: list[tuple[tuple[float, float, float], int]], depth: int):
    if not items:
        return None
    axis = depth % 3
    items.sort(key=lambda it: (it[0][axis], it[1]))
    mid = len(items) // 2
    node = _KDNode(items[mid][0], items[mid][1], axis)
    node.left = _build(items[:mid], depth + 1)
    node.right = _build(items[mid + 1:], depth + 1)
    return node


def _sq_dist(a, b) -> float:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2


def _knn(node, point, k, best: list[tuple[float, int]]):
    if node is None:
        return
    d = _sq_dist(node.point, point)
    cand = (d, node.eid)
    if len(best) < k or cand < best[-1]:
        lo, hi = 0, len(best)
        while lo < hi:
            mid = (lo + hi) // 2
            if best[mid] < cand:
                lo = mid + 1
            else:
                hi = mid
        best.insert(lo, cand)
        if len(best) > k:
            best.pop()
    diff = point[node.axis] - node.point[node.axis]
    near, far = (node.left, node.right) if diff <= 0 else (node.right, node.left)
    _knn(near, point, k, best)
    if len(best) < k or diff * diff <= best[-1][0]:
        _knn(far, point, k, best)


class ObjectCloud:
    """Estimate store whose KD-tree and id map stay in bijection."""

    def __init__(self, association_gate: float = 0.1):
        self.association_gate = association_gate
        self.estimates: dict[int, ObjectEstimate] = {}
        self._subscribers: list[Subscriber] = []
        self._changed: set[int] = set()
        self._next_id = 1
        self._root = None

    def _rebuild(self) -> None:
        items = [(e.centroid, e.id) for e in self.estimates.values()]
        self._root = _build(items, 0)

    def upsert_detection(self, detection, when: float = 0.0) -> ObjectEstimate:
        """Fuse a detection (anything with class_label and center_3d) into the
        nearest same-class estimate within the gate, or insert a new one."""
        class_label = detection.class_label
        center = detection.center_3d
        best = None
        for e in self.estimates.values():
            if e.class_label != class_label:
                continue
            d = math.dist(e.centroid, center)
            if d <= self.association_gate and (best is None or (d, e.id) < best):
                best = (d, e.id)
        if best is not None:
            old = self.estimates[best[1]]
            n = old.observation_count
            centroid = tuple((c * n + p) / (n + 1) for c, p in zip(old.centroid, center))
            aabb = old.aabb.union(AABB(tuple(center), tuple(center)))
            est = replace(old, centroid=centroid, aabb=aabb,
                          observation_count=n + 1, last_seen=when)
        else:
            est = ObjectEstimate(id=self._next_id, class_label=class_label,
                                 centroid=tuple(center),
                                 aabb=AABB(tuple(center), tuple(center)),
                                 last_seen=when)
            self._next_id += 1
        self.estimates[est.id] = est
        self._changed.add(est.id)
        self._rebuild()
        return est

    def query_nearest(self, point, k: int) -> list[ObjectEstimate]:
        """k nearest estimates by ascending distance, ties broken by id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.estimates:
            raise ValueError("query on empty cloud")
        best: list[tuple[float, int]] = []
        _knn(self._root, tuple(point), k, best)
        return [self.estimates[eid] for _, eid in best]

    def query_above_surface(self, surface: SurfaceModel, xy_extent,
                            band: float = 0.5) -> list[ObjectEstimate]:
        """Estimates within (height, height + band] over the given xy rectangle."""
        x0, y0, x1, y1 = xy_extent
        out = [e for e in self.estimates.values()
               if surface.height < e.centroid[2] <= surface.height + band
               and x0 <= e.centroid[0] <= x1 and y0 <= e.centroid[1] <= y1]
        out.sort(key=lambda e: e.id)
        return out

    # -- events --------------------------------------------------------------

    def subscribe(self, sub: Subscriber) -> None:
        self._subscribers.append(sub)

    def dispatch_events(self) -> list[tuple[str, tuple[int, ...]]]:
        """Notify each matching subscriber once for the finished batch, in
        registration order; returns the notification log."""
        changed = [self.estimates[i] for i in sorted(self._changed)]
        self._changed.clear()
        log: list[tuple[str, tuple[int, ...]]] = []
        for sub in self._subscribers:
            ids = tuple(e.id for e in changed if sub.matches(e))
            if ids:
                log.append((sub.name, ids))
        return log

    def dump(self) -> str:
        lines = [f"object {e.id} {e.class_label} "
                 f"{e.centroid[0]:.3f} {e.centroid[1]:.3f} {e.centroid[2]:.3f} "
                 f"{e.observation_count}"
                 for e in sorted(self.estimates.values(), key=lambda e: e.id)]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Surface fitting and box fitting
# ---------------------------------------------------------------------------

def ransac_edge(points, target_height: float, params: RansacParams
                ) -> SurfaceModel | None:
    """Fit a horizontal edge (constant height) to (x, z) profile samples.

    The best hypothesis maximizes inlier count (ties: smallest residual sum),
    is refined by least squares over its inliers, and is accepted only when
    it lands within height_tol of the target with enough inliers. Returns
    None to signal "surface not found, keep scanning".
    """
    if params.iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not points:
        return None
    rng = stable_rng("ransac-edge", params.seed)
    zs = [p[1] for p in points]
    best: tuple[int, float, float] | None = None   # (-count, residual_sum, height)
    for _ in range(params.iterations):
        h = zs[rng.randrange(len(points))]
        count = 0
        resid = 0.0
        for z in zs:
            r = abs(z - h)
            if r <= params.inlier_tol:
                count += 1
                resid += r
        if count == 0:
            continue
        cand = (-count, resid, h)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    # least-squares refinement for a constant model is the inlier mean
    inliers0 = [i for i, z in enumerate(zs) if abs(z - best[2]) <= params.inlier_tol]
    h_ref = sum(zs[i] for i in inliers0) / len(inliers0)
    inliers = tuple(i for i, z in enumerate(zs) if abs(z - h_ref) <= params.inlier_tol)
    if len(inliers) < params.min_inliers:
        return None
    if abs(h_ref - target_height) > params.height_tol:
        return None
    xs = [points[i][0] for i in inliers]
    return SurfaceModel(kind="horizontal-edge", height=h_ref, inliers=inliers,
                        support=(min(xs), max(xs)))


def fit_bbox(voxel_centers, resolution: float) -> AABB:
    """Tight AABB over voxel cells: centers inflated by half a cell per side."""
    centers = list(voxel_centers)
    if not centers:
        raise ValueError("fit_bbox needs at least one voxel center")
    half = resolution / 2.0
    lo = tuple(min(c[i] for c in centers) - half for i in range(3))
    hi = tuple(max(c[i] for c in centers) + half for i in range(3))
    return AABB(lo, hi)
