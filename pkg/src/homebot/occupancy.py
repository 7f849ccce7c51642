"""Probabilistic occupancy octree with clamped log-odds updates.

Unseen space is log-odds 0 (probability 0.5). Updates add a hit/miss
increment and clamp; sibling leaves that end up carrying the same clamped
value are merged, and queries behave identically on pruned and unpruned
trees. Ray integration marks every traversed voxel as a miss and the
endpoint voxel as a hit, with at most one update per voxel per scan
(hit beats miss).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

L_HIT_DEFAULT = math.log(0.7 / 0.3)
L_MISS_DEFAULT = math.log(0.4 / 0.6)
CLAMP_MIN_DEFAULT = math.log(0.12 / 0.88)
CLAMP_MAX_DEFAULT = math.log(0.97 / 0.03)


def logistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class VoxelKey:
    ijk: tuple[int, int, int]
    depth: int


class _Node:
    __slots__ = ("log_odds", "children")

    def __init__(self, log_odds: float = 0.0):
        self.log_odds = log_odds
        self.children: list["_Node | None"] | None = None

    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class OccupancyOctree:
    origin: tuple[float, float, float]
    cells: tuple[int, int, int]          # real cell counts per axis at finest depth
    resolution: float = 0.05
    l_hit: float = L_HIT_DEFAULT
    l_miss: float = L_MISS_DEFAULT
    clamp_min: float = CLAMP_MIN_DEFAULT
    clamp_max: float = CLAMP_MAX_DEFAULT
    depth: int = field(init=False)
    root: _Node = field(init=False)

    def __post_init__(self):
        n = max(self.cells)
        self.depth = max(1, math.ceil(math.log2(n))) if n > 1 else 1
        self.root = _Node()

    @staticmethod
    def from_bounds(lo, hi, resolution: float = 0.05, **kw) -> "OccupancyOctree":
        cells = tuple(max(1, math.ceil((h - l) / resolution - 1e-9))
                      for l, h in zip(lo, hi))
        return OccupancyOctree(origin=tuple(lo), cells=cells,
                               resolution=resolution, **kw)

    # -- keys ---------------------------------------------------------------

    def key_for(self, point) -> VoxelKey:
        ijk = tuple(int(math.floor((p - o) / self.resolution))
                    for p, o in zip(point, self.origin))
        return VoxelKey(ijk, self.depth)

    def in_bounds(self, key: VoxelKey) -> bool:
        scale = 1 << (self.depth - key.depth)
        return all(0 <= v * scale < n for v, n in zip(key.ijk, self.cells))

    def voxel_center(self, ijk) -> tuple[float, float, float]:
        return tuple(o + (v + 0.5) * self.resolution
                     for v, o in zip(ijk, self.origin))

    # -- updates ------------------------------------------------------------

    def update_voxel(self, key: VoxelKey, is_hit: bool) -> "OccupancyOctree":
        if key.depth != self.depth:
            raise ValueError("updates address finest-depth voxels")
        if not self.in_bounds(key):
            raise ValueError(f"voxel key {key.ijk} out of bounds {self.cells}")
        inc = self.l_hit if is_hit else self.l_miss
        self._apply(self.root, key.ijk, self.depth, inc)
        return self

    def _apply(self, node: _Node, ijk, level: int, inc: float) -> None:
        if level == 0:
            node.log_odds = min(self.clamp_max, max(self.clamp_min, node.log_odds + inc))
            return
        if node.is_leaf():
            node.children = [_Node(node.log_odds) for _ in range(8)]
        b = level - 1
        idx = ((ijk[0] >> b) & 1) | (((ijk[1] >> b) & 1) << 1) | (((ijk[2] >> b) & 1) << 2)
        child = node.children[idx]
        if child is None:
            child = node.children[idx] = _Node(0.0)
        self._apply(child, ijk, level - 1, inc)
        self._try_prune(node)

    @staticmethod
    def _try_prune(node: _Node) -> None:
        kids = node.children
        if kids is None:
            return
        vals = set()
        for c in kids:
            if c is None:
                vals.add(0.0)
            elif c.is_leaf():
                vals.add(c.log_odds)
            else:
                return
            if len(vals) > 1:
                return
        node.children = None
        node.log_odds = vals.pop()

    def integrate_scan(self, origin, endpoints) -> "OccupancyOctree":
        """Apply one scan: rays carve misses to each endpoint, endpoints are hits.

        Each voxel is updated at most once per scan; a voxel that is both
        traversed and an endpoint gets only the hit.
        """
        hits: set[tuple[int, int, int]] = set()
        misses: set[tuple[int, int, int]] = set()
        for end in endpoints:
            for ijk in self.traverse(origin, end):
                misses.add(ijk)
            k = self.key_for(end)
            if self.in_bounds(k):
                hits.add(k.ijk)
        for ijk in sorted(hits):
            self.update_voxel(VoxelKey(ijk, self.depth), True)
        for ijk in sorted(misses - hits):
            self.update_voxel(VoxelKey(ijk, self.depth), False)
        return self

    def traverse(self, origin, end):
        """In-bounds voxels crossed by the segment, endpoint voxel excluded
        (3D digital differential analyzer)."""
        res = self.resolution
        u = [(o - g) / res for o, g in zip(origin, self.origin)]
        v = [(e - g) / res for e, g in zip(end, self.origin)]
        cell = [int(math.floor(c)) for c in u]
        goal = [int(math.floor(c)) for c in v]
        if cell == goal:
            return
        d = [b - a for a, b in zip(u, v)]
        step = [1 if di > 0 else (-1 if di < 0 else 0) for di in d]
        t_max = []
        t_delta = []
        for a, di, s, c in zip(u, d, step, cell):
            if s == 0:
                t_max.append(math.inf)
                t_delta.append(math.inf)
            else:
                boundary = c + (1 if s > 0 else 0)
                t_max.append((boundary - a) / di)
                t_delta.append(abs(1.0 / di))
        guard = 4 * (sum(abs(g - c) for g, c in zip(goal, cell)) + 3)
        for _ in range(guard):
            if all(0 <= c < n for c, n in zip(cell, self.cells)):
                yield tuple(cell)
            axis = t_max.index(min(t_max))
            cell[axis] += step[axis]
            t_max[axis] += t_delta[axis]
            if cell == goal or min(t_max) > 1.0 + 1e-12:
                return

    # -- queries ------------------------------------------------------------

    def occupancy_at(self, point) -> float:
        key = self.key_for(point)
        if not self.in_bounds(key):
            raise ValueError(f"point {point} outside mapped bounds")
        node = self.root
        level = self.depth
        while not node.is_leaf() and level > 0:
            b = level - 1
            idx = (((key.ijk[0] >> b) & 1) | (((key.ijk[1] >> b) & 1) << 1)
                   | (((key.ijk[2] >> b) & 1) << 2))
            child = node.children[idx]
            if child is None:
                return 0.5
            node = child
            level -= 1
        return logistic(node.log_odds)

    def occupied_voxels_in(self, box_lo, box_hi, threshold: float
                           ) -> list[tuple[float, float, float]]:
        """Centers of finest voxels inside the box with occupancy >= threshold.
        Pruned nodes expand virtually."""
        if not (0.5 < threshold < 1.0):
            raise ValueError("threshold must be in (0.5, 1)")
        out: list[tuple[float, float, float]] = []
        self._collect(self.root, (0, 0, 0), self.depth, box_lo, box_hi, threshold, out)
        return out

    def _collect(self, node, base, level, box_lo, box_hi, threshold, out):
        size = 1 << level
        cube_lo = [o + b * self.resolution for o, b in zip(self.origin, base)]
        cube_hi = [l + size * self.resolution for l in cube_lo]
        if any(cl >= bh or ch <= bl
               for cl, ch, bl, bh in zip(cube_lo, cube_hi, box_lo, box_hi)):
            return
        if node.is_leaf():
            if logistic(node.log_odds) < threshold:
                return
            for i in range(base[0], base[0] + size):
                if not i < self.cells[0]:
                    break
                for j in range(base[1], base[1] + size):
                    if not j < self.cells[1]:
                        break
                    for k in range(base[2], base[2] + size):
                        if not k < self.cells[2]:
                            break
                        c = self.voxel_center((i, j, k))
                        if all(bl <= cc <= bh for cc, bl, bh in zip(c, box_lo, box_hi)):
                            out.append(c)
            return
        half = size >> 1
        for idx, child in enumerate(node.children):
            if child is None:
                continue
            sub = (base[0] + (idx & 1) * half,
                   base[1] + ((idx >> 1) & 1) * half,
                   base[2] + ((idx >> 2) & 1) * half)
            self._collect(child, sub, level - 1, box_lo, box_hi, threshold, out)

    def dump(self) -> str:
        """Golden-file text: one `voxel i j k log_odds` line per touched finest
        voxel, lexicographically sorted."""
        lines: list[str] = []
        self._dump_node(self.root, (0, 0, 0), self.depth, lines)
        return "\n".join(sorted(lines))

    def _dump_node(self, node, base, level, lines):
        size = 1 << level
        if node.is_leaf():
            if node.log_odds == 0.0:
                return
            for i in range(base[0], min(base[0] + size, self.cells[0])):
                for j in range(base[1], min(base[1] + size, self.cells[1])):
                    for k in range(base[2], min(base[2] + size, self.cells[2])):
                        lines.append(f"voxel {i} {j} {k} {node.log_odds:.6f}")
            return
        half = size >> 1
        for idx, child in enumerate(node.children):
            if child is None:
                continue
            sub = (base[0] + (idx & 1) * half,
                   base[1] + ((idx >> 1) & 1) * half,
                   base[2] + ((idx >> 2) & 1) * half)
            self._dump_node(child, sub, level - 1, lines)
