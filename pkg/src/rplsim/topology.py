"""Node placement and unit-disk connectivity.

A :class:`Topology` is an immutable value: positions, radio ranges and the
root id. Neighbor sets are derived from Euclidean distance only (UDGM).
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property


class TopologyError(ValueError):
    """Invalid generator arguments or unreachable connectivity."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise TopologyError(f"non-finite position ({self.x}, {self.y})")
        if self.x < 0 or self.y < 0:
            raise TopologyError(f"negative position ({self.x}, {self.y})")

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Topology:
    positions: dict[int, Position]
    tx_range: float
    interference_range: float
    root: int = 0

    def __post_init__(self):
        if self.root not in self.positions:
            raise TopologyError(f"root {self.root} has no position")
        if self.tx_range <= 0:
            raise TopologyError("tx_range must be positive")
        if self.interference_range < self.tx_range:
            raise TopologyError("interference_range must be >= tx_range")

    @property
    def node_ids(self) -> list[int]:
        return sorted(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def distance(self, a: int, b: int) -> float:
        return self.positions[a].distance(self.positions[b])

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        return self._within(self.tx_range)

    @cached_property
    def interferers(self) -> dict[int, frozenset[int]]:
        """Nodes whose transmissions reach each node at interference range."""
        return self._within(self.interference_range)

    def _within(self, radius: float) -> dict[int, frozenset[int]]:
        ids = self.node_ids
        out: dict[int, set[int]] = {i: set() for i in ids}
        for i, a in enumerate(ids):
            pa = self.positions[a]
            for b in ids[i + 1:]:
                if pa.distance(self.positions[b]) <= radius:
                    out[a].add(b)
                    out[b].add(a)
        return {k: frozenset(v) for k, v in out.items()}

    def edges(self) -> set[tuple[int, int]]:
        return {(a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b}

    def hop_depths(self) -> dict[int, int]:
        """BFS hop count from the root; unreachable nodes are omitted."""
        depth = {self.root: 0}
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for v in sorted(self.adjacency[u]):
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def is_connected(self) -> bool:
        return len(self.hop_depths()) == len(self.positions)

    def edge_node(self) -> int:
        """The deepest non-root node, ties broken by distance then id."""
        depth = self.hop_depths()
        candidates = [n for n in depth if n != self.root]
        if not candidates:
            raise TopologyError("topology has no non-root node")
        return max(candidates, key=lambda n: (depth[n], self.distance(self.root, n), n))

    def to_dict(self) -> dict:
        return {
            "positions": {str(k): [p.x, p.y] for k, p in sorted(self.positions.items())},
            "tx_range": self.tx_range,
            "interference_range": self.interference_range,
            "root": self.root,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        positions = {int(k): Position(float(x), float(y)) for k, (x, y) in d["positions"].items()}
        return cls(positions, float(d["tx_range"]), float(d["interference_range"]), int(d["root"]))


def neighbors(t: Topology, node_id: int) -> set[int]:
    """Nodes within ``tx_range`` of ``node_id`` (excluding itself)."""
    try:
        return set(t.adjacency[node_id])
    except KeyError:
        raise KeyError(f"unknown node id {node_id}") from None


def build_grid(rows: int, cols: int, spacing: float, tx_range: float,
               interference_range: float | None = None) -> Topology:
    """Regular grid with the root at the origin; ids assigned row-major."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise TopologyError(f"grid needs at least two nodes, got {rows}x{cols}")
    if spacing <= 0:
        raise TopologyError("spacing must be positive")
    positions = {r * cols + c: Position(c * spacing, r * spacing)
                 for r in range(rows) for c in range(cols)}
    return Topology(positions, tx_range, interference_range or 2 * tx_range, root=0)


def build_chain(length: int, spacing: float, tx_range: float | None = None,
                interference_range: float | None = None) -> Topology:
    """A line of ``length`` nodes; node ``i`` sits ``i`` hops from the root."""
    return build_grid(1, length, spacing, tx_range or spacing, interference_range)


def build_random(n: int, area: tuple[float, float], tx_range: float, seed: int,
                 interference_range: float | None = None, max_tries: int = 1000) -> Topology:
    """Uniform placement, redrawn until the UDGM graph is connected.

    The root is node 0 and is placed like every other node.
    """
    if n < 2:
        raise TopologyError(f"need at least two nodes, got {n}")
    width, height = area
    if width <= 0 or height <= 0:
        raise TopologyError("area dimensions must be positive")
    rng = random.Random(f"topology:{seed}")
    for _ in range(max_tries):
        positions = {i: Position(rng.uniform(0, width), rng.uniform(0, height)) for i in range(n)}
        topo = Topology(positions, tx_range, interference_range or 2 * tx_range, root=0)
        if topo.is_connected():
            return topo
    raise TopologyError(f"no connected placement of {n} nodes after {max_tries} tries")
