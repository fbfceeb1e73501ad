"""Union-find connectivity over one configuration and the connection events.

Every event here is increasing in the set of open edges: opening more edges
can only turn it on. That monotonicity is what makes coupled comparisons and
bisection on event probabilities valid, and it is property-tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import GeometryError
from .lattice import CenteredBox, Coord, LatticeBox
from .sampler import BondConfig


class ClusterForest:
    """Connectivity queries for one configuration on one box.

    Roots are fully path-compressed at build time, so queries are plain
    array lookups. Built and used by a single replica at a time.
    """

    def __init__(self, box: LatticeBox, roots: np.ndarray):
        self.box = box
        self.roots = roots
        self._sizes = None

    def _vid(self, v) -> int:
        return v if isinstance(v, (int, np.integer)) else self.box.vertex_id(*v)

    def root(self, v) -> int:
        return int(self.roots[self._vid(v)])

    def connected(self, a, b) -> bool:
        return self.roots[self._vid(a)] == self.roots[self._vid(b)]

    def cluster_size(self, v) -> int:
        if self._sizes is None:
            self._sizes = np.bincount(self.roots, minlength=self.box.vertex_count)
        return int(self._sizes[self.roots[self._vid(v)]])

    def cluster_vertices(self, v) -> np.ndarray:
        return np.nonzero(self.roots == self.roots[self._vid(v)])[0]


def build_forest(box: LatticeBox, config: BondConfig) -> ClusterForest:
    """Single pass of union-find over the open edges."""
    if config.open_mask.shape[0] != box.edge_count:
        raise GeometryError("config length does not match box")
    eu, ev = box.edge_endpoints()
    roots = _kernels.roots_from_mask(box.vertex_count, eu, ev, config.open_mask)
    return ClusterForest(box, roots)


def cluster_size(forest: ClusterForest, v) -> int:
    return forest.cluster_size(v)


# ---- event specifications -------------------------------------------------

@dataclass(frozen=True)
class OriginToBoundary:
    """Origin joined to some vertex with max(|x|, |y|) = n."""

    n: int


@dataclass(frozen=True)
class Connected:
    a: Coord
    b: Coord


@dataclass(frozen=True)
class ClusterSizeAtLeast:
    v: Coord
    s: int


@dataclass(frozen=True)
class LeftRightCrossing:
    """Open path from the face x = x0 to the face x = x1, any layers."""


@dataclass(frozen=True)
class ReachFromRect:
    """Some vertex of [x0,x1] x [y0,y1] (all layers) joined to a vertex at
    lateral sup-distance exactly m from that rectangle."""

    x0: int
    x1: int
    y0: int
    y1: int
    m: int


@dataclass(frozen=True)
class BlockReach:
    """Reach event of the m-block at renormalized site (vx, vy).

    The block footprint is [m*vx+1, m*vx+m] x [m*vy+1, m*vy+m], all layers;
    the target is any vertex at lateral sup-distance exactly m from it.
    """

    vx: int
    vy: int
    m: int

    def rect(self) -> ReachFromRect:
        m = self.m
        return ReachFromRect(
            m * self.vx + 1, m * self.vx + m, m * self.vy + 1, m * self.vy + m, m
        )


EventSpec = (
    OriginToBoundary
    | Connected
    | ClusterSizeAtLeast
    | LeftRightCrossing
    | ReachFromRect
    | BlockReach
)


def describe_event(spec) -> str:
    """Stable one-token description used in CSV output and metadata.

    Coordinates are joined with underscores so the token never carries a
    comma and stays a single CSV field.
    """
    if isinstance(spec, OriginToBoundary):
        return f"origin-to-boundary:{spec.n}"
    if isinstance(spec, Connected):
        a = "_".join(map(str, spec.a))
        b = "_".join(map(str, spec.b))
        return f"connected:{a}:{b}"
    if isinstance(spec, ClusterSizeAtLeast):
        v = "_".join(map(str, spec.v))
        return f"cluster-at-least:{v}:{spec.s}"
    if isinstance(spec, LeftRightCrossing):
        return "left-right"
    if isinstance(spec, BlockReach):
        return f"block-reach:{spec.vx}_{spec.vy}:{spec.m}"
    if isinstance(spec, ReachFromRect):
        return f"rect-reach:{spec.x0}:{spec.x1}:{spec.y0}:{spec.y1}:{spec.m}"
    raise TypeError(f"unknown event spec {spec!r}")


def _reach_terminals(box: LatticeBox, rect: ReachFromRect):
    x0, x1, y0, y1, m = rect.x0, rect.x1, rect.y0, rect.y1, rect.m
    if m < 1:
        raise GeometryError("reach distance m must be >= 1")
    need = (x0 - m, x1 + m, y0 - m, y1 + m)
    have = (box.x0, box.x1, box.y0, box.y1)
    if need[0] < have[0] or need[1] > have[1] or need[2] < have[2] or need[3] > have[3]:
        raise GeometryError(
            f"reach event needs lateral range x:[{need[0]},{need[1]}] "
            f"y:[{need[2]},{need[3]}] but box covers x:[{have[0]},{have[1]}] "
            f"y:[{have[2]},{have[3]}] (margin {m} missing)"
        )
    src = [
        box.vertex_id(x, y, z)
        for z in range(box.layers)
        for y in range(y0, y1 + 1)
        for x in range(x0, x1 + 1)
    ]
    dst = []
    for z in range(box.layers):
        for x in range(x0 - m, x1 + m + 1):
            dst.append(box.vertex_id(x, y0 - m, z))
            dst.append(box.vertex_id(x, y1 + m, z))
        for y in range(y0 - m + 1, y1 + m):
            dst.append(box.vertex_id(x0 - m, y, z))
            dst.append(box.vertex_id(x1 + m, y, z))
    return np.array(src, dtype=np.int32), np.array(dst, dtype=np.int32)


def event_terminals(box: LatticeBox, spec) -> tuple[np.ndarray, np.ndarray]:
    """(src, dst) vertex-id arrays whose connection realizes the event.

    Valid for every event except ClusterSizeAtLeast, which is not a
    two-terminal connection (handled separately by callers).
    """
    if isinstance(spec, OriginToBoundary):
        if not isinstance(box.shape, CenteredBox):
            raise GeometryError("origin-to-boundary needs a centered box")
        if spec.n < 1 or spec.n > box.shape.n:
            raise GeometryError(
                f"boundary radius {spec.n} outside centered box of radius {box.shape.n}"
            )
        src = np.array([box.vertex_id(0, 0, 0)], dtype=np.int32)
        return src, box.ring_vertices(spec.n)
    if isinstance(spec, Connected):
        a = np.array([box.vertex_id(*spec.a)], dtype=np.int32)
        b = np.array([box.vertex_id(*spec.b)], dtype=np.int32)
        return a, b
    if isinstance(spec, LeftRightCrossing):
        return box.face_vertices("x0"), box.face_vertices("x1")
    if isinstance(spec, BlockReach):
        return _reach_terminals(box, spec.rect())
    if isinstance(spec, ReachFromRect):
        return _reach_terminals(box, spec)
    raise TypeError(f"{describe_event(spec)} is not a two-terminal event")


def evaluate_event(forest: ClusterForest, box: LatticeBox, spec) -> bool:
    """Does the event hold in this configuration?"""
    if isinstance(spec, ClusterSizeAtLeast):
        if spec.s <= 0:
            return True
        return forest.cluster_size(spec.v) >= spec.s
    src, dst = event_terminals(box, spec)
    src_roots = np.unique(forest.roots[src])
    dst_roots = np.unique(forest.roots[dst])
    return bool(np.intersect1d(src_roots, dst_roots, assume_unique=True).size)
