"""Finite boxes of the slab Z^2 x {0,...,k}: vertex/edge indexing and boundaries.

A slab of thickness k has k+1 square-lattice layers stacked along the third
coordinate. Bonds joining vertices within a layer are *radial* (they carry the
parameter p); bonds joining the same lateral site in consecutive layers are
*axial* (they carry q).

Edge enumeration order (stable across runs, relied on by samplers and dumps):

* radial edges first, layer by layer (z = 0..k); inside a layer all +x edges
  in row-major order, then all +y edges in row-major order;
* axial edges last, column-major: x outermost, then y, then z = 0..k-1.

Both directions of the index map are closed formulas, so no lookup tables are
stored even for multi-million-edge boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GeometryError, ResourceLimitError

# Vertex ids are int32 in the hot kernels; keep boxes comfortably below that.
MAX_VERTICES = 2**31 - 1
MAX_EDGES = 2**31 - 1

Coord = tuple[int, int, int]


class EdgeClass(Enum):
    RADIAL = "radial"
    AXIAL = "axial"


@dataclass(frozen=True)
class SlabSpec:
    """Slab thickness; the number of layers is k + 1."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise GeometryError(f"thickness k must be >= 0, got {self.k}")


@dataclass(frozen=True)
class CenteredBox:
    """Lateral square [-n, n]^2, all layers."""

    n: int


@dataclass(frozen=True)
class RectBox:
    """Lateral rectangle [x0, x1] x [y0, y1], all layers."""

    x0: int
    x1: int
    y0: int
    y1: int


class LatticeBox:
    """Immutable finite box of a slab with deterministic edge indexing.

    Safe to share across threads; construction is the only mutation.
    """

    def __init__(self, spec: SlabSpec, shape):
        if isinstance(shape, CenteredBox):
            if shape.n < 1:
                raise GeometryError(f"centered box needs n >= 1, got {shape.n}")
            x0, x1, y0, y1 = -shape.n, shape.n, -shape.n, shape.n
        elif isinstance(shape, RectBox):
            x0, x1, y0, y1 = shape.x0, shape.x1, shape.y0, shape.y1
            # width- or height-1 strips are legal (single-edge oracle instances)
            if x1 < x0 or y1 < y0:
                raise GeometryError(f"degenerate rectangle {shape}")
        else:
            raise GeometryError(f"unknown box shape {shape!r}")

        self.spec = spec
        self.shape = shape
        self.k = spec.k
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.width = x1 - x0 + 1
        self.height = y1 - y0 + 1
        self.layers = spec.k + 1

        W, H, L = self.width, self.height, self.layers
        self.vertex_count = W * H * L
        if self.vertex_count > MAX_VERTICES:
            raise ResourceLimitError(
                f"box has {self.vertex_count} vertices, over the index width cap"
            )

        self._east_per_layer = (W - 1) * H
        self._north_per_layer = W * (H - 1)
        self._radial_per_layer = self._east_per_layer + self._north_per_layer
        self.radial_count = self._radial_per_layer * L
        self.axial_count = W * H * (L - 1)
        self.edge_count = self.radial_count + self.axial_count
        if self.edge_count > MAX_EDGES:
            raise ResourceLimitError(
                f"box has {self.edge_count} edges, over the index width cap"
            )

        self._endpoints = None  # built lazily; large boxes may never need them

    # ---- vertices -------------------------------------------------------

    def contains(self, x: int, y: int, z: int) -> bool:
        return (
            self.x0 <= x <= self.x1
            and self.y0 <= y <= self.y1
            and 0 <= z <= self.k
        )

    def vertex_id(self, x: int, y: int, z: int) -> int:
        if not self.contains(x, y, z):
            raise GeometryError(f"vertex ({x},{y},{z}) outside {self.shape_token()}")
        return (z * self.height + (y - self.y0)) * self.width + (x - self.x0)

    def vertex_coord(self, v: int) -> Coord:
        if not 0 <= v < self.vertex_count:
            raise GeometryError(f"vertex id {v} out of range")
        x = v % self.width
        rest = v // self.width
        y = rest % self.height
        z = rest // self.height
        return (x + self.x0, y + self.y0, z)

    # ---- edges ----------------------------------------------------------

    def edge_index(self, a: Coord, b: Coord) -> int:
        """Index of the edge joining a and b (order-insensitive)."""
        ax, ay, az = a
        bx, by, bz = b
        if abs(ax - bx) + abs(ay - by) + abs(az - bz) != 1:
            raise GeometryError(f"{a} and {b} are not nearest neighbours")
        if not (self.contains(*a) and self.contains(*b)):
            raise GeometryError(f"edge {a}-{b} outside {self.shape_token()}")
        # normalize to the +direction endpoint
        if (bx, by, bz) < (ax, ay, az):
            ax, ay, az, bx, by, bz = bx, by, bz, ax, ay, az
        W, H = self.width, self.height
        R1, Re = self._radial_per_layer, self._east_per_layer
        if bz == az + 1:
            col = (ax - self.x0) * H + (ay - self.y0)
            return self.radial_count + col * self.k + az
        if bx == ax + 1:
            return az * R1 + (ay - self.y0) * (W - 1) + (ax - self.x0)
        # by == ay + 1
        return az * R1 + Re + (ay - self.y0) * W + (ax - self.x0)

    def edge_info(self, e: int) -> tuple[Coord, Coord, EdgeClass]:
        """Endpoints and class of edge e."""
        if not 0 <= e < self.edge_count:
            raise GeometryError(f"edge index {e} out of range (0..{self.edge_count - 1})")
        W, H = self.width, self.height
        if e < self.radial_count:
            z, r = divmod(e, self._radial_per_layer)
            if r < self._east_per_layer:
                y, x = divmod(r, W - 1)
                a = (x + self.x0, y + self.y0, z)
                b = (a[0] + 1, a[1], z)
            else:
                y, x = divmod(r - self._east_per_layer, W)
                a = (x + self.x0, y + self.y0, z)
                b = (a[0], a[1] + 1, z)
            return a, b, EdgeClass.RADIAL
        col, z = divmod(e - self.radial_count, self.k)
        x, y = divmod(col, H)
        a = (x + self.x0, y + self.y0, z)
        return a, (a[0], a[1], z + 1), EdgeClass.AXIAL

    def edge_class(self, e: int) -> EdgeClass:
        return EdgeClass.RADIAL if e < self.radial_count else EdgeClass.AXIAL

    def edge_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """(eu, ev) int32 vertex-id arrays in edge-index order (cached)."""
        if self._endpoints is None:
            W, H, L, k = self.width, self.height, self.layers, self.k
            plane = np.arange(W * H, dtype=np.int32).reshape(H, W)
            us, vs = [], []
            east_u = plane[:, :-1].ravel()
            north_u = plane[:-1, :].ravel()
            for z in range(L):
                off = np.int32(z * W * H)
                us.append(east_u + off)
                vs.append(east_u + off + 1)
                us.append(north_u + off)
                vs.append(north_u + off + W)
            if k > 0:
                # column-major: x outer, then y, then z
                cols = (np.arange(W)[:, None] + self.x0, np.arange(H)[None, :] + self.y0)
                base = ((cols[1] - self.y0) * W + (cols[0] - self.x0)).astype(np.int32)
                stack = base.reshape(W * H, 1) + (np.arange(k, dtype=np.int32) * W * H)[None, :]
                us.append(stack.ravel())
                vs.append(stack.ravel() + W * H)
            eu = np.concatenate(us).astype(np.int32)
            ev = np.concatenate(vs).astype(np.int32)
            eu.setflags(write=False)
            ev.setflags(write=False)
            self._endpoints = (eu, ev)
        return self._endpoints

    # ---- vertex sets ----------------------------------------------------

    def ring_vertices(self, radius: int) -> np.ndarray:
        """Ids of vertices with max(|x|, |y|) == radius, all layers (centered boxes)."""
        if not isinstance(self.shape, CenteredBox):
            raise GeometryError("ring selection needs a centered box; use face selectors")
        if radius < 1 or radius > self.shape.n:
            raise GeometryError(f"radius {radius} outside box of radius {self.shape.n}")
        ids = []
        for z in range(self.layers):
            for x in range(-radius, radius + 1):
                ids.append(self.vertex_id(x, -radius, z))
                ids.append(self.vertex_id(x, radius, z))
            for y in range(-radius + 1, radius):
                ids.append(self.vertex_id(-radius, y, z))
                ids.append(self.vertex_id(radius, y, z))
        return np.array(sorted(ids), dtype=np.int32)

    def face_vertices(self, side: str) -> np.ndarray:
        """Ids of a lateral face: side in {'x0','x1','y0','y1'}, all layers."""
        sel = {
            "x0": lambda x, y: x == self.x0,
            "x1": lambda x, y: x == self.x1,
            "y0": lambda x, y: y == self.y0,
            "y1": lambda x, y: y == self.y1,
        }
        if side not in sel:
            raise GeometryError(f"unknown face {side!r}")
        keep = sel[side]
        ids = [
            self.vertex_id(x, y, z)
            for z in range(self.layers)
            for y in range(self.y0, self.y1 + 1)
            for x in range(self.x0, self.x1 + 1)
            if keep(x, y)
        ]
        return np.array(ids, dtype=np.int32)

    def shape_token(self) -> str:
        """Compact shape descriptor used in config dumps and CLI metadata."""
        if isinstance(self.shape, CenteredBox):
            return f"centered:{self.shape.n}"
        return f"rect:{self.x0}:{self.x1}:{self.y0}:{self.y1}"

    def __repr__(self):
        return (
            f"LatticeBox(k={self.k}, {self.shape_token()}, "
            f"V={self.vertex_count}, E={self.edge_count})"
        )


def build_box(spec: SlabSpec, shape) -> LatticeBox:
    """Construct a box; see the module docstring for the edge order contract."""
    return LatticeBox(spec, shape)


def parse_shape(token: str):
    """Inverse of LatticeBox.shape_token."""
    parts = token.split(":")
    if parts[0] == "centered" and len(parts) == 2:
        return CenteredBox(int(parts[1]))
    if parts[0] == "rect" and len(parts) == 5:
        return RectBox(*(int(t) for t in parts[1:]))
    raise GeometryError(f"cannot parse shape token {token!r}")


def boundary(box: LatticeBox) -> np.ndarray:
    """Vertex ids of the lateral boundary of a centered box (all layers)."""
    if not isinstance(box.shape, CenteredBox):
        raise GeometryError("boundary is defined for centered boxes only")
    return box.ring_vertices(box.shape.n)
