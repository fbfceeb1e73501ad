"""Reproducible bond configurations under the anisotropic product measure.

One uniform value in [0, 1) is attached to every edge index; a configuration
is the pointwise threshold of that field (u < p on radial edges, u < q on
axial ones). Because the same field serves every parameter point, estimates
at different (p, q) can be coupled pathwise: raising p or q can only open
more edges.

Streams are counter-based (Philox keyed by the master seed). Stream s of a
box with E edges occupies the counter block starting at s * stride(E), where
stride pads E to a multiple of four draws; replicas therefore need no shared
state and any parallel schedule produces identical fields. Drawing replicas
[s0, s0 + R) as one batch yields bit-identical rows to R separate draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .lattice import LatticeBox, SlabSpec, build_box, parse_shape

CONFIG_HEADER = "slabperc-config v1"

# one value in [0, 1) per edge index of a box; rows of a block are replicas
UniformField = np.ndarray


@dataclass(frozen=True)
class ParamPoint:
    """Open probabilities: p for radial bonds, q for axial bonds."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError(f"parameters must lie in [0,1], got {self}")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus a stream index; replica r of a run uses stream_id + r."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    def offset(self, delta: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.stream_id + delta)


@dataclass
class BondConfig:
    """Open/closed state per edge index (True = open)."""

    open_mask: np.ndarray
    params: ParamPoint | None = None
    seed: SeedSpec | None = None

    def open_count(self) -> int:
        return int(self.open_mask.sum())


def _stride(edge_count: int) -> int:
    # Philox advances in blocks of 4 draws; pad so stream offsets stay aligned.
    return (edge_count + 3) & ~3


def _generator(master_seed: int, counter_blocks: int) -> np.random.Generator:
    bg = np.random.Philox(key=np.uint64(master_seed))
    if counter_blocks:
        bg.advance(counter_blocks)
    return np.random.Generator(bg)


def draw_uniforms(box: LatticeBox, seed: SeedSpec) -> np.ndarray:
    """The uniform field of one stream: float64 in [0, 1), one per edge."""
    st = _stride(box.edge_count)
    gen = _generator(seed.master_seed, seed.stream_id * st // 4)
    return gen.random(st)[: box.edge_count]

def draw_uniform_block(box: LatticeBox, seed: SeedSpec, replicas: int) -> np.ndarray:
    """Uniform fields for streams seed.stream_id .. +replicas-1, one per row.

    Row r is bit-identical to draw_uniforms(box, seed.offset(r)). The result
    is a view into a padded buffer; use `.copy()` if contiguity matters.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    st = _stride(box.edge_count)
    gen = _generator(seed.master_seed, seed.stream_id * st // 4)
    block = gen.random(replicas * st).reshape(replicas, st)
    return block[:, : box.edge_count]


def threshold_config(uniforms: np.ndarray, box: LatticeBox, params: ParamPoint) -> BondConfig:
    """Edge e opens iff its uniform is below p (radial) or q (axial)."""
    if uniforms.shape[-1] != box.edge_count:
        raise GeometryError(
            f"uniform field has {uniforms.shape[-1]} entries, box has {box.edge_count} edges"
        )
    nr = box.radial_count
    mask = np.empty(box.edge_count, dtype=bool)
    mask[:nr] = uniforms[:nr] < params.p
    mask[nr:] = uniforms[nr:] < params.q
    return BondConfig(mask, params=params)


def sample_config(box: LatticeBox, params: ParamPoint, seed: SeedSpec) -> BondConfig:
    """One configuration from one stream (threshold of draw_uniforms)."""
    cfg = threshold_config(draw_uniforms(box, seed), box, params)
    cfg.seed = seed
    return cfg


def open_threshold_bits(prob: float) -> int:
    """Raw-bit cutoff equivalent to `uniform < prob` for 53-bit doubles.

    Philox doubles are (raw >> 11) * 2**-53, so u < prob iff
    (raw >> 11) < ceil(prob * 2**53); this powers the fast sampling path.
    """
    return math.ceil(prob * 2.0**53)


def raw_block(box: LatticeBox, seed: SeedSpec, replicas: int) -> np.ndarray:
    """Raw 64-bit words of the same streams that draw_uniform_block consumes."""
    st = _stride(box.edge_count)
    bg = np.random.Philox(key=np.uint64(seed.master_seed))
    if seed.stream_id:
        bg.advance(seed.stream_id * st // 4)
    raw = bg.random_raw(replicas * st).reshape(replicas, st)
    return raw[:, : box.edge_count]


# ---- dump / load ---------------------------------------------------------

def dump_config(box: LatticeBox, config: BondConfig) -> str:
    """Serialize to a two-line text form: header, then hex-packed bits."""
    if config.open_mask.shape[0] != box.edge_count:
        raise GeometryError("config length does not match box")
    header = (
        f"{CONFIG_HEADER} k={box.k} shape={box.shape_token()} edges={box.edge_count}"
    )
    packed = np.packbits(config.open_mask.astype(np.uint8))
    return header + "\n" + packed.tobytes().hex() + "\n"


def load_config(text: str) -> tuple[LatticeBox, BondConfig]:
    """Parse a dump back into its box and configuration."""
    lines = text.strip().splitlines()
    if len(lines) != 2 or not lines[0].startswith(CONFIG_HEADER):
        raise ValueError("not a slabperc config dump")
    fields = dict(part.split("=", 1) for part in lines[0].split()[2:])
    k = int(fields["k"])
    edges = int(fields["edges"])
    box = build_box(SlabSpec(k), parse_shape(fields["shape"]))
    if box.edge_count != edges:
        raise ValueError(
            f"header says {edges} edges but shape expands to {box.edge_count}"
        )
    packed = np.frombuffer(bytes.fromhex(lines[1]), dtype=np.uint8)
    mask = np.unpackbits(packed)[:edges].astype(bool)
    return box, BondConfig(mask)
