"""Coarse-grained block events and their statistical properties.

A block of side m at renormalized site v = (vx, vy) is open when some vertex
of its footprint connects to lateral sup-distance m from it. The open/closed
block field defines a site process on the renormalized grid whose key
properties are checked here:

* the block event only depends on bonds inside the m-padded neighbourhood of
  the footprint, so blocks far enough apart have structurally disjoint
  dependency edge sets (a deterministic statement, verified edge-set by
  edge-set, not sampled);
* conditioning on "every axial bond of the padded block closed" factorizes
  the block event over layers, which bounds the conditioned probability by
  (k+1) times the single-layer value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bounds import AxialClosureBudget, axial_closure_budget
from .cluster import ReachFromRect, build_forest, evaluate_event, event_terminals
from .errors import GeometryError
from .estimators import Estimate, binomial_stderr, estimate_event, _chunk_size
from .lattice import LatticeBox, RectBox, SlabSpec, build_box
from .sampler import ParamPoint, SeedSpec, draw_uniform_block, sample_config


def block_ambient_box(m: int, k: int) -> LatticeBox:
    """Smallest box carrying the reach event of the block at the origin corner."""
    if m < 1:
        raise GeometryError("block side m must be >= 1")
    return build_box(SlabSpec(k), RectBox(-m, 2 * m - 1, -m, 2 * m - 1))


def origin_block_event(m: int) -> ReachFromRect:
    return ReachFromRect(0, m - 1, 0, m - 1, m)


def block_probability(
    params: ParamPoint, m: int, k: int, replicas: int, seed: SeedSpec
) -> Estimate:
    """Monte Carlo probability that the origin block reaches distance m."""
    box = block_ambient_box(m, k)
    return estimate_event(box, params, origin_block_event(m), replicas, seed, n=m)


@dataclass
class LayerBoundReport:
    """Conditioned block probability against its per-layer union bound.

    lhs = P(reach AND all padded axial bonds closed), computed exactly as
    (1-q)^N times the reach probability with the axial parameter forced to
    zero (the two bond sets are disjoint, so the conditioning is exact).
    rhs = (k+1) times the single-layer reach probability.
    """

    params: ParamPoint
    m: int
    k: int
    budget: AxialClosureBudget
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    replicas: int
    holds_within_noise: bool
    sigmas: float = 4.0


def layer_union_bound_report(
    params: ParamPoint, m: int, k: int, replicas: int, seed: SeedSpec
) -> LayerBoundReport:
    budget = axial_closure_budget(m, k, params.q)
    conditioned = estimate_event(
        block_ambient_box(m, k),
        ParamPoint(params.p, 0.0),
        origin_block_event(m),
        replicas,
        seed,
        n=m,
    )
    # same base streams on purpose: for k = 0 the two estimates coincide
    # exactly, and for k >= 1 any residual correlation only makes the
    # combined-noise gate conservative
    single_layer = estimate_event(
        block_ambient_box(m, 0),
        ParamPoint(params.p, 0.0),
        origin_block_event(m),
        replicas,
        seed,
        n=m,
    )
    scale = budget.prob_all_closed
    lhs = conditioned.mean * scale
    lhs_se = conditioned.stderr * scale
    rhs = (k + 1) * single_layer.mean
    rhs_se = (k + 1) * single_layer.stderr
    gap_se = math.sqrt(lhs_se**2 + rhs_se**2)
    return LayerBoundReport(
        params=params,
        m=m,
        k=k,
        budget=budget,
        lhs=lhs,
        lhs_stderr=lhs_se,
        rhs=rhs,
        rhs_stderr=rhs_se,
        replicas=replicas,
        holds_within_noise=bool(lhs <= rhs + 4.0 * gap_se),
    )


# ---- renormalized site field ------------------------------------------------

def window_ambient_box(m: int, k: int, window: int) -> LatticeBox:
    """Box covering a window x window grid of blocks plus the reach margin."""
    if window < 1:
        raise GeometryError("window must be >= 1")
    lo = 1 - m
    hi = m * window + m
    return build_box(SlabSpec(k), RectBox(lo, hi, lo, hi))


def _window_terminals(box: LatticeBox, m: int, window: int):
    """CSR-packed (footprint, target-ring) vertex ids for every block."""
    src_ptr = [0]
    dst_ptr = [0]
    src_idx: list[np.ndarray] = []
    dst_idx: list[np.ndarray] = []
    for vx in range(window):
        for vy in range(window):
            rect = ReachFromRect(
                m * vx + 1, m * vx + m, m * vy + 1, m * vy + m, m
            )
            s, d = event_terminals(box, rect)
            src_idx.append(s)
            dst_idx.append(d)
            src_ptr.append(src_ptr[-1] + s.shape[0])
            dst_ptr.append(dst_ptr[-1] + d.shape[0])
    return (
        np.array(src_ptr, dtype=np.int64),
        np.concatenate(src_idx).astype(np.int32),
        np.array(dst_ptr, dtype=np.int64),
        np.concatenate(dst_idx).astype(np.int32),
    )


@dataclass
class RenormSample:
    """One configuration's block field with its single-sample summary.

    pair_correlation[d] is the spatial correlation over axis-aligned block
    pairs at sup-distance d within this one field (None when the field is
    degenerate or the window too small); treat it as descriptive only, the
    replica-averaged version lives in independence_report.
    """

    field: np.ndarray        # (window, window) uint8, [vx, vy]
    density: float
    pair_correlation: dict[int, float | None]
    params: ParamPoint
    m: int
    k: int
    window: int


def _spatial_pair_correlation(flat: np.ndarray, window: int, distances) -> dict:
    rho = float(flat.mean())
    out: dict[int, float | None] = {}
    var = rho * (1.0 - rho)
    for d in distances:
        if d >= window or var == 0.0:
            out[d] = None
            continue
        ia, ib = _offset_pairs(window, d)
        out[d] = float(((flat[ia] - rho) * (flat[ib] - rho)).mean() / var)
    return out


def renormalized_sample(
    params: ParamPoint, m: int, k: int, window: int, seed: SeedSpec
) -> RenormSample:
    box = window_ambient_box(m, k, window)
    config = sample_config(box, params, seed)
    forest = build_forest(box, config)
    field = np.zeros((window, window), dtype=np.uint8)
    for vx in range(window):
        for vy in range(window):
            rect = ReachFromRect(m * vx + 1, m * vx + m, m * vy + 1, m * vy + m, m)
            field[vx, vy] = evaluate_event(forest, box, rect)
    flat = field.reshape(-1).astype(np.float64)
    return RenormSample(
        field=field,
        density=float(field.mean()),
        pair_correlation=_spatial_pair_correlation(flat, window, range(1, 7)),
        params=params,
        m=m,
        k=k,
        window=window,
    )


def _offset_pairs(window: int, d: int):
    """Index pairs of blocks separated by (d,0) or (0,d) on the flattened grid."""
    ia, ib = [], []
    for vx in range(window - d):
        for vy in range(window):
            ia.append(vx * window + vy)
            ib.append((vx + d) * window + vy)
    for vx in range(window):
        for vy in range(window - d):
            ia.append(vx * window + vy)
            ib.append(vx * window + vy + d)
    return np.array(ia, dtype=np.int64), np.array(ib, dtype=np.int64)


@dataclass
class PairCorrelation:
    distance: int
    covariance: float
    cov_stderr: float
    pearson: float | None
    pairs: int
    zero_within_noise: bool


@dataclass
class IndependenceReport:
    params: ParamPoint
    m: int
    k: int
    window: int
    replicas: int
    density: float
    density_stderr: float
    correlations: list[PairCorrelation]


def independence_report(
    params: ParamPoint,
    m: int,
    k: int,
    window: int,
    replicas: int,
    seed: SeedSpec,
    distances=(1, 2, 3, 4, 5, 6),
) -> IndependenceReport:
    """Empirical pair correlations of the block field at the given distances.

    The covariance estimate at distance d averages axis-aligned block pairs;
    its standard error comes from the replica-level spread of the linearized
    statistic, so the 4-sigma zero test is honest even though pairs within
    one replica overlap.
    """
    if max(distances) >= window:
        raise GeometryError("window too small for the requested distances")
    box = window_ambient_box(m, k, window)
    eu, ev = box.edge_endpoints()
    sp, si, dp_, di = _window_terminals(box, m, window)
    chunk = _chunk_size(box.edge_count, replicas)
    fields = np.empty((replicas, window * window), dtype=np.uint8)
    done = 0
    while done < replicas:
        take = min(chunk, replicas - done)
        uni = draw_uniform_block(box, seed.offset(done), take)
        fields[done : done + take] = _kernels.blockfield_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params.p, params.q, sp, si, dp_, di,
        )
        done += take
    f = fields.astype(np.float64)
    rho_r = f.mean(axis=1)
    rho = float(rho_r.mean())
    out = []
    for d in distances:
        ia, ib = _offset_pairs(window, d)
        h_r = (f[:, ia] * f[:, ib]).mean(axis=1)
        stat = h_r - 2.0 * rho * rho_r + rho * rho
        cov = float(stat.mean())
        se = float(stat.std(ddof=1) / math.sqrt(replicas))
        denom = rho * (1.0 - rho)
        out.append(
            PairCorrelation(
                distance=d,
                covariance=cov,
                cov_stderr=se,
                pearson=cov / denom if denom > 0 else None,
                pairs=ia.shape[0],
                zero_within_noise=bool(abs(cov) <= 4.0 * se),
            )
        )
    return IndependenceReport(
        params=params,
        m=m,
        k=k,
        window=window,
        replicas=replicas,
        density=rho,
        density_stderr=binomial_stderr(rho, replicas * window * window),
        correlations=out,
    )


# ---- structural dependency check --------------------------------------------

def dependency_edge_set(box: LatticeBox, m: int, vx: int, vy: int) -> frozenset[int]:
    """Edge indices that can influence the block event at (vx, vy).

    Conservatively: every edge whose endpoints both lie within lateral
    sup-distance m of the footprint. Any open path that realizes the event
    can be truncated at its first visit to the distance-m ring, so it never
    uses an edge outside this set.
    """
    x0, x1 = m * vx + 1 - m, m * vx + m + m
    y0, y1 = m * vy + 1 - m, m * vy + m + m
    eu, ev = box.edge_endpoints()

    def inside(ids):
        xs = ids % box.width + box.x0
        ys = (ids // box.width) % box.height + box.y0
        return (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)

    keep = inside(eu) & inside(ev)
    return frozenset(np.nonzero(keep)[0].tolist())


@dataclass
class DisjointnessResult:
    window: int
    m: int
    min_distance: int
    pairs_checked: int
    all_disjoint: bool
    violations: list[tuple[tuple[int, int], tuple[int, int]]]


def dependency_disjointness(
    m: int, k: int, window: int, min_distance: int = 5
) -> DisjointnessResult:
    """Deterministically verify: blocks at renormalized sup-distance >=
    min_distance have disjoint dependency edge sets."""
    box = window_ambient_box(m, k, window)
    sets = {
        (vx, vy): dependency_edge_set(box, m, vx, vy)
        for vx in range(window)
        for vy in range(window)
    }
    blocks = sorted(sets)
    checked = 0
    violations = []
    for i, a in enumerate(blocks):
        for b in blocks[i + 1 :]:
            if max(abs(a[0] - b[0]), abs(a[1] - b[1])) < min_distance:
                continue
            checked += 1
            if not sets[a].isdisjoint(sets[b]):
                violations.append((a, b))
    return DisjointnessResult(
        window=window,
        m=m,
        min_distance=min_distance,
        pairs_checked=checked,
        all_disjoint=not violations,
        violations=violations,
    )
