"""Exact probabilities on tiny instances by full enumeration.

These are the ground truth the Monte Carlo estimators are tested against.
Costs grow as 2^edges (and edges * 2^edges for the pivotal sums), so
instances are guarded by an edge cap; compensated summation keeps the
accumulated error far below the 1e-12 comparisons used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bounds import embedded_square_param, split_bond_param
from .cluster import ClusterSizeAtLeast, describe_event, event_terminals
from .errors import ResourceLimitError
from .lattice import LatticeBox
from .sampler import ParamPoint

DEFAULT_EDGE_CAP = 24


def _guard(box: LatticeBox, cap: int) -> None:
    if box.edge_count > cap:
        raise ResourceLimitError(
            f"enumeration over {box.edge_count} edges exceeds the cap of {cap} "
            f"(2^{box.edge_count} configurations)"
        )


def _is_axial(box: LatticeBox) -> np.ndarray:
    flags = np.zeros(box.edge_count, dtype=np.uint8)
    flags[box.radial_count:] = 1
    return flags


@dataclass
class ExactResult:
    value: float
    edge_count: int
    enumeration_size: int
    event: str
    params: ParamPoint


def exact_probability(
    box: LatticeBox, params: ParamPoint, spec, cap: int = DEFAULT_EDGE_CAP
) -> ExactResult:
    """P(event) as the literal weighted sum over all 2^E configurations."""
    _guard(box, cap)
    eu, ev = box.edge_endpoints()
    flags = _is_axial(box)
    if isinstance(spec, ClusterSizeAtLeast):
        value = _kernels.enum_size_prob(
            box.vertex_count, eu, ev, flags, params.p, params.q,
            box.vertex_id(*spec.v), spec.s,
        )
    else:
        src, dst = event_terminals(box, spec)
        value = _kernels.enum_event_prob(
            box.vertex_count, eu, ev, flags, params.p, params.q, src, dst
        )
    return ExactResult(
        value=float(value),
        edge_count=box.edge_count,
        enumeration_size=1 << box.edge_count,
        event=describe_event(spec),
        params=params,
    )


@dataclass
class ExactRusso:
    """Exact event-probability derivatives by two independent routes.

    d_p / d_q come from summed pivotal-edge probabilities; d_p_direct /
    d_q_direct differentiate the exact probability polynomial itself. The
    two routes agreeing is a strong end-to-end check and is asserted in the
    test suite rather than here.
    """

    d_p: float
    d_q: float
    d_p_direct: float | None
    d_q_direct: float | None
    probability: float | None
    edge_count: int


def exact_russo(
    box: LatticeBox, params: ParamPoint, spec, cap: int = DEFAULT_EDGE_CAP
) -> ExactRusso:
    """Exact (dP/dp, dP/dq) for a two-terminal connection event.

    The direct-differentiation route needs p, q strictly inside (0, 1);
    outside that the pivotal route alone is returned.
    """
    _guard(box, cap)
    eu, ev = box.edge_endpoints()
    flags = _is_axial(box)
    src, dst = event_terminals(box, spec)
    d_p, d_q = _kernels.enum_pivotal_sums(
        box.vertex_count, eu, ev, flags, params.p, params.q, src, dst
    )
    interior = 0.0 < params.p < 1.0 and 0.0 < params.q < 1.0
    if interior:
        prob, dp2, dq2 = _kernels.enum_derivatives(
            box.vertex_count, eu, ev, flags, params.p, params.q, src, dst
        )
        return ExactRusso(float(d_p), float(d_q), float(dp2), float(dq2),
                          float(prob), box.edge_count)
    return ExactRusso(float(d_p), float(d_q), None, None, None, box.edge_count)


GADGET_K_CAP = 6


def split_gadget_exact(p: float, q: float, k: int) -> float:
    """Exact union probability of the level-detour paths across one split gadget.

    The gadget spans two adjacent columns of the slab: one radial bond per
    level (k+1 of them, probability p), an "up" axial copy per level on the
    left column and a "down" copy on the right (2k of them, probability
    q_hat with 1 - q = (1 - q_hat)^4). Detour path i climbs i up-copies,
    crosses at level i, and descends i down-copies; the direct bond is path 0.
    Must equal embedded_square_param(p, q, k); the equality is enumerated,
    not assumed.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > GADGET_K_CAP:
        raise ResourceLimitError(
            f"gadget enumeration has 2^{3 * k + 1} states; cap is k <= {GADGET_K_CAP}"
        )
    qh = split_bond_param(q)
    n_bonds = 3 * k + 1
    # bond order: horizontals h_0..h_k, up copies u_0..u_{k-1}, down copies d_0..d_{k-1}
    probs = np.array([p] * (k + 1) + [qh] * (2 * k), dtype=float)
    path_masks = []
    for i in range(k + 1):
        mask = 1 << i
        for j in range(i):
            mask |= 1 << (k + 1 + j)
            mask |= 1 << (k + 1 + k + j)
        path_masks.append(mask)
    cfgs = np.arange(1 << n_bonds, dtype=np.uint32)
    hit = np.zeros(cfgs.shape[0], dtype=bool)
    for mask in path_masks:
        hit |= (cfgs & mask) == mask
    weight = np.ones(cfgs.shape[0], dtype=float)
    for b in range(n_bonds):
        open_b = (cfgs >> b) & 1
        weight *= np.where(open_b == 1, probs[b], 1.0 - probs[b])
    return float(weight[hit].sum())


def gadget_matches_formula(p: float, q: float, k: int, tol: float = 1e-12) -> bool:
    """Convenience check: enumerated gadget vs the closed-form series."""
    return abs(split_gadget_exact(p, q, k) - embedded_square_param(p, q, k)) <= tol
