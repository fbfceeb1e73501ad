"""Pivotal edges, Monte Carlo event-probability derivatives, and direction probes.

The derivative estimator is the expected pivotal-edge count per class: the
number of edges whose state alone decides the event is an unbiased estimate
of the parameter derivative of the event probability. A finite-difference
cross-estimator with common random numbers lives in the test suite; it is
deliberately not the primary route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cluster import build_forest, describe_event, evaluate_event, event_terminals
from .errors import GeometryError
from .estimators import CoupledDifference, coupled_difference, _chunk_size
from .lattice import LatticeBox
from .sampler import BondConfig, ParamPoint, SeedSpec, draw_uniform_block

# half-width multiplier used for every interval this module reports
_CI_SIGMAS = 4.0


def pivotal_set(box: LatticeBox, config: BondConfig, spec, full_scan: bool = False) -> np.ndarray:
    """Edge indices pivotal for the event in this configuration.

    An edge is pivotal when the event holds with the edge forced open and
    fails with it forced closed; the sampled state of the edge itself is
    irrelevant. The default path prunes to candidates that can matter; the
    full scan literally retests every edge both ways and exists to validate
    the pruning.
    """
    eu, ev = box.edge_endpoints()
    mask = config.open_mask
    if full_scan:
        out = []
        for e in range(box.edge_count):
            with_e = mask.copy()
            with_e[e] = True
            without_e = mask.copy()
            without_e[e] = False
            if evaluate_event(build_forest(box, BondConfig(with_e)), box, spec) and not (
                evaluate_event(build_forest(box, BondConfig(without_e)), box, spec)
            ):
                out.append(e)
        return np.array(out, dtype=np.int64)

    src, dst = event_terminals(box, spec)
    roots = _kernels.roots_from_mask(box.vertex_count, eu, ev, mask)
    reach_s = np.zeros(box.vertex_count, dtype=bool)
    reach_t = np.zeros(box.vertex_count, dtype=bool)
    reach_s[roots[src]] = True
    reach_t[roots[dst]] = True
    event = bool((reach_s & reach_t).any())
    if not event:
        ru, rv = roots[eu], roots[ev]
        piv = (reach_s[ru] & reach_t[rv]) | (reach_s[rv] & reach_t[ru])
        return np.nonzero(piv)[0]
    # event holds: only open edges inside a connecting component can be cut edges
    connecting = reach_s & reach_t
    candidates = np.nonzero(mask & connecting[roots[eu]])[0]
    out = []
    for e in candidates:
        trial = mask.copy()
        trial[e] = False
        f = build_forest(box, BondConfig(trial))
        if not evaluate_event(f, box, spec):
            out.append(int(e))
    return np.array(out, dtype=np.int64)


@dataclass
class RussoEstimate:
    """Estimated derivatives of an event probability in p and q.

    beta_hat is the ratio d_q / d_p; it is reported only when the d_p
    interval excludes zero. The monotone-direction angles come from the
    conservative interval endpoints of beta_hat: phi uses the lower one,
    psi the upper one, and both require a strictly positive endpoint.
    """

    d_p: float
    d_p_stderr: float
    d_q: float
    d_q_stderr: float
    replicas: int
    params: ParamPoint
    event: str
    beta_hat: float | None = None
    beta_stderr: float | None = None
    beta_lower: float | None = None
    beta_upper: float | None = None
    phi: float | None = None
    psi: float | None = None
    flags: tuple[str, ...] = ()


def russo_estimate(
    box: LatticeBox,
    params: ParamPoint,
    spec,
    replicas: int,
    seed: SeedSpec,
) -> RussoEstimate:
    """Mean pivotal counts per edge class, with derived ratio and angles."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    eu, ev = box.edge_endpoints()
    src, dst = event_terminals(box, spec)
    chunk = _chunk_size(box.edge_count, replicas)
    done = 0
    s1 = np.zeros(2, dtype=np.float64)   # sums of counts
    s2 = np.zeros(2, dtype=np.float64)   # sums of squares
    s12 = 0.0                            # sum of products (for the ratio CI)
    while done < replicas:
        take = min(chunk, replicas - done)
        uni = draw_uniform_block(box, seed.offset(done), take)
        counts = _kernels.pivotal_counts_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params.p, params.q, src, dst,
        ).astype(np.float64)
        s1 += counts.sum(axis=0)
        s2 += (counts * counts).sum(axis=0)
        s12 += float((counts[:, 0] * counts[:, 1]).sum())
        done += take
    R = replicas
    d_p, d_q = float(s1[0]) / R, float(s1[1]) / R
    var_p = max(float(s2[0]) / R - d_p * d_p, 0.0)
    var_q = max(float(s2[1]) / R - d_q * d_q, 0.0)
    cov = s12 / R - d_p * d_q
    se_p = math.sqrt(var_p / R)
    se_q = math.sqrt(var_q / R)
    est = RussoEstimate(
        d_p=d_p, d_p_stderr=se_p, d_q=d_q, d_q_stderr=se_q,
        replicas=R, params=params, event=describe_event(spec),
    )
    flags = []
    if d_p - _CI_SIGMAS * se_p <= 0.0:
        flags.append("d_p-indistinguishable-from-zero")
        est.flags = tuple(flags)
        return est
    beta = d_q / d_p
    # delta method for the ratio of two correlated replica means
    var_beta = (
        var_q / (d_p * d_p)
        + (d_q * d_q) * var_p / d_p**4
        - 2.0 * d_q * cov / d_p**3
    ) / R
    se_beta = math.sqrt(max(var_beta, 0.0))
    lo = max(beta - _CI_SIGMAS * se_beta, 0.0)
    hi = beta + _CI_SIGMAS * se_beta
    est.beta_hat = beta
    est.beta_stderr = se_beta
    est.beta_lower = lo
    est.beta_upper = hi
    if lo > 0.0:
        est.phi = math.atan(lo)
    else:
        flags.append("phi-unavailable")
    if hi > 0.0 and d_q - _CI_SIGMAS * se_q > 0.0:
        est.psi = math.atan(hi)
    else:
        flags.append("psi-unavailable")
    est.flags = tuple(flags)
    return est


@dataclass
class DirectionalProbe:
    """Coupled comparison of the event probability at two parameter points."""

    params_from: ParamPoint
    params_to: ParamPoint
    angle: float
    step: float
    mean_from: float
    mean_to: float
    diff: float
    diff_stderr: float
    replicas: int
    event: str


def directional_probe(
    box: LatticeBox,
    params: ParamPoint,
    angle: float,
    step: float,
    spec,
    replicas: int,
    seed: SeedSpec,
) -> DirectionalProbe:
    """Move (step*cos(angle), -step*sin(angle)) in (p, q) under shared uniforms.

    diff is P(end) - P(start) with its paired standard error; for angle 0 the
    difference is non-negative pathwise, for angle pi/2 non-positive.
    """
    p2 = params.p + step * math.cos(angle)
    q2 = params.q - step * math.sin(angle)
    if not (0.0 <= p2 <= 1.0 and 0.0 <= q2 <= 1.0):
        raise GeometryError(
            f"probe endpoint ({p2:.6f},{q2:.6f}) falls outside the unit square"
        )
    target = ParamPoint(p2, q2)
    cd: CoupledDifference = coupled_difference(box, params, target, spec, replicas, seed)
    return DirectionalProbe(
        params_from=params,
        params_to=target,
        angle=angle,
        step=step,
        mean_from=cd.est_a.mean,
        mean_to=cd.est_b.mean,
        diff=cd.diff,
        diff_stderr=cd.diff_stderr,
        replicas=replicas,
        event=describe_event(spec),
    )
