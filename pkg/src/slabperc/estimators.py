"""Monte Carlo estimation of event probabilities and cluster-size tails.

Replicas are independent streams reduced by integer counters, so results do
not depend on chunking or on any parallel schedule. Binary events get the
binomial standard error. All estimators accept a SeedSpec whose stream_id is
the base stream; replica r consumes stream base + r.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cluster import ClusterSizeAtLeast, describe_event, event_terminals
from .errors import FitInfeasibleError, GeometryError
from .lattice import CenteredBox, LatticeBox, SlabSpec, build_box
from .sampler import ParamPoint, SeedSpec, draw_uniform_block

# target bytes of uniforms per kernel call; keeps memory flat on big boxes
_CHUNK_BYTES = 64 << 20

_JOBS = 1


def set_jobs(jobs: int) -> None:
    """Worker threads for replica chunks. Streams are fixed per replica and
    counts reduce by integer sums, so results never depend on this."""
    global _JOBS
    _JOBS = max(1, int(jobs))


def _map_chunks(fn, replicas: int, chunk: int) -> list:
    """fn(offset, take) over replica chunks, possibly on worker threads."""
    tasks = [
        (off, min(chunk, replicas - off)) for off in range(0, replicas, chunk)
    ]
    if _JOBS == 1 or len(tasks) == 1:
        return [fn(off, take) for off, take in tasks]
    with ThreadPoolExecutor(max_workers=_JOBS) as pool:
        return list(pool.map(lambda t: fn(t[0], t[1]), tasks))


def _chunk_size(edge_count: int, replicas: int) -> int:
    per = max(1, _CHUNK_BYTES // (edge_count * 8))
    return int(min(replicas, per))


def binomial_stderr(mean: float, replicas: int) -> float:
    return math.sqrt(max(mean * (1.0 - mean), 0.0) / replicas)


@dataclass
class Estimate:
    """Monte Carlo mean of a binary event with its binomial standard error."""

    mean: float
    stderr: float
    replicas: int
    params: ParamPoint
    event: str
    k: int
    n: int | None = None
    seed: SeedSpec | None = None

    def csv_row(self) -> str:
        seed = self.seed.master_seed if self.seed else ""
        n = self.n if self.n is not None else ""
        return (
            f"{self.params.p!r},{self.params.q!r},{self.k},{self.event},{n},"
            f"{self.mean!r},{self.stderr!r},{self.replicas},{seed}"
        )


CSV_HEADER = "p,q,k,event,n,mean,stderr,replicas,seed"


def _event_successes(box, params, spec, replicas, seed) -> int:
    """Total success count over `replicas` streams starting at seed.stream_id."""
    eu, ev = box.edge_endpoints()
    chunk = _chunk_size(box.edge_count, replicas)
    if isinstance(spec, ClusterSizeAtLeast):
        v0 = box.vertex_id(*spec.v)

        def worker(off, take):
            uni = draw_uniform_block(box, seed.offset(off), take)
            sizes = _kernels.cluster_size_batch(
                box.vertex_count, eu, ev, uni, box.edge_count,
                box.radial_count, params.p, params.q, v0,
            )
            return int((sizes >= spec.s).sum())

        return sum(_map_chunks(worker, replicas, chunk))
    src, dst = event_terminals(box, spec)

    def worker(off, take):
        uni = draw_uniform_block(box, seed.offset(off), take)
        got = _kernels.connect_any_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params.p, params.q, src, dst,
        )
        return int(got.sum())

    return sum(_map_chunks(worker, replicas, chunk))


def estimate_event(
    box: LatticeBox,
    params: ParamPoint,
    spec,
    replicas: int,
    seed: SeedSpec,
    n: int | None = None,
) -> Estimate:
    """Estimate P(event) from `replicas` independent configurations."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    hits = _event_successes(box, params, spec, replicas, seed)
    mean = hits / replicas
    return Estimate(
        mean=mean,
        stderr=binomial_stderr(mean, replicas),
        replicas=replicas,
        params=params,
        event=describe_event(spec),
        k=box.k,
        n=n,
        seed=seed,
    )


@dataclass
class CoupledDifference:
    """Two estimates sharing every uniform field, plus their paired difference."""

    est_a: Estimate
    est_b: Estimate
    diff: float
    diff_stderr: float


def coupled_difference(
    box: LatticeBox,
    params_a: ParamPoint,
    params_b: ParamPoint,
    spec,
    replicas: int,
    seed: SeedSpec,
) -> CoupledDifference:
    """Estimate P_b(event) - P_a(event) with common random numbers.

    The paired standard error reflects only the replicas where the two
    thresholded configurations disagree, which is what makes common random
    numbers worthwhile for nearby parameter points.
    """
    eu, ev = box.edge_endpoints()
    src, dst = event_terminals(box, spec)
    chunk = _chunk_size(box.edge_count, replicas)
    done = 0
    hits_a = 0
    hits_b = 0
    sum_d = 0
    sum_d2 = 0
    while done < replicas:
        take = min(chunk, replicas - done)
        uni = draw_uniform_block(box, seed.offset(done), take)
        got_a = _kernels.connect_any_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params_a.p, params_a.q, src, dst,
        )
        got_b = _kernels.connect_any_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params_b.p, params_b.q, src, dst,
        )
        d = got_b.astype(np.int32) - got_a.astype(np.int32)
        hits_a += int(got_a.sum())
        hits_b += int(got_b.sum())
        sum_d += int(d.sum())
        sum_d2 += int((d * d).sum())
        done += take
    mean_a = hits_a / replicas
    mean_b = hits_b / replicas
    diff = sum_d / replicas
    var_d = max(sum_d2 / replicas - diff * diff, 0.0)
    ev_name = describe_event(spec)
    return CoupledDifference(
        est_a=Estimate(mean_a, binomial_stderr(mean_a, replicas), replicas,
                       params_a, ev_name, box.k, seed=seed),
        est_b=Estimate(mean_b, binomial_stderr(mean_b, replicas), replicas,
                       params_b, ev_name, box.k, seed=seed),
        diff=diff,
        diff_stderr=math.sqrt(var_d / replicas),
    )


# ---- cluster-size tails ----------------------------------------------------

@dataclass
class TailCurve:
    """Survival fractions P(|C_0| >= n) over a shared replica set.

    Sizes are measured inside a finite centered box, so they are truncated
    at the box volume; `box_radius` records that proxy.
    """

    params: ParamPoint
    k: int
    n_grid: list[int]
    survival: list[float]
    survivors: list[int]
    replicas: int
    box_radius: int
    seed: SeedSpec | None = None

    def stderr(self, j: int) -> float:
        return binomial_stderr(self.survival[j], self.replicas)


def tail_curve(
    params: ParamPoint,
    k: int,
    n_grid,
    box_radius: int,
    replicas: int,
    seed: SeedSpec,
) -> TailCurve:
    """Origin cluster-size survival fractions on one shared replica set."""
    n_grid = sorted(int(n) for n in n_grid)
    if n_grid[0] < 1:
        raise GeometryError("cluster sizes start at 1")
    if box_radius < max(n_grid):
        raise GeometryError(
            f"box radius {box_radius} cannot certify sizes up to {max(n_grid)}"
        )
    box = build_box(SlabSpec(k), CenteredBox(box_radius))
    if max(n_grid) > box.vertex_count:
        raise GeometryError("size grid exceeds the box vertex count")
    eu, ev = box.edge_endpoints()
    v0 = box.vertex_id(0, 0, 0)
    chunk = _chunk_size(box.edge_count, replicas)
    counts = np.zeros(len(n_grid), dtype=np.int64)
    done = 0
    while done < replicas:
        take = min(chunk, replicas - done)
        uni = draw_uniform_block(box, seed.offset(done), take)
        sizes = _kernels.cluster_size_batch(
            box.vertex_count, eu, ev, uni, box.edge_count,
            box.radial_count, params.p, params.q, v0,
        )
        for j, n in enumerate(n_grid):
            counts[j] += int((sizes >= n).sum())
        done += take
    return TailCurve(
        params=params,
        k=k,
        n_grid=n_grid,
        survival=[c / replicas for c in counts],
        survivors=[int(c) for c in counts],
        replicas=replicas,
        box_radius=box_radius,
        seed=seed,
    )


@dataclass
class DecayFit:
    """Least-squares line through (n, log survival)."""

    slope: float
    intercept: float
    r_squared: float
    n_used: list[int]
    min_survivors: int


def fit_decay(tail: TailCurve, min_survivors: int = 100) -> DecayFit:
    """Fit log survival against n, using only well-populated bins."""
    ns, logs = [], []
    for j, n in enumerate(tail.n_grid):
        if tail.survivors[j] >= max(min_survivors, 1):
            ns.append(n)
            logs.append(math.log(tail.survival[j]))
    if len(ns) < 3:
        raise FitInfeasibleError(
            f"only {len(ns)} usable bins (need 3); lower min_survivors or add replicas"
        )
    x = np.array(ns, dtype=float)
    y = np.array(logs, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-18 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return DecayFit(float(slope), float(intercept), r2, ns, min_survivors)


def fit_decay_points(n_values, survival_values, min_survivors: int = 0) -> DecayFit:
    """fit_decay for synthetic (n, survival) pairs; zero bins are dropped."""
    fake = TailCurve(
        params=ParamPoint(0.0, 0.0),
        k=0,
        n_grid=list(n_values),
        survival=list(survival_values),
        survivors=[1 if s > 0 else 0 for s in survival_values],
        replicas=1,
        box_radius=max(n_values),
    )
    return fit_decay(fake, min_survivors=min_survivors)
