"""Critical-curve estimation and its statistical diagnostics.

The finite-size stand-in for criticality is the any-layer left-right crossing
of an n x n lateral box: its probability is monotone in each parameter
(exactly so under shared uniforms), so the q where it crosses 1/2 at fixed p
can be located by stochastic bisection. Every probe uses fresh replicas with
deterministically derived streams, which keeps whole sweeps reproducible and
parallelizable point by point.

All curve-level statements are statistical diagnostics: output language is
"consistent with / violates at 4 sigma", never proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import horizontal_threshold
from .cluster import LeftRightCrossing, describe_event
from .errors import DiagnosticError, GeometryError
from .estimators import estimate_event
from .lattice import RectBox, SlabSpec, build_box
from .sampler import ParamPoint, SeedSpec

# streams reserved per bisection probe sequence; sweeps space points this far apart
MAX_PROBES = 64
_SIGMAS = 4.0
_SLOPE_FLOOR = 0.05


def crossing_box(n: int, k: int):
    """The n x n lateral box of the k-slab used by the crossing criterion."""
    if n < 2:
        raise GeometryError("crossing box needs n >= 2")
    return build_box(SlabSpec(k), RectBox(0, n - 1, 0, n - 1))


@dataclass
class ProbeRecord:
    x: float
    mean: float
    stderr: float


@dataclass
class BisectionResult:
    root: float
    ci_halfwidth: float
    probes: list[ProbeRecord]
    flags: tuple[str, ...]


def _check_probe_monotone(probes: list[ProbeRecord]) -> None:
    ordered = sorted(probes, key=lambda r: r.x)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if b.x - a.x < 1e-12:
                continue
            gap = _SIGMAS * math.hypot(a.stderr, b.stderr)
            if a.mean > b.mean + gap:
                raise DiagnosticError(
                    f"probe means decrease along the bisection axis beyond noise "
                    f"({a.mean:.4f}@{a.x:.4f} vs {b.mean:.4f}@{b.x:.4f}); "
                    f"replicas per probe are likely too low"
                )


def _fit_slope(probes: list[ProbeRecord]) -> float | None:
    """Local slope at the threshold from the tightest bracketing secant.

    Saturated probes (mean pinned at 0 or 1) carry no slope information, so
    the slope comes from the innermost pair of probes on opposite sides of
    1/2. Returns None when no bracketing pair exists (root clamped at an
    endpoint); returns the floor when the secant is inside its own noise.
    """
    below = [r for r in probes if r.mean < 0.5]
    above = [r for r in probes if r.mean > 0.5]
    if not below or not above:
        return None
    a = max(below, key=lambda r: r.x)
    b = min(above, key=lambda r: r.x)
    if b.x <= a.x:  # probe noise scrambled the ordering; stay conservative
        return _SLOPE_FLOOR
    rise = b.mean - a.mean
    if rise <= math.hypot(a.stderr, b.stderr):
        return _SLOPE_FLOOR
    return max(rise / (b.x - a.x), _SLOPE_FLOOR)


def stochastic_bisection(
    eval_probe, tol: float, max_probes: int = MAX_PROBES
) -> BisectionResult:
    """Halve [0, 1] on the sign of (estimate - 1/2) of a monotone probability.

    eval_probe(x, probe_index) must return an Estimate. Stops when the
    interval is narrower than tol, or early when a probe cannot be told from
    1/2 at one standard error. The reported half-width combines the interval
    residual with the probe noise mapped through a fitted local slope.
    """
    if tol < 1e-3:
        raise ValueError("tol below 1e-3 is not resolvable by this probe budget")
    lo, hi = 0.0, 1.0
    probes: list[ProbeRecord] = []
    flags: list[str] = []
    idx = 0
    last: ProbeRecord | None = None
    while hi - lo > tol and idx < max_probes:
        mid = 0.5 * (lo + hi)
        est = eval_probe(mid, idx)
        last = ProbeRecord(mid, est.mean, est.stderr)
        probes.append(last)
        idx += 1
        if abs(est.mean - 0.5) <= est.stderr:
            flags.append("probe-at-threshold")
            break
        if est.mean > 0.5:
            hi = mid
        else:
            lo = mid
    _check_probe_monotone(probes)
    root = 0.5 * (lo + hi)
    interval_half = 0.5 * (hi - lo)
    noise_half = 0.0
    if last is not None:
        slope = _fit_slope(probes)
        if slope is not None:
            noise_half = _SIGMAS * last.stderr / slope
        elif abs(last.mean - 0.5) < _SIGMAS * last.stderr:
            # clamped without a decisive final probe: no slope to lean on
            noise_half = _SIGMAS * last.stderr / _SLOPE_FLOOR
        # else: every decision was one-sided and the last one is 4-sigma
        # decisive, so the interval alone bounds the root
    ci = max(interval_half + noise_half, tol)
    if hi <= tol:
        flags.append("clamped-low")
    if lo >= 1.0 - tol:
        flags.append("clamped-high")
    return BisectionResult(root, min(ci, 1.0), probes, tuple(flags))


@dataclass
class CurvePoint:
    p: float
    q_est: float
    ci_halfwidth: float
    n_used: int
    replicas_per_probe: int
    probes: int
    criterion: str
    flags: tuple[str, ...] = ()


@dataclass
class InversePoint:
    q: float
    p_est: float
    ci_halfwidth: float
    n_used: int
    replicas_per_probe: int
    probes: int
    criterion: str
    flags: tuple[str, ...] = ()


def qc_at(
    p: float,
    k: int,
    n: int,
    tol: float,
    replicas_per_probe: int,
    seed: SeedSpec,
) -> CurvePoint:
    """Axial root: the q where the crossing probability at fixed p reaches 1/2.

    Probe j consumes streams [stream_id + j*replicas, ...); a full call
    reserves MAX_PROBES * replicas streams.
    """
    p_k = horizontal_threshold(k)
    if not (p_k < p <= 0.5):
        raise GeometryError(
            f"curve estimation expects p in (p_k, 1/2] = ({p_k:.6f}, 0.5], got {p}"
        )
    box = crossing_box(n, k)
    spec = LeftRightCrossing()

    def probe(q, j):
        return estimate_event(
            box, ParamPoint(p, q), spec, replicas_per_probe,
            seed.offset(j * replicas_per_probe), n=n,
        )

    res = stochastic_bisection(probe, tol)
    return CurvePoint(
        p=p,
        q_est=res.root,
        ci_halfwidth=res.ci_halfwidth,
        n_used=n,
        replicas_per_probe=replicas_per_probe,
        probes=len(res.probes),
        criterion=describe_event(spec),
        flags=res.flags,
    )


def pc_at(
    q: float,
    k: int,
    n: int,
    tol: float,
    replicas_per_probe: int,
    seed: SeedSpec,
) -> InversePoint:
    """Radial root: the p where the crossing probability at fixed q reaches 1/2."""
    box = crossing_box(n, k)
    spec = LeftRightCrossing()

    def probe(p, j):
        return estimate_event(
            box, ParamPoint(p, q), spec, replicas_per_probe,
            seed.offset(j * replicas_per_probe), n=n,
        )

    res = stochastic_bisection(probe, tol)
    return InversePoint(
        q=q,
        p_est=res.root,
        ci_halfwidth=res.ci_halfwidth,
        n_used=n,
        replicas_per_probe=replicas_per_probe,
        probes=len(res.probes),
        criterion=describe_event(spec),
        flags=res.flags,
    )


@dataclass
class CriticalCurve:
    points: list[CurvePoint]
    k: int
    n: int
    tol: float
    replicas_per_probe: int
    master_seed: int
    criterion: str
    scale_drift: list[float] | None = None   # |q(n) - q(2n)| per point
    points_2n: list[CurvePoint] | None = None


def sweep(
    p_grid,
    k: int,
    n: int,
    tol: float,
    replicas_per_probe: int,
    seed: SeedSpec,
    two_scale: bool = False,
) -> CriticalCurve:
    """Independent qc_at per grid point with non-overlapping derived streams."""
    p_grid = [float(p) for p in p_grid]
    if not p_grid:
        raise GeometryError("p grid must not be empty")
    if any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise GeometryError("p grid must be strictly increasing")
    span = MAX_PROBES * replicas_per_probe
    points = [
        qc_at(p, k, n, tol, replicas_per_probe, seed.offset(i * span))
        for i, p in enumerate(p_grid)
    ]
    curve = CriticalCurve(
        points=points,
        k=k,
        n=n,
        tol=tol,
        replicas_per_probe=replicas_per_probe,
        master_seed=seed.master_seed,
        criterion=points[0].criterion,
    )
    if two_scale:
        base = seed.offset(len(p_grid) * span)
        pts2 = [
            qc_at(p, k, 2 * n, tol, replicas_per_probe, base.offset(i * span))
            for i, p in enumerate(p_grid)
        ]
        curve.points_2n = pts2
        curve.scale_drift = [abs(a.q_est - b.q_est) for a, b in zip(points, pts2)]
    return curve


@dataclass
class LipschitzDiagnostics:
    """Finite-difference summary of a sweep against the expected curve shape."""

    decreasing_beyond_ci: bool
    monotone_violations: list[int]         # indices i where q[i+1] > q[i] beyond CI
    ratios: list[float]                    # |dq|/dp on the interior window
    ratio_positions: list[float]           # midpoints p of those ratios
    c_hat: float | None
    C_hat: float | None
    interior: tuple[float, float] | None   # [a, b] of the interior window
    bound_ok: list[bool] | None
    bound_values: list[float] | None
    inverse_max_error: float | None
    second_difference_signs: list[int]
    sigmas: float = _SIGMAS


def diagnostics(
    curve: CriticalCurve,
    bound_fn=None,
    inverse_points: list[InversePoint] | None = None,
) -> LipschitzDiagnostics:
    """Monotonicity, two-sided ratio range, bound comparison, inverse closure.

    bound_fn(p) should return an upper bound for q_est(p); points satisfy it
    when q_est <= bound + ci. inverse_points[i], when given, is a pc_at run
    at q = points[i].q_est; the composition error is |p_est - p|.
    """
    pts = curve.points
    if len(pts) < 3:
        raise GeometryError("diagnostics needs at least 3 curve points")
    violations = []
    all_decreasing = True
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        gap = a.ci_halfwidth + b.ci_halfwidth
        if b.q_est - a.q_est > gap:
            violations.append(i)
        if not (b.q_est - a.q_est < -gap):
            all_decreasing = False
    interior = pts[1:-1]
    ratios, positions = [], []
    for a, b in zip(interior, interior[1:]):
        gap = a.ci_halfwidth + b.ci_halfwidth
        dq = b.q_est - a.q_est
        if abs(dq) > gap:  # sign is determined beyond noise
            ratios.append(abs(dq) / (b.p - a.p))
            positions.append(0.5 * (a.p + b.p))
    c_hat = min(ratios) if ratios else None
    C_hat = max(ratios) if ratios else None
    bound_ok = bound_values = None
    if bound_fn is not None:
        bound_values = [float(bound_fn(pt.p)) for pt in pts]
        bound_ok = [
            pt.q_est <= bv + pt.ci_halfwidth for pt, bv in zip(pts, bound_values)
        ]
    inverse_max_error = None
    if inverse_points is not None:
        if len(inverse_points) != len(pts):
            raise GeometryError("need one inverse run per curve point")
        inverse_max_error = max(
            abs(ip.p_est - pt.p) for ip, pt in zip(inverse_points, pts)
        )
    second_signs = []
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        d2 = (c.q_est - b.q_est) - (b.q_est - a.q_est)
        second_signs.append(0 if d2 == 0 else (1 if d2 > 0 else -1))
    return LipschitzDiagnostics(
        decreasing_beyond_ci=all_decreasing,
        monotone_violations=violations,
        ratios=ratios,
        ratio_positions=positions,
        c_hat=c_hat,
        C_hat=C_hat,
        interior=(interior[0].p, interior[-1].p) if len(interior) >= 2 else None,
        bound_ok=bound_ok,
        bound_values=bound_values,
        inverse_max_error=inverse_max_error,
        second_difference_signs=second_signs,
    )
