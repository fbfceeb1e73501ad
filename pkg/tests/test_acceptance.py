"""End-to-end acceptance gates.

One test per gate, run in order; each prints a PASS line with its key
numbers once its assertions hold. The statistical gates use 4-sigma
allowances throughout: they are consistency checks, not proofs.

Run with `pytest tests/test_acceptance.py -v -s`. The curve sweep (gate 10)
dominates the wall time; the whole module is sized for a laptop.
"""

import math
import time

import numpy as np

import slabperc.cli as cli
from slabperc.bounds import (
    axial_upper_bound,
    collapse_parameter,
    embedded_square_param,
    horizontal_threshold,
)
from slabperc.cluster import Connected, OriginToBoundary, build_forest
from slabperc.curve import diagnostics, qc_at, sweep
from slabperc.estimators import coupled_difference, estimate_event, fit_decay, tail_curve
from slabperc.lattice import CenteredBox, RectBox, SlabSpec, build_box
from slabperc.oracle import exact_probability, exact_russo, split_gadget_exact
from slabperc.pivotal import russo_estimate
from slabperc.renorm import (
    dependency_disjointness,
    independence_report,
    layer_union_bound_report,
)
from slabperc.sampler import ParamPoint, SeedSpec, sample_config


def _report(name: str, elapsed: float, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS in {elapsed:.1f}s - {detail}")


def test_01_formula_exactness():
    t0 = time.perf_counter()
    for k in range(7):
        assert abs(horizontal_threshold(k) - (1 - 2 ** (-1 / (k + 1)))) <= 1e-12
        assert abs(collapse_parameter(horizontal_threshold(k), k) - 0.5) <= 1e-12
    worst = 0.0
    for k in (0, 1, 2, 3):
        for i in range(100):
            p = i / 99
            worst = max(worst, abs(
                embedded_square_param(p, 1.0, k) - collapse_parameter(p, k)
            ))
    assert worst <= 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("1 formula exactness", elapsed, f"max grid gap {worst:.2e}")


def test_02_gadget_identity():
    t0 = time.perf_counter()
    grid = [0.1, 0.3, 0.5, 0.7, 0.9]
    worst = 0.0
    for k in (0, 1, 2, 3):
        for p in grid:
            for q in grid:
                worst = max(worst, abs(
                    split_gadget_exact(p, q, k) - embedded_square_param(p, q, k)
                ))
    assert worst <= 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("2 gadget identity", elapsed,
            f"enumeration vs series, 4 thicknesses x 25 points, max gap {worst:.2e}")


def test_03_oracle_monte_carlo_agreement():
    t0 = time.perf_counter()
    reps = 100_000
    box_a = build_box(SlabSpec(0), CenteredBox(1))
    spec_a = OriginToBoundary(1)
    points_a = [ParamPoint(0.25, 0.3), ParamPoint(0.5, 0.3), ParamPoint(0.75, 0.3)]
    box_b = build_box(SlabSpec(1), RectBox(0, 1, 0, 1))
    spec_b = Connected((0, 0, 0), (1, 1, 1))
    points_b = [ParamPoint(0.3, 0.4), ParamPoint(0.5, 0.5), ParamPoint(0.7, 0.2)]
    for box, spec, points in ((box_a, spec_a, points_a), (box_b, spec_b, points_b)):
        for i, params in enumerate(points):
            exact = exact_probability(box, params, spec).value
            est = estimate_event(box, params, spec, reps, SeedSpec(1000 + i))
            assert abs(est.mean - exact) <= 4 * est.stderr, (params, est.mean, exact)
    misses = 0
    for box, spec, params in (
        (box_a, spec_a, points_a[1]),
        (box_b, spec_b, points_b[1]),
    ):
        exact = exact_probability(box, params, spec).value
        for seed in range(100):
            est = estimate_event(box, params, spec, reps, SeedSpec(seed))
            if abs(est.mean - exact) > 4 * est.stderr:
                misses += 1
    assert misses <= 5
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report("3 oracle/Monte-Carlo agreement", elapsed,
            f"6 points at 4-sigma, calibration misses {misses}/200")


def test_04_collapse_identity():
    t0 = time.perf_counter()
    p, k, n, reps = 0.35, 1, 32, 20_000
    s = collapse_parameter(p, k)
    slab = build_box(SlabSpec(k), RectBox(0, 1, 0, 1))
    layer = build_box(SlabSpec(0), RectBox(0, 1, 0, 1))
    exact_gap = abs(
        exact_probability(slab, ParamPoint(p, 1.0), Connected((0, 0, 0), (1, 1, 1))).value
        - exact_probability(layer, ParamPoint(s, 0.0), Connected((0, 0, 0), (1, 1, 0))).value
    )
    assert exact_gap <= 1e-12
    est_slab = estimate_event(
        build_box(SlabSpec(k), CenteredBox(n)), ParamPoint(p, 1.0),
        OriginToBoundary(n), reps, SeedSpec(11), n=n,
    )
    est_layer = estimate_event(
        build_box(SlabSpec(0), CenteredBox(n)), ParamPoint(s, 0.0),
        OriginToBoundary(n), reps, SeedSpec(12), n=n,
    )
    gap = abs(est_slab.mean - est_layer.mean)
    allow = 4 * math.hypot(est_slab.stderr, est_layer.stderr)
    assert gap <= allow
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report("4 collapse identity", elapsed,
            f"exact gap {exact_gap:.1e}; MC gap {gap:.4f} <= {allow:.4f}")


def test_05_layer_identity_q0():
    t0 = time.perf_counter()
    n, reps = 32, 20_000
    details = []
    for i, p in enumerate((0.4, 0.45)):
        slab = estimate_event(
            build_box(SlabSpec(1), CenteredBox(n)), ParamPoint(p, 0.0),
            OriginToBoundary(n), reps, SeedSpec(21 + i), n=n,
        )
        layer = estimate_event(
            build_box(SlabSpec(0), CenteredBox(n)), ParamPoint(p, 0.0),
            OriginToBoundary(n), reps, SeedSpec(51 + i), n=n,
        )
        gap = abs(slab.mean - layer.mean)
        allow = 4 * math.hypot(slab.stderr, layer.stderr)
        assert gap <= allow, (p, slab.mean, layer.mean)
        details.append(f"p={p}: gap {gap:.4f} <= {allow:.4f}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report("5 layer identity at q=0", elapsed, "; ".join(details))


def test_06_russo_identity():
    t0 = time.perf_counter()
    for box, spec, params in (
        (build_box(SlabSpec(1), RectBox(0, 1, 0, 1)),
         Connected((0, 0, 0), (1, 1, 1)), ParamPoint(0.4, 0.4)),
        (build_box(SlabSpec(0), CenteredBox(1)),
         OriginToBoundary(1), ParamPoint(0.5, 0.3)),
    ):
        ex = exact_russo(box, params, spec)
        assert abs(ex.d_p - ex.d_p_direct) <= 1e-10
        assert abs(ex.d_q - ex.d_q_direct) <= 1e-10
    k, n, reps, h = 1, 2, 100_000, 0.02
    box = build_box(SlabSpec(k), CenteredBox(n))
    params = ParamPoint(0.35, 0.35)
    spec = OriginToBoundary(n)
    est = russo_estimate(box, params, spec, reps, SeedSpec(31))
    cd = coupled_difference(
        box, ParamPoint(params.p - h, params.q), ParamPoint(params.p + h, params.q),
        spec, reps, SeedSpec(37),
    )
    fd = cd.diff / (2 * h)
    fd_se = cd.diff_stderr / (2 * h)
    gap = abs(est.d_p - fd)
    allow = 4 * math.hypot(est.d_p_stderr, fd_se)
    assert gap <= allow
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report("6 derivative identity", elapsed,
            f"exact two-route <=1e-10; MC d_p {est.d_p:.3f} vs FD {fd:.3f} "
            f"(gap {gap:.3f} <= {allow:.3f})")


def test_07_block_layer_bound():
    t0 = time.perf_counter()
    rep = layer_union_bound_report(
        ParamPoint(0.35, 0.05), m=8, k=1, replicas=10_000, seed=SeedSpec(41)
    )
    assert rep.budget.axial_bonds == 1 * (3 * 8) ** 2 == 576
    assert rep.budget.prob_all_closed == 0.95**576
    assert rep.holds_within_noise
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report("7 block layer bound", elapsed,
            f"lhs {rep.lhs:.2e} <= rhs {rep.rhs:.4f} + 4 sigma; N=576 exact")


def test_08_five_independence():
    t0 = time.perf_counter()
    structural = dependency_disjointness(m=6, k=1, window=12, min_distance=5)
    assert structural.all_disjoint
    assert structural.pairs_checked > 0
    rep = independence_report(
        ParamPoint(0.3, 0.02), m=6, k=1, window=12, replicas=10_000,
        seed=SeedSpec(43), distances=(5, 6),
    )
    details = [f"structural pairs {structural.pairs_checked} disjoint"]
    for c in rep.correlations:
        assert abs(c.covariance) < 4 * c.cov_stderr, (c.distance, c.covariance)
        details.append(f"d={c.distance}: |cov| {abs(c.covariance):.2e} < {4 * c.cov_stderr:.2e}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report("8 five-independence", elapsed, "; ".join(details))


def test_09_exponential_tail():
    t0 = time.perf_counter()
    tail = tail_curve(
        ParamPoint(0.3, 0.02), k=1, n_grid=[5, 10, 15, 20, 25, 30],
        box_radius=30, replicas=100_000, seed=SeedSpec(47),
    )
    fit = fit_decay(tail, min_survivors=100)
    assert fit.slope < 0
    assert fit.r_squared >= 0.98
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report("9 exponential tail", elapsed,
            f"slope {fit.slope:.4f}, R^2 {fit.r_squared:.4f}, bins {fit.n_used}")


def test_10_curve_properties():
    t0 = time.perf_counter()
    k, n, tol, reps = 1, 64, 5e-3, 20_000
    grid = [float(p) for p in np.linspace(0.33, 0.47, 8)]
    cur = sweep(grid, k, n, tol, reps, SeedSpec(53))
    diag = diagnostics(cur, bound_fn=lambda p: axial_upper_bound(p, k).q_star)
    # (a) strictly decreasing beyond combined intervals
    assert diag.decreasing_beyond_ci, [
        (pt.p, pt.q_est, pt.ci_halfwidth) for pt in cur.points
    ]
    # (b) below the closed-form axial upper bound everywhere
    assert all(diag.bound_ok)
    # (c) finite, positive two-sided ratio range on the interior window
    assert diag.c_hat is not None and diag.C_hat is not None
    assert 0.0 < diag.c_hat <= diag.C_hat < math.inf
    # (d) total drop across the range
    extra = qc_at(0.34, k, n, tol, reps, SeedSpec(59))
    q047 = cur.points[-1].q_est
    assert q047 < extra.q_est - 0.3, (extra.q_est, q047)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1800.0
    _report("10 curve properties", elapsed,
            f"q(0.34)={extra.q_est:.3f} .. q(0.47)={q047:.3f}; "
            f"ratio range [{diag.c_hat:.2f}, {diag.C_hat:.2f}]")


def test_11_determinism_and_performance(capsys):
    argv = ["theta", "--k", "0", "--n", "1", "--p", "0.5", "--q", "0.3",
            "--replicas", "100000", "--seed", "7", "--format", "csv"]
    assert cli.main(argv) == 0
    out1 = capsys.readouterr().out
    assert cli.main(argv) == 0
    out2 = capsys.readouterr().out
    assert cli.main(argv + ["--jobs", "4"]) == 0
    out3 = capsys.readouterr().out
    assert out1 == out2 == out3

    box = build_box(SlabSpec(2), CenteredBox(256))
    params = ParamPoint(0.5, 0.5)
    # warm the kernels so the gate times clustering, not compilation
    small = build_box(SlabSpec(2), CenteredBox(4))
    build_forest(small, sample_config(small, params, SeedSpec(0)))
    t0 = time.perf_counter()
    checksum = 0
    origin = box.vertex_id(0, 0, 0)
    for r in range(1000):
        cfg = sample_config(box, params, SeedSpec(97, r))
        forest = build_forest(box, cfg)
        checksum += int(forest.roots[origin])
    elapsed = time.perf_counter() - t0
    assert checksum >= 0
    assert elapsed < 60.0, f"clustering 1000 configs took {elapsed:.1f}s"
    with capsys.disabled():
        _report("11 determinism and performance", elapsed,
                f"byte-identical CLI reruns incl. --jobs; 1000 configs of "
                f"{box.edge_count} edges clustered in {elapsed:.1f}s")
