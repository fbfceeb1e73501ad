"""Command-line surface: reproducible runs with machine-readable output.

Every run's full configuration (including seeds) is echoed into the output,
no environment state is consulted, and identical invocations produce
byte-identical artifacts regardless of --jobs.

Exit codes: 0 success; 2 invalid parameters; 3 resource limit exceeded;
4 a verify subcommand found a statistical check violated beyond its noise
allowance.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import bounds as bounds_mod
from . import curve as curve_mod
from . import estimators, oracle, pivotal, renorm
from .cluster import (
    BlockReach,
    ClusterSizeAtLeast,
    Connected,
    LeftRightCrossing,
    OriginToBoundary,
    ReachFromRect,
)
from .errors import DiagnosticError, GeometryError, ResourceLimitError
from .estimators import CSV_HEADER, estimate_event, fit_decay, tail_curve
from .lattice import CenteredBox, RectBox, SlabSpec, build_box, parse_shape
from .sampler import ParamPoint, SeedSpec

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_BAD_PARAMS = 2
EXIT_RESOURCE = 3
EXIT_CHECK_FAILED = 4


class CheckFailed(Exception):
    """A verify gate was violated beyond its allowance (exit 4)."""


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_doc(command: str, config: dict, results) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "results": results,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_event(token: str):
    """Event DSL used by the oracle subcommand (see cluster.describe_event)."""
    parts = token.split(":")
    kind = parts[0]
    def coord(text):
        xyz = tuple(int(t) for t in text.split("_"))
        if len(xyz) != 3:
            raise ValueError(f"coordinate {text!r} needs exactly x_y_z")
        return xyz

    try:
        if kind == "origin-to-boundary":
            return OriginToBoundary(int(parts[1]))
        if kind == "connected":
            return Connected(coord(parts[1]), coord(parts[2]))
        if kind == "cluster-at-least":
            return ClusterSizeAtLeast(coord(parts[1]), int(parts[2]))
        if kind == "left-right":
            return LeftRightCrossing()
        if kind == "block-reach":
            vx, vy = (int(t) for t in parts[1].split("_"))
            return BlockReach(vx, vy, int(parts[2]))
        if kind == "rect-reach":
            x0, x1, y0, y1, m = (int(t) for t in parts[1:6])
            return ReachFromRect(x0, x1, y0, y1, m)
    except (IndexError, ValueError) as exc:
        raise GeometryError(f"cannot parse event token {token!r}: {exc}") from None
    raise GeometryError(f"unknown event kind {kind!r} in --event")


# ---- subcommand handlers ----------------------------------------------------

def _cmd_bounds(args) -> str:
    rep = bounds_mod.bounds_report(args.k, args.p, args.q, tol=args.tol)
    cfg = {"k": args.k, "p": args.p, "q": args.q, "tol": args.tol}
    return _json_doc("bounds", cfg, rep.to_dict())


def _cmd_theta(args) -> str:
    box = build_box(SlabSpec(args.k), CenteredBox(args.n))
    est = estimate_event(
        box,
        ParamPoint(args.p, args.q),
        OriginToBoundary(args.n),
        args.replicas,
        SeedSpec(args.seed, args.stream),
        n=args.n,
    )
    if args.format == "csv":
        return CSV_HEADER + "\n" + est.csv_row() + "\n"
    cfg = {
        "k": args.k, "n": args.n, "p": args.p, "q": args.q,
        "replicas": args.replicas, "seed": args.seed, "stream": args.stream,
    }
    return _json_doc("theta", cfg, {
        "mean": est.mean, "stderr": est.stderr, "event": est.event,
        "replicas": est.replicas,
    })


def _cmd_tail(args) -> str:
    sizes = [int(t) for t in args.sizes.split(",")]
    params = ParamPoint(args.p, args.q)
    seed = SeedSpec(args.seed, args.stream)
    tail = tail_curve(params, args.k, sizes, args.radius, args.replicas, seed)
    if args.format == "csv":
        rows = [CSV_HEADER]
        for j, n in enumerate(tail.n_grid):
            rows.append(
                f"{args.p!r},{args.q!r},{args.k},cluster-at-least:0_0_0:{n},{n},"
                f"{tail.survival[j]!r},{tail.stderr(j)!r},{args.replicas},{args.seed}"
            )
        return "\n".join(rows) + "\n"
    try:
        fit = fit_decay(tail, min_survivors=args.min_survivors)
        fit_doc = asdict(fit)
    except Exception as exc:  # fit may be infeasible; report, don't fail
        fit_doc = {"error": str(exc)}
    cfg = {
        "k": args.k, "p": args.p, "q": args.q, "radius": args.radius,
        "sizes": sizes, "replicas": args.replicas, "seed": args.seed,
        "stream": args.stream, "min_survivors": args.min_survivors,
    }
    return _json_doc("tail", cfg, {
        "n_grid": tail.n_grid,
        "survival": tail.survival,
        "survivors": tail.survivors,
        "box_radius": tail.box_radius,
        "truncation": "cluster sizes measured inside the finite box only",
        "fit": fit_doc,
    })


def _cmd_russo(args) -> str:
    box = build_box(SlabSpec(args.k), CenteredBox(args.n))
    est = pivotal.russo_estimate(
        box,
        ParamPoint(args.p, args.q),
        OriginToBoundary(args.n),
        args.replicas,
        SeedSpec(args.seed, args.stream),
    )
    if args.per_edge:
        rows = ["class,derivative,stderr"]
        rows.append(f"radial,{est.d_p!r},{est.d_p_stderr!r}")
        rows.append(f"axial,{est.d_q!r},{est.d_q_stderr!r}")
        return "\n".join(rows) + "\n"
    cfg = {
        "k": args.k, "n": args.n, "p": args.p, "q": args.q,
        "replicas": args.replicas, "seed": args.seed, "stream": args.stream,
    }
    doc = asdict(est)
    doc["params"] = {"p": args.p, "q": args.q}
    doc["flags"] = list(est.flags)
    return _json_doc("russo", cfg, doc)


def _cmd_oracle(args) -> str:
    box = build_box(SlabSpec(args.k), parse_shape(args.shape))
    spec = parse_event(args.event)
    res = oracle.exact_probability(box, ParamPoint(args.p, args.q), spec, cap=args.cap)
    cfg = {
        "k": args.k, "shape": args.shape, "p": args.p, "q": args.q,
        "event": args.event, "cap": args.cap,
    }
    return _json_doc("oracle", cfg, {
        "value": res.value,
        "edge_count": res.edge_count,
        "enumeration_size": res.enumeration_size,
        "event": res.event,
    })


def _cmd_curve(args) -> str:
    import numpy as np

    grid = [float(x) for x in np.linspace(args.pmin, args.pmax, args.points)]
    seed = SeedSpec(args.seed, args.stream)
    cur = curve_mod.sweep(
        grid, args.k, args.n, args.tol, args.replicas, seed,
        two_scale=args.two_scale,
    )
    inverse_pts = None
    if args.inverse:
        span = curve_mod.MAX_PROBES * args.replicas
        base = seed.offset((len(grid) * (2 if args.two_scale else 1) + 1) * span)
        inverse_pts = [
            curve_mod.pc_at(pt.q_est, args.k, args.n, args.tol, args.replicas,
                            base.offset(i * span))
            for i, pt in enumerate(cur.points)
        ]
    diag = curve_mod.diagnostics(
        cur,
        bound_fn=lambda p: bounds_mod.axial_upper_bound(p, args.k).q_star,
        inverse_points=inverse_pts,
    )
    csv_text = "p,q_est,ci,n,replicas\n" + "".join(
        f"{pt.p!r},{pt.q_est!r},{pt.ci_halfwidth!r},{pt.n_used},{pt.replicas_per_probe}\n"
        for pt in cur.points
    )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
    cfg = {
        "k": args.k, "pmin": args.pmin, "pmax": args.pmax, "points": args.points,
        "n": args.n, "tol": args.tol, "replicas": args.replicas,
        "seed": args.seed, "stream": args.stream,
        "two_scale": args.two_scale, "inverse": args.inverse,
    }
    results = {
        "criterion": cur.criterion,
        "points": [
            {
                "p": pt.p, "q_est": pt.q_est, "ci": pt.ci_halfwidth,
                "n": pt.n_used, "replicas": pt.replicas_per_probe,
                "probes": pt.probes, "flags": list(pt.flags),
            }
            for pt in cur.points
        ],
        "diagnostics": _diag_doc(diag),
    }
    if cur.scale_drift is not None:
        results["scale_drift"] = cur.scale_drift
        results["points_2n"] = [
            {"p": pt.p, "q_est": pt.q_est, "ci": pt.ci_halfwidth, "n": pt.n_used}
            for pt in cur.points_2n
        ]
    if inverse_pts is not None:
        results["inverse_points"] = [
            {"q": ip.q, "p_est": ip.p_est, "ci": ip.ci_halfwidth}
            for ip in inverse_pts
        ]
    return _json_doc("curve", cfg, results)


def _diag_doc(diag) -> dict:
    doc = asdict(diag)
    doc["language"] = (
        "statistical diagnostics at 4 sigma; consistency, not proof"
    )
    return doc


# ---- verify -----------------------------------------------------------------

def _verify_lemma1(args) -> str:
    params = ParamPoint(args.p, args.q)
    seed = SeedSpec(args.seed, args.stream)
    rep = renorm.layer_union_bound_report(params, args.m, args.k, args.replicas, seed)
    blk = renorm.block_probability(
        params, args.m, args.k, args.replicas, seed.offset(2 * args.replicas)
    )
    results = {
        "axial_bonds": rep.budget.axial_bonds,
        "prob_all_axial_closed": rep.budget.prob_all_closed,
        "conditioned_lhs": rep.lhs,
        "conditioned_lhs_stderr": rep.lhs_stderr,
        "layer_bound_rhs": rep.rhs,
        "layer_bound_rhs_stderr": rep.rhs_stderr,
        "holds_within_4sigma": rep.holds_within_noise,
        "block_probability": blk.mean,
        "block_probability_stderr": blk.stderr,
        "epsilon": args.epsilon,
        "epsilon_hypothesis_satisfied": bool(blk.mean <= args.epsilon),
    }
    cfg = {
        "p": args.p, "q": args.q, "k": args.k, "m": args.m,
        "replicas": args.replicas, "seed": args.seed, "stream": args.stream,
        "epsilon": args.epsilon,
    }
    text = _json_doc("verify lemma1", cfg, results)
    if not rep.holds_within_noise:
        raise CheckFailed(text)
    return text


def _verify_lemma2(args) -> str:
    worst = 0.0
    grid = [0.1, 0.3, 0.5, 0.7, 0.9]
    for k in range(args.kmax + 1):
        for p in grid:
            for q in grid:
                gap = abs(
                    oracle.split_gadget_exact(p, q, k)
                    - bounds_mod.embedded_square_param(p, q, k)
                )
                worst = max(worst, gap)
    cfg = {"kmax": args.kmax, "tol": args.tol, "grid": grid}
    results = {
        "max_abs_gap": worst,
        "holds": bool(worst <= args.tol),
        "comparison": "enumerated split-gadget union probability vs closed-form series",
    }
    text = _json_doc("verify lemma2", cfg, results)
    if worst > args.tol:
        raise CheckFailed(text)
    return text


def _verify_collapse(args) -> str:
    k = args.k
    s = bounds_mod.collapse_parameter(args.p, k)
    slab_box = build_box(SlabSpec(k), RectBox(0, 1, 0, 1))
    layer_box = build_box(SlabSpec(0), RectBox(0, 1, 0, 1))
    exact_slab = oracle.exact_probability(
        slab_box, ParamPoint(args.p, 1.0), Connected((0, 0, 0), (1, 1, k))
    ).value
    exact_layer = oracle.exact_probability(
        layer_box, ParamPoint(s, 0.0), Connected((0, 0, 0), (1, 1, 0))
    ).value
    gap = abs(exact_slab - exact_layer)
    results = {
        "collapse_parameter_s": s,
        "exact_slab_at_q1": exact_slab,
        "exact_collapsed_layer": exact_layer,
        "exact_gap": gap,
        "exact_holds": bool(gap <= 1e-12),
    }
    ok = gap <= 1e-12
    if args.replicas:
        seed = SeedSpec(args.seed, args.stream)
        slab_big = build_box(SlabSpec(k), CenteredBox(args.n))
        layer_big = build_box(SlabSpec(0), CenteredBox(args.n))
        est_slab = estimate_event(
            slab_big, ParamPoint(args.p, 1.0), OriginToBoundary(args.n),
            args.replicas, seed, n=args.n,
        )
        est_layer = estimate_event(
            layer_big, ParamPoint(s, 0.0), OriginToBoundary(args.n),
            args.replicas, seed.offset(args.replicas), n=args.n,
        )
        gap_mc = abs(est_slab.mean - est_layer.mean)
        tol_mc = 4.0 * (est_slab.stderr**2 + est_layer.stderr**2) ** 0.5
        results.update({
            "mc_slab_mean": est_slab.mean,
            "mc_layer_mean": est_layer.mean,
            "mc_gap": gap_mc,
            "mc_allowance_4sigma": tol_mc,
            "mc_holds": bool(gap_mc <= tol_mc),
        })
        ok = ok and gap_mc <= tol_mc
    cfg = {
        "k": k, "p": args.p, "n": args.n, "replicas": args.replicas,
        "seed": args.seed, "stream": args.stream, "shape": "rect2",
    }
    text = _json_doc("verify collapse", cfg, results)
    if not ok:
        raise CheckFailed(text)
    return text


def _verify_russo(args) -> str:
    box = build_box(SlabSpec(1), RectBox(0, 1, 0, 1))
    ex = oracle.exact_russo(
        box, ParamPoint(args.p, args.q), Connected((0, 0, 0), (1, 1, 1))
    )
    gap_p = abs(ex.d_p - ex.d_p_direct)
    gap_q = abs(ex.d_q - ex.d_q_direct)
    results = {
        "exact_d_p_pivotal": ex.d_p,
        "exact_d_p_direct": ex.d_p_direct,
        "exact_d_q_pivotal": ex.d_q,
        "exact_d_q_direct": ex.d_q_direct,
        "exact_gap_p": gap_p,
        "exact_gap_q": gap_q,
        "exact_holds": bool(gap_p <= 1e-10 and gap_q <= 1e-10),
    }
    ok = gap_p <= 1e-10 and gap_q <= 1e-10
    if args.replicas:
        seed = SeedSpec(args.seed, args.stream)
        big = build_box(SlabSpec(args.k), CenteredBox(args.n))
        spec = OriginToBoundary(args.n)
        params = ParamPoint(args.p, args.q)
        est = pivotal.russo_estimate(big, params, spec, args.replicas, seed)
        h = args.h
        cd = estimators.coupled_difference(
            big, ParamPoint(args.p - h, args.q), ParamPoint(args.p + h, args.q),
            spec, args.replicas, seed.offset(args.replicas),
        )
        fd = cd.diff / (2 * h)
        fd_se = cd.diff_stderr / (2 * h)
        gap_mc = abs(est.d_p - fd)
        allow = 4.0 * (est.d_p_stderr**2 + fd_se**2) ** 0.5
        results.update({
            "mc_d_p": est.d_p,
            "mc_d_p_stderr": est.d_p_stderr,
            "finite_difference": fd,
            "finite_difference_stderr": fd_se,
            "mc_gap": gap_mc,
            "mc_allowance_4sigma": allow,
            "mc_holds": bool(gap_mc <= allow),
        })
        ok = ok and gap_mc <= allow
    cfg = {
        "k": args.k, "n": args.n, "p": args.p, "q": args.q, "h": args.h,
        "replicas": args.replicas, "seed": args.seed, "stream": args.stream,
    }
    text = _json_doc("verify russo", cfg, results)
    if not ok:
        raise CheckFailed(text)
    return text


# ---- parser -----------------------------------------------------------------

def _add_seed_args(sp, replicas_default=10000):
    sp.add_argument("--replicas", type=int, default=replicas_default)
    sp.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    sp.add_argument("--stream", type=int, default=0, help="base stream id")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="slabperc",
        description="Anisotropic bond percolation laboratory on slab lattices.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1,
                        help="worker threads for replica chunks; never affects output")
    common.add_argument("--out", default=None, help="write output to this path")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    b = add_parser("bounds", help="closed-form thresholds and transforms")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--p", type=float, default=None)
    b.add_argument("--q", type=float, default=None)
    b.add_argument("--tol", type=float, default=1e-10)

    t = add_parser("theta", help="origin-to-boundary probability estimate")
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--p", type=float, required=True)
    t.add_argument("--q", type=float, default=0.0)
    t.add_argument("--format", choices=["csv", "json"], default="json")
    _add_seed_args(t)

    tl = add_parser("tail", help="origin cluster-size survival curve and decay fit")
    tl.add_argument("--k", type=int, required=True)
    tl.add_argument("--p", type=float, required=True)
    tl.add_argument("--q", type=float, required=True)
    tl.add_argument("--radius", type=int, required=True)
    tl.add_argument("--sizes", default="5,10,15,20,25,30",
                    help="comma-separated size grid")
    tl.add_argument("--min-survivors", type=int, default=100)
    tl.add_argument("--format", choices=["csv", "json"], default="json")
    _add_seed_args(tl)

    r = add_parser("russo", help="pivotal-count derivative estimates")
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--p", type=float, required=True)
    r.add_argument("--q", type=float, required=True)
    r.add_argument("--per-edge", action="store_true",
                   help="CSV rows per edge class instead of JSON")
    _add_seed_args(r)

    c = add_parser("curve", help="critical-curve sweep with diagnostics")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--pmin", type=float, required=True)
    c.add_argument("--pmax", type=float, required=True)
    c.add_argument("--points", type=int, required=True)
    c.add_argument("--n", type=int, default=64)
    c.add_argument("--tol", type=float, default=5e-3)
    c.add_argument("--two-scale", action=argparse.BooleanOptionalAction, default=True,
                   help="repeat at 2n and report the inter-scale drift "
                        "as a systematic-bias estimate")
    c.add_argument("--inverse", action="store_true",
                   help="also bisect p at each estimated q and report closure")
    c.add_argument("--csv", default=None, help="write the points table here")
    _add_seed_args(c, replicas_default=20000)

    o = add_parser("oracle", help="exact probability by full enumeration")
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--shape", required=True,
                   help="centered:N or rect:x0:x1:y0:y1")
    o.add_argument("--p", type=float, required=True)
    o.add_argument("--q", type=float, required=True)
    o.add_argument("--event", required=True,
                   help="origin-to-boundary:N | connected:x_y_z:x_y_z | "
                        "cluster-at-least:x_y_z:S | left-right | "
                        "block-reach:vx_vy:m | rect-reach:x0:x1:y0:y1:m")
    o.add_argument("--cap", type=int, default=oracle.DEFAULT_EDGE_CAP)

    v = add_parser("verify", help="statistical regression checks (exit 4 on violation)")
    vs = v.add_subparsers(dest="check", required=True)

    v1 = vs.add_parser("lemma1", parents=[common], help="conditioned block-reach vs per-layer union bound")
    v1.add_argument("--p", type=float, required=True)
    v1.add_argument("--q", type=float, required=True)
    v1.add_argument("--k", type=int, required=True)
    v1.add_argument("--m", type=int, required=True)
    v1.add_argument("--epsilon", type=float, default=0.05,
                    help="reporting threshold for the block-density hypothesis")
    _add_seed_args(v1)

    v2 = vs.add_parser("lemma2", parents=[common], help="split-gadget enumeration vs closed-form series")
    v2.add_argument("--kmax", type=int, default=3)
    v2.add_argument("--tol", type=float, default=1e-12)

    vc = vs.add_parser("collapse", parents=[common], help="fully coupled slab vs collapsed single layer")
    vc.add_argument("--k", type=int, required=True)
    vc.add_argument("--p", type=float, required=True)
    vc.add_argument("--n", type=int, default=32)
    vc.add_argument("--shape", default="rect2", choices=["rect2"])
    _add_seed_args(vc, replicas_default=0)

    vr = vs.add_parser("russo", parents=[common], help="pivotal sums vs direct derivative, exact and MC")
    vr.add_argument("--k", type=int, default=1)
    vr.add_argument("--n", type=int, default=2)
    vr.add_argument("--p", type=float, default=0.4)
    vr.add_argument("--q", type=float, default=0.4)
    vr.add_argument("--h", type=float, default=0.02)
    _add_seed_args(vr, replicas_default=0)

    return ap


_HANDLERS = {
    "bounds": _cmd_bounds,
    "theta": _cmd_theta,
    "tail": _cmd_tail,
    "russo": _cmd_russo,
    "curve": _cmd_curve,
    "oracle": _cmd_oracle,
}

_VERIFY_HANDLERS = {
    "lemma1": _verify_lemma1,
    "lemma2": _verify_lemma2,
    "collapse": _verify_collapse,
    "russo": _verify_russo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    estimators.set_jobs(args.jobs)
    try:
        if args.cmd == "verify":
            text = _VERIFY_HANDLERS[args.check](args)
        else:
            text = _HANDLERS[args.cmd](args)
    except CheckFailed as exc:
        _emit(str(exc), args.out)
        return EXIT_CHECK_FAILED
    except ResourceLimitError as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except (GeometryError, DiagnosticError, ValueError) as exc:
        sys.stderr.write(f"invalid parameters: {exc}\n")
        return EXIT_BAD_PARAMS
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
