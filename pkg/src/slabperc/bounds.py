"""Closed-form quantities of the slab model.

All functions are pure and cheap:

* ``horizontal_threshold(k)``: the radial probability p_k at which the fully
  coupled slab (q = 1) collapses onto a critical square lattice,
  p_k = 1 - 2**(-1/(k+1)).
* ``collapse_parameter(p, k)``: the open probability s of the collapsed
  single-layer bond when every column is fully wired, 1 - (1-p)**(k+1).
* ``split_bond_param(q)``: per-copy probability q_hat when one axial bond is
  replaced by four independent parallel copies, 1 - q = (1 - q_hat)**4.
* ``embedded_square_param(p, q, k)``: effective bond probability of the
  single-layer process built from level-by-level detour paths,
  p_bar = p * sum_j ((1-p) * q_hat**2)**j for j = 0..k.
* ``axial_upper_bound(p, k, tol)``: the axial probability where p_bar crosses
  1/2; above it the embedded single-layer process is supercritical, so it
  upper-bounds the critical axial parameter at this p.
* ``axial_closure_budget(m, k, q)``: axial-bond count N = k*(3m)^2 of the
  padded block and the probability (1-q)**N that all of them are closed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


def horizontal_threshold(k: int) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return 1.0 - 0.5 ** (1.0 / (k + 1))


def collapse_parameter(p: float, k: int) -> float:
    _check_prob("p", p)
    return 1.0 - (1.0 - p) ** (k + 1)


def split_bond_param(q: float) -> float:
    _check_prob("q", q)
    return 1.0 - (1.0 - q) ** 0.25


def embedded_square_param(p: float, q: float, k: int) -> float:
    # explicit (k+1)-term sum: stable even at the removable point x = 1
    _check_prob("p", p)
    qh = split_bond_param(q)
    x = (1.0 - p) * qh * qh
    acc = 0.0
    term = 1.0
    for _ in range(k + 1):
        acc += term
        term *= x
    return p * acc


def _embedded_from_split(p: float, qh: float, k: int) -> float:
    x = (1.0 - p) * qh * qh
    acc = 0.0
    term = 1.0
    for _ in range(k + 1):
        acc += term
        term *= x
    return p * acc


@dataclass
class QStarResult:
    """Root of embedded_square_param(p, q, k) = 1/2 in q, with status.

    status is "ok" for an interior root, "boundary" when only q = 1 attains
    exactly 1/2, and "no-solution" when even q = 1 leaves the embedded
    process subcritical (then q_star = 1.0 is a clamp, not a root).
    """

    q_star: float
    q_hat_star: float
    p_bar: float
    status: str


def axial_upper_bound(p: float, k: int, tol: float = 1e-10) -> QStarResult:
    """Bisection for the smallest axial q with embedded_square_param >= 1/2.

    Solved in q_hat, where the embedded parameter is strictly increasing for
    p > 0, then mapped back through q = 1 - (1 - q_hat)**4. The tolerance is
    on |p_bar - 1/2| because downstream comparisons consume p_bar.
    """
    _check_prob("p", p)
    if tol <= 0:
        raise ValueError("tol must be positive")
    at_one = _embedded_from_split(p, 1.0, k)
    if at_one < 0.5 - tol:
        return QStarResult(1.0, 1.0, at_one, "no-solution")
    if at_one <= 0.5:
        # only q = 1 attains 1/2 (up to roundoff); p is at the collapse threshold
        return QStarResult(1.0, 1.0, at_one, "boundary")
    if _embedded_from_split(p, 0.0, k) >= 0.5:
        return QStarResult(0.0, 0.0, p, "ok")
    lo, hi = 0.0, 1.0
    val = at_one
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = _embedded_from_split(p, mid, k)
        if abs(val - 0.5) <= tol:
            lo = hi = mid
            break
        if val < 0.5:
            lo = mid
        else:
            hi = mid
    qh = 0.5 * (lo + hi)
    return QStarResult(1.0 - (1.0 - qh) ** 4, qh, _embedded_from_split(p, qh, k), "ok")


@dataclass
class AxialClosureBudget:
    """Axial bonds of the 3m x 3m padded block and P(all closed)."""

    m: int
    k: int
    q: float
    axial_bonds: int
    prob_all_closed: float


def axial_closure_budget(m: int, k: int, q: float) -> AxialClosureBudget:
    if m < 1:
        raise ValueError("block side m must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    _check_prob("q", q)
    n_axial = k * (3 * m) ** 2
    return AxialClosureBudget(m, k, q, n_axial, (1.0 - q) ** n_axial)


@dataclass
class BoundsReport:
    k: int
    p_k: float
    p: float | None = None
    q: float | None = None
    s: float | None = None
    q_hat: float | None = None
    p_bar: float | None = None
    q_star: float | None = None
    q_star_status: str | None = None

    def to_dict(self) -> dict:
        return {key: val for key, val in asdict(self).items() if val is not None}


def bounds_report(k: int, p: float | None = None, q: float | None = None,
                  tol: float = 1e-10) -> BoundsReport:
    """Everything closed-form we can say about (k, p, q)."""
    rep = BoundsReport(k=k, p_k=horizontal_threshold(k), p=p, q=q)
    if p is not None:
        rep.s = collapse_parameter(p, k)
        qs = axial_upper_bound(p, k, tol)
        rep.q_star = qs.q_star
        rep.q_star_status = qs.status
    if q is not None:
        rep.q_hat = split_bond_param(q)
    if p is not None and q is not None:
        rep.p_bar = embedded_square_param(p, q, k)
    return rep


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0,1], got {value}")
