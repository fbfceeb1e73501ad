"""Numba kernels: union-find builds, batched event evaluation, exhaustive sums.

Everything here is deterministic given its inputs; replica batching changes
nothing but wall time. The connectivity builders use Rem's union-find with
splicing (fastest single-pass variant on lattice workloads); the size-tracking
and rebuild paths use classic path-halving unions where root identity matters.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _find(parent, x):
    # path halving
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _rem_union(parent, a, b):
    pa = parent[a]
    pb = parent[b]
    while pa != pb:
        if pa < pb:
            if b == pb:
                parent[b] = pa
                return
            parent[b] = pa
            b = pb
            pb = parent[b]
        else:
            if a == pa:
                parent[a] = pb
                return
            parent[a] = pb
            a = pa
            pa = parent[a]


@njit(cache=True, nogil=True)
def _flatten(parent):
    for v in range(parent.shape[0]):
        r = v
        while parent[r] != r:
            r = parent[r]
        x = v
        while parent[x] != r:
            nxt = parent[x]
            parent[x] = r
            x = nxt


@njit(cache=True, nogil=True)
def roots_from_uniforms(n_vertices, eu, ev, uni, n_radial, p, q):
    """Flattened union-find roots of the thresholded configuration."""
    parent = np.arange(n_vertices, dtype=np.int32)
    for i in range(eu.shape[0]):
        thr = p if i < n_radial else q
        if uni[i] < thr:
            _rem_union(parent, eu[i], ev[i])
    _flatten(parent)
    return parent


@njit(cache=True, nogil=True)
def roots_from_mask(n_vertices, eu, ev, open_mask):
    """Flattened roots of an explicit open/closed mask."""
    parent = np.arange(n_vertices, dtype=np.int32)
    for i in range(eu.shape[0]):
        if open_mask[i]:
            _rem_union(parent, eu[i], ev[i])
    _flatten(parent)
    return parent


@njit(cache=True, nogil=True)
def connect_any_batch(n_vertices, eu, ev, uni, n_edges, n_radial, p, q, src, dst):
    """Per replica: is any src vertex joined to any dst vertex?"""
    reps = uni.shape[0]
    out = np.zeros(reps, dtype=np.uint8)
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    for r in range(reps):
        for v in range(n_vertices):
            parent[v] = v
        for i in range(n_edges):
            thr = p if i < n_radial else q
            if uni[r, i] < thr:
                _rem_union(parent, eu[i], ev[i])
        stamp = r + 1
        for j in range(src.shape[0]):
            mark[_find(parent, src[j])] = stamp
        for j in range(dst.shape[0]):
            if mark[_find(parent, dst[j])] == stamp:
                out[r] = 1
                break
    return out


@njit(cache=True, nogil=True)
def cluster_size_batch(n_vertices, eu, ev, uni, n_edges, n_radial, p, q, v0):
    """Per replica: number of vertices in v0's open cluster."""
    reps = uni.shape[0]
    out = np.empty(reps, dtype=np.int32)
    parent = np.empty(n_vertices, dtype=np.int32)
    size = np.empty(n_vertices, dtype=np.int32)
    for r in range(reps):
        for v in range(n_vertices):
            parent[v] = v
            size[v] = 1
        for i in range(n_edges):
            thr = p if i < n_radial else q
            if uni[r, i] < thr:
                ra = _find(parent, eu[i])
                rb = _find(parent, ev[i])
                if ra != rb:
                    if size[ra] < size[rb]:
                        ra, rb = rb, ra
                    parent[rb] = ra
                    size[ra] += size[rb]
        out[r] = size[_find(parent, v0)]
    return out


@njit(cache=True, nogil=True)
def blockfield_batch(
    n_vertices, eu, ev, uni, n_edges, n_radial, p, q,
    src_indptr, src_idx, dst_indptr, dst_idx,
):
    """Per replica and per block b: is any src[b] vertex joined to any dst[b]?"""
    reps = uni.shape[0]
    nblocks = src_indptr.shape[0] - 1
    out = np.zeros((reps, nblocks), dtype=np.uint8)
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    stamp = 0
    for r in range(reps):
        for v in range(n_vertices):
            parent[v] = v
        for i in range(n_edges):
            thr = p if i < n_radial else q
            if uni[r, i] < thr:
                _rem_union(parent, eu[i], ev[i])
        _flatten(parent)
        for b in range(nblocks):
            stamp += 1
            for j in range(src_indptr[b], src_indptr[b + 1]):
                mark[parent[src_idx[j]]] = stamp
            for j in range(dst_indptr[b], dst_indptr[b + 1]):
                if mark[parent[dst_idx[j]]] == stamp:
                    out[r, b] = 1
                    break
    return out


@njit(cache=True, nogil=True)
def _connects(parent, mark, stamp, src, dst):
    for j in range(src.shape[0]):
        mark[_find(parent, src[j])] = stamp
    for j in range(dst.shape[0]):
        if mark[_find(parent, dst[j])] == stamp:
            return True
    return False


@njit(cache=True, nogil=True)
def pivotal_counts_batch(n_vertices, eu, ev, uni, n_edges, n_radial, p, q, src, dst):
    """Per replica: (# pivotal radial edges, # pivotal axial edges).

    An edge is pivotal when forcing it open satisfies the connection event and
    forcing it closed does not, regardless of its sampled state. When the
    event fails, a single root-marking pass decides every edge; when it holds,
    each open edge inside the connecting component is retested with the edge
    removed (closed edges cannot be pivotal then).
    """
    reps = uni.shape[0]
    out = np.zeros((reps, 2), dtype=np.int32)
    parent = np.empty(n_vertices, dtype=np.int32)
    roots_full = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    reach_s = np.zeros(n_vertices, dtype=np.uint8)
    reach_t = np.zeros(n_vertices, dtype=np.uint8)
    stamp = 0
    for r in range(reps):
        for v in range(n_vertices):
            parent[v] = v
        for i in range(n_edges):
            thr = p if i < n_radial else q
            if uni[r, i] < thr:
                _rem_union(parent, eu[i], ev[i])
        _flatten(parent)
        for v in range(n_vertices):
            roots_full[v] = parent[v]
            reach_s[v] = 0
            reach_t[v] = 0
        for j in range(src.shape[0]):
            reach_s[roots_full[src[j]]] = 1
        for j in range(dst.shape[0]):
            reach_t[roots_full[dst[j]]] = 1
        event = False
        for v in range(n_vertices):
            if reach_s[v] == 1 and reach_t[v] == 1:
                event = True
                break
        if not event:
            # pivotal iff the edge bridges a src-reaching and a dst-reaching cluster
            for i in range(n_edges):
                ra = roots_full[eu[i]]
                rb = roots_full[ev[i]]
                if (reach_s[ra] == 1 and reach_t[rb] == 1) or (
                    reach_s[rb] == 1 and reach_t[ra] == 1
                ):
                    if i < n_radial:
                        out[r, 0] += 1
                    else:
                        out[r, 1] += 1
        else:
            for i in range(n_edges):
                thr = p if i < n_radial else q
                if uni[r, i] >= thr:
                    continue
                ra = roots_full[eu[i]]
                if reach_s[ra] == 0 or reach_t[ra] == 0:
                    continue  # not in a connecting component
                # rebuild without edge i
                for v in range(n_vertices):
                    parent[v] = v
                for j in range(n_edges):
                    if j == i:
                        continue
                    thr2 = p if j < n_radial else q
                    if uni[r, j] < thr2:
                        _rem_union(parent, eu[j], ev[j])
                stamp += 1
                if not _connects(parent, mark, stamp, src, dst):
                    if i < n_radial:
                        out[r, 0] += 1
                    else:
                        out[r, 1] += 1
    return out


# ---- exhaustive enumeration ----------------------------------------------

@njit(cache=True, nogil=True)
def enum_event_prob(n_vertices, eu, ev, is_axial, p, q, src, dst):
    """Exact P(src joined to dst): literal sum over all 2^E configurations."""
    n_edges = eu.shape[0]
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    total = 0.0
    comp = 0.0  # Kahan compensation
    stamp = 0
    for cfg in range(1 << n_edges):
        w = 1.0
        for i in range(n_edges):
            pr = q if is_axial[i] else p
            if (cfg >> i) & 1:
                w *= pr
            else:
                w *= 1.0 - pr
        if w == 0.0:
            continue
        for v in range(n_vertices):
            parent[v] = v
        for i in range(n_edges):
            if (cfg >> i) & 1:
                _rem_union(parent, eu[i], ev[i])
        stamp += 1
        if _connects(parent, mark, stamp, src, dst):
            y = w - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


@njit(cache=True, nogil=True)
def enum_size_prob(n_vertices, eu, ev, is_axial, p, q, v0, smin):
    """Exact P(|cluster of v0| >= smin) by full enumeration."""
    n_edges = eu.shape[0]
    parent = np.empty(n_vertices, dtype=np.int32)
    size = np.empty(n_vertices, dtype=np.int32)
    total = 0.0
    comp = 0.0
    for cfg in range(1 << n_edges):
        w = 1.0
        for i in range(n_edges):
            pr = q if is_axial[i] else p
            if (cfg >> i) & 1:
                w *= pr
            else:
                w *= 1.0 - pr
        if w == 0.0:
            continue
        for v in range(n_vertices):
            parent[v] = v
            size[v] = 1
        for i in range(n_edges):
            if (cfg >> i) & 1:
                ra = _find(parent, eu[i])
                rb = _find(parent, ev[i])
                if ra != rb:
                    if size[ra] < size[rb]:
                        ra, rb = rb, ra
                    parent[rb] = ra
                    size[ra] += size[rb]
        if size[_find(parent, v0)] >= smin:
            y = w - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


@njit(cache=True, nogil=True)
def enum_pivotal_sums(n_vertices, eu, ev, is_axial, p, q, src, dst):
    """Exact (sum over radial e of P(e pivotal), same over axial e).

    For each edge the remaining edges are enumerated; e is pivotal when the
    event fails with e absent but holds once e joins its endpoints.
    """
    n_edges = eu.shape[0]
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    reach_s = np.zeros(n_vertices, dtype=np.uint8)
    reach_t = np.zeros(n_vertices, dtype=np.uint8)
    d_radial = 0.0
    d_axial = 0.0
    comp_r = 0.0
    comp_a = 0.0
    for e in range(n_edges):
        acc = 0.0
        comp = 0.0
        for cfg in range(1 << (n_edges - 1)):
            # bits of cfg index the edges other than e, in order
            w = 1.0
            for j in range(n_edges - 1):
                i = j if j < e else j + 1
                pr = q if is_axial[i] else p
                if (cfg >> j) & 1:
                    w *= pr
                else:
                    w *= 1.0 - pr
            if w == 0.0:
                continue
            for v in range(n_vertices):
                parent[v] = v
            for j in range(n_edges - 1):
                i = j if j < e else j + 1
                if (cfg >> j) & 1:
                    _rem_union(parent, eu[i], ev[i])
            _flatten(parent)
            for v in range(n_vertices):
                reach_s[v] = 0
                reach_t[v] = 0
            for j in range(src.shape[0]):
                reach_s[parent[src[j]]] = 1
            for j in range(dst.shape[0]):
                reach_t[parent[dst[j]]] = 1
            closed_holds = False
            for v in range(n_vertices):
                if reach_s[v] == 1 and reach_t[v] == 1:
                    closed_holds = True
                    break
            if closed_holds:
                continue
            ra = parent[eu[e]]
            rb = parent[ev[e]]
            if (reach_s[ra] == 1 and reach_t[rb] == 1) or (
                reach_s[rb] == 1 and reach_t[ra] == 1
            ):
                y = w - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
        if is_axial[e]:
            y = acc - comp_a
            t = d_axial + y
            comp_a = (t - d_axial) - y
            d_axial = t
        else:
            y = acc - comp_r
            t = d_radial + y
            comp_r = (t - d_radial) - y
            d_radial = t
    return d_radial, d_axial


@njit(cache=True, nogil=True)
def enum_derivatives(n_vertices, eu, ev, is_axial, p, q, src, dst):
    """Exact (P, dP/dp, dP/dq) via the per-configuration weight derivative.

    Requires p, q in the open interval (0, 1): the derivative factor for an
    open edge is w/p and for a closed edge -w/(1-p), likewise in q.
    """
    n_edges = eu.shape[0]
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.zeros(n_vertices, dtype=np.int64)
    total = 0.0
    dp = 0.0
    dq = 0.0
    c0 = 0.0
    c1 = 0.0
    c2 = 0.0
    stamp = 0
    for cfg in range(1 << n_edges):
        w = 1.0
        open_r = 0
        open_a = 0
        for i in range(n_edges):
            pr = q if is_axial[i] else p
            if (cfg >> i) & 1:
                w *= pr
                if is_axial[i]:
                    open_a += 1
                else:
                    open_r += 1
            else:
                w *= 1.0 - pr
        for v in range(n_vertices):
            parent[v] = v
        for i in range(n_edges):
            if (cfg >> i) & 1:
                _rem_union(parent, eu[i], ev[i])
        stamp += 1
        if _connects(parent, mark, stamp, src, dst):
            closed_r = 0
            closed_a = 0
            for i in range(n_edges):
                if not ((cfg >> i) & 1):
                    if is_axial[i]:
                        closed_a += 1
                    else:
                        closed_r += 1
            y = w - c0
            t = total + y
            c0 = (t - total) - y
            total = t
            gp = w * (open_r / p - closed_r / (1.0 - p))
            y = gp - c1
            t = dp + y
            c1 = (t - dp) - y
            dp = t
            gq = w * (open_a / q - closed_a / (1.0 - q))
            y = gq - c2
            t = dq + y
            c2 = (t - dq) - y
            dq = t
    return total, dp, dq
