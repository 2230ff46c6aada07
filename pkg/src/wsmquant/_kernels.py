"""Compiled inner loops.

Every nearest-center search here breaks ties toward the lowest center
index, so the naive scan and the pruned scans agree bit for bit.
"""

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _sqdist(X, i, C, k):
    s = 0.0
    for c in range(X.shape[1]):
        t = X[i, c] - C[k, c]
        s += t * t
    return s


@njit(**_JIT)
def assign_naive(X, C):
    n = X.shape[0]
    K = C.shape[0]
    memb = np.empty(n, np.int64)
    mind = np.empty(n, np.float64)
    for i in range(n):
        x0 = X[i, 0]
        x1 = X[i, 1]
        x2 = X[i, 2]
        best = np.inf
        bi = 0
        for k in range(K):
            t0 = x0 - C[k, 0]
            t1 = x1 - C[k, 1]
            t2 = x2 - C[k, 2]
            d = t0 * t0 + t1 * t1 + t2 * t2
            if d < best:
                best = d
                bi = k
        memb[i] = bi
        mind[i] = best
    return memb, mind, n * K


@njit(**_JIT)
def assign_sort_means(X, C, D, M, prev, check):
    """One sort-means assignment pass.

    ``D`` holds squared center-to-center distances and row ``p`` of ``M``
    lists the centers by increasing distance from center ``p``.  A candidate
    ``t`` with ``D[p, t] >= 4 * |x - c_p|^2`` cannot be closer than ``c_p``;
    since rows are sorted, the scan stops at the first strict exceedance.
    Candidates exactly on the boundary can only tie, so they are evaluated
    only when they could win the lowest-index tie break.

    With ``check`` set, skipped centers are evaluated anyway and any that is
    strictly closer than the previous center is counted as a violation.
    """
    n = X.shape[0]
    K = C.shape[0]
    memb = np.empty(n, np.int64)
    mind = np.empty(n, np.float64)
    evals = 0
    violations = 0
    for i in range(n):
        x0 = X[i, 0]
        x1 = X[i, 1]
        x2 = X[i, 2]
        p = prev[i]
        t0 = x0 - C[p, 0]
        t1 = x1 - C[p, 1]
        t2 = x2 - C[p, 2]
        prev_d = t0 * t0 + t1 * t1 + t2 * t2
        evals += 1
        best = prev_d
        bi = p
        bound = 4.0 * prev_d
        j = 1
        while j < K:
            t = M[p, j]
            dpt = D[p, t]
            if dpt >= bound:
                if dpt > bound:
                    break
                if t > bi:
                    if check and _sqdist(X, i, C, t) < prev_d:
                        violations += 1
                    j += 1
                    continue
            t0 = x0 - C[t, 0]
            t1 = x1 - C[t, 1]
            t2 = x2 - C[t, 2]
            d = t0 * t0 + t1 * t1 + t2 * t2
            evals += 1
            if d < best or (d == best and t < bi):
                best = d
                bi = t
            j += 1
        if check:
            while j < K:
                t = M[p, j]
                if _sqdist(X, i, C, t) < prev_d:
                    violations += 1
                j += 1
        memb[i] = bi
        mind[i] = best
    return memb, mind, evals, violations


@njit(**_JIT)
def assign_neighbors(X, C, M, prev, kprime):
    """Search only the ``kprime`` centers nearest to each point's previous center."""
    n = X.shape[0]
    memb = np.empty(n, np.int64)
    mind = np.empty(n, np.float64)
    for i in range(n):
        p = prev[i]
        best = np.inf
        bi = p
        for j in range(kprime):
            t = M[p, j]
            d = _sqdist(X, i, C, t)
            if d < best or (d == best and t < bi):
                best = d
                bi = t
        memb[i] = bi
        mind[i] = best
    return memb, mind, n * kprime


@njit(**_JIT)
def assign_active(X, C, memb, active):
    """Full nearest-center search for active points; others keep membership."""
    n = X.shape[0]
    K = C.shape[0]
    out = memb.copy()
    mind = np.empty(n, np.float64)
    evals = 0
    for i in range(n):
        if active[i]:
            best = np.inf
            bi = 0
            for k in range(K):
                d = _sqdist(X, i, C, k)
                if d < best:
                    best = d
                    bi = k
            evals += K
            out[i] = bi
            mind[i] = best
        else:
            mind[i] = _sqdist(X, i, C, out[i])
    return out, mind, evals


@njit(**_JIT)
def build_color_table(rgb, a0, a1, a2, m):
    """Chained hash table over packed 24-bit colors.

    Returns unique packed keys in first-occurrence order, their counts, the
    per-pixel entry index, and the longest chain seen.
    """
    n = rgb.shape[0]
    head = np.full(m, -1, np.int64)
    nxt = np.empty(n, np.int64)
    keys = np.empty(n, np.int64)
    counts = np.zeros(n, np.int64)
    inverse = np.empty(n, np.int64)
    nu = 0
    longest = 0
    for i in range(n):
        r = np.int64(rgb[i, 0])
        g = np.int64(rgb[i, 1])
        b = np.int64(rgb[i, 2])
        key = (r << 16) | (g << 8) | b
        h = (a0 * r + a1 * g + a2 * b) % m
        e = head[h]
        depth = 0
        while e != -1 and keys[e] != key:
            e = nxt[e]
            depth += 1
        if e == -1:
            e = nu
            keys[e] = key
            nxt[e] = head[h]
            head[h] = e
            nu += 1
        if depth > longest:
            longest = depth
        counts[e] += 1
        inverse[i] = e
    return keys[:nu].copy(), counts[:nu].copy(), inverse, longest


@njit(**_JIT)
def maximin(X, K, first, cw):
    """Indices of K points chosen by farthest-point (maximin) selection."""
    n = X.shape[0]
    mind = np.full(n, np.inf)
    idx = np.empty(K, np.int64)
    idx[0] = first
    for s in range(1, K):
        c = idx[s - 1]
        best = -1.0
        bi = -1
        for i in range(n):
            d = 0.0
            for j in range(X.shape[1]):
                t = X[i, j] - X[c, j]
                d += cw[j] * t * t
            if d < mind[i]:
                mind[i] = d
            if mind[i] > best:
                best = mind[i]
                bi = i
        idx[s] = bi
    return idx


@njit(**_JIT)
def assign_weighted_metric(X, C, cw):
    n = X.shape[0]
    K = C.shape[0]
    memb = np.empty(n, np.int64)
    for i in range(n):
        best = np.inf
        bi = 0
        for k in range(K):
            d = 0.0
            for j in range(X.shape[1]):
                t = X[i, j] - C[k, j]
                d += cw[j] * t * t
            if d < best:
                best = d
                bi = k
        memb[i] = bi
    return memb


@njit(**_JIT)
def fuzzy_memberships_row(X, i, V, q, alpha, floor, out):
    """Fill ``out`` with the fuzzy membership row of point ``i``.

    The per-prototype term is ``|x - v|`` (``alpha == 0``) or
    ``max(|x - v| - alpha, floor)``.  A zero term (coincident point and
    prototype) takes the whole membership.
    """
    K = V.shape[0]
    expo = 2.0 / (q - 1.0)
    emin = np.inf
    kmin = 0
    for k in range(K):
        e = np.sqrt(_sqdist(X, i, V, k))
        if alpha != 0.0:
            e = e - alpha
            if e <= floor:
                e = floor
        out[k] = e
        if e < emin:
            emin = e
            kmin = k
    if emin == 0.0:
        for k in range(K):
            out[k] = 0.0
        out[kmin] = 1.0
        return
    s = 0.0
    for k in range(K):
        r = (emin / out[k]) ** expo
        out[k] = r
        s += r
    for k in range(K):
        out[k] /= s


@njit(**_JIT)
def fuzzy_step(X, w, V, q, alpha, floor):
    """One membership + prototype update without storing the membership matrix.

    Returns the new prototypes and ``J_q(U_new, V_new)``.
    """
    n = X.shape[0]
    K = V.shape[0]
    D = X.shape[1]
    num = np.zeros((K, D))
    den = np.zeros(K)
    sq = np.zeros(K)
    u = np.empty(K)
    for i in range(n):
        fuzzy_memberships_row(X, i, V, q, alpha, floor, u)
        xx = 0.0
        for c in range(D):
            xx += X[i, c] * X[i, c]
        for k in range(K):
            if u[k] == 0.0:
                continue
            wu = w[i] * u[k] ** q
            den[k] += wu
            sq[k] += wu * xx
            for c in range(D):
                num[k, c] += wu * X[i, c]
    newV = V.copy()
    J = 0.0
    for k in range(K):
        if den[k] > 0.0:
            nn = 0.0
            for c in range(D):
                newV[k, c] = num[k, c] / den[k]
                nn += num[k, c] * num[k, c]
            J += sq[k] - nn / den[k]
    return newV, J
