"""Approximate k-means accelerators: finite-state (FKM) and stable-flags (SKM)."""

from __future__ import annotations

import time

import numpy as np

from wsmquant import _kernels
from wsmquant.baselines._data import as_points, start_centers
from wsmquant.cluster_core import (
    FIXED,
    Palette,
    RunReport,
    Termination,
    _update,
    center_distances,
    lloyd,
    sorted_order,
)


def fkm(data, K: int, k_prime: int = 8, term: Termination = Termination(), seed=0,
        init=None, trace=False) -> tuple[Palette, RunReport]:
    """After a full first pass, each point searches only the ``k_prime``
    centers nearest to its previous center (that center included)."""
    if not 1 <= k_prime:
        raise ValueError("k_prime must be at least 1")
    t0 = time.perf_counter()
    pts = as_points(data)
    C0 = start_centers(pts, K, seed, init)
    kp = min(k_prime, K)

    def assign(X, C, prev):
        order = sorted_order(center_distances(C))
        return _kernels.assign_neighbors(X, C, order, prev, kp)

    C, _, history, evals, steps = lloyd(pts.X, pts.counts, pts.weights, C0, term, assign, trace)
    elapsed = (time.perf_counter() - t0) * 1000.0
    name = "fkm" if term.mode == FIXED else "fkm-c"
    report = RunReport(name, K, int(seed), len(history), history[-1], elapsed_ms=elapsed,
                       distance_evals=evals, sse_history=history, trace=steps)
    return Palette(C), report


def skm(data, K: int, i_prime: int = 10, theta: float = 1.0,
        term: Termination = Termination.convergent(), seed=0, init=None,
        trace=False) -> tuple[Palette, RunReport]:
    """Stable-flags k-means.

    The first ``i_prime`` iterations are plain k-means.  From then on a
    center whose squared movement in the last iteration was at most
    ``theta`` is frozen, points assigned to frozen centers are skipped, and
    only active points are reassigned and only unfrozen centers recomputed.
    ``report.extras["stable"]`` is the final stability mask.
    """
    if i_prime < 1:
        raise ValueError("i_prime must be at least 1")
    if theta < 0:
        raise ValueError("theta must be non-negative")
    t0 = time.perf_counter()
    pts = as_points(data)
    X = pts.X
    C = start_centers(pts, K, seed, init)
    stable = np.zeros(K, dtype=bool)
    memb = None
    history: list[float] = []
    steps = [] if trace else None
    evals = 0
    it = 0
    while True:
        it += 1
        if it <= i_prime or memb is None:
            memb, mind, ev = _kernels.assign_naive(X, C)
        else:
            active = ~stable[memb]
            memb, mind, ev = _kernels.assign_active(X, C, memb, active)
        evals += int(ev)
        history.append(float(np.dot(pts.weights, mind)))
        new = _update(X, pts.counts, memb, C)
        if it > i_prime:
            new[stable] = C[stable]
        moved = np.sum((new - C) ** 2, axis=1)
        if it > i_prime:
            stable |= moved <= theta
        else:
            stable = moved <= theta
        C = new
        if trace:
            steps.append((memb.copy(), C.copy()))
        if term.done(it, history):
            break
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = RunReport("skm", K, int(seed), it, history[-1], elapsed_ms=elapsed,
                       distance_evals=evals, sse_history=history, trace=steps)
    report.extras = {"stable": stable.copy()}
    return Palette(C), report
