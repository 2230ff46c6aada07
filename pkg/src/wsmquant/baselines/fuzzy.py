"""Fuzzy c-means and its partition-index variant.

Memberships are never stored: each point's membership row is computed,
folded into the prototype sums, and discarded, so memory stays linear in
the number of prototypes.
"""

from __future__ import annotations

import time

import numpy as np

from wsmquant import _kernels
from wsmquant.baselines._data import as_points, start_centers
from wsmquant.cluster_core import Palette, RunReport, center_distances

PIM_FLOOR = 1e-12


def fuzzy_memberships(points, prototypes, q: float = 2.0, alpha: float = 0.0,
                      floor: float = PIM_FLOOR) -> np.ndarray:
    """Full ``(n, K)`` membership matrix, for inspection and tests."""
    X = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    V = np.ascontiguousarray(prototypes, dtype=np.float64).reshape(-1, 3)
    U = np.empty((len(X), len(V)))
    for i in range(len(X)):
        _kernels.fuzzy_memberships_row(X, i, V, q, alpha, floor, U[i])
    return U


def objective(points, weights, prototypes, U, q: float = 2.0) -> float:
    """J_q = sum_i sum_k w_i u_ik^q |x_i - v_k|^2."""
    X = np.asarray(points, dtype=np.float64)
    V = np.asarray(prototypes, dtype=np.float64)
    d = np.sum((X[:, None, :] - V[None, :, :]) ** 2, axis=2)
    return float(np.sum(np.asarray(weights)[:, None] * U**q * d))


def pim_alpha(prototypes, delta: float) -> float:
    V = np.asarray(prototypes, dtype=np.float64)
    if len(V) < 2 or delta == 0.0:
        return 0.0
    d = center_distances(V)
    np.fill_diagonal(d, np.inf)
    return float(delta * d.min())


def _run(data, K, q, delta, iters, seed, init, trace, name):
    if not q > 1:
        raise ValueError("fuzziness q must exceed 1")
    if iters < 1:
        raise ValueError("iters must be positive")
    t0 = time.perf_counter()
    pts = as_points(data)
    V = start_centers(pts, K, seed, init)
    history = []
    steps = [] if trace else None
    for _ in range(iters):
        alpha = pim_alpha(V, delta) if delta is not None else 0.0
        V, J = _kernels.fuzzy_step(pts.X, pts.weights, V, float(q), alpha, PIM_FLOOR)
        history.append(float(J))
        if trace:
            steps.append((alpha, V.copy()))
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = RunReport(name, K, int(seed), iters, history[-1], elapsed_ms=elapsed,
                       distance_evals=iters * len(pts.X) * K, sse_history=history, trace=steps)
    return Palette(V), report


def fcm(data, K: int, q: float = 2.0, iters: int = 10, seed=0, init=None, trace=False):
    """Fuzzy c-means; ``report.sse_history`` holds J_q after each iteration."""
    return _run(data, K, q, None, iters, seed, init, trace, "fcm")


def pim(data, K: int, q: float = 2.0, delta: float = 0.4, iters: int = 10, seed=0,
        init=None, trace=False):
    """Fuzzy c-means with partition-index maximization.

    ``alpha = delta * min_{i != j} |v_i - v_j|^2`` is recomputed from the
    current prototypes every iteration and subtracted from the unsquared
    point-prototype distances in the membership update; terms that drop to
    zero or below are clamped to ``PIM_FLOOR``.  ``report.sse_history``
    holds the plain J_q of each iteration.
    """
    if not 0.0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 0.5)")
    return _run(data, K, q, delta, iters, seed, init, trace, "pim")
