"""Modified minmax: farthest-point seeding under a channel-weighted metric."""

from __future__ import annotations

import time

import numpy as np

from wsmquant import _kernels
from wsmquant.cluster_core import KRangeError, Palette, RunReport, make_rng
from wsmquant.histogram import ColorHistogram

CHANNEL_WEIGHTS = np.array([0.5, 1.0, 0.25])


def maximin_indices(hist: ColorHistogram, K: int, first: int) -> np.ndarray:
    return _kernels.maximin(hist.colors, K, first, CHANNEL_WEIGHTS)


def mmm(hist: ColorHistogram, K: int, seed=0) -> tuple[Palette, RunReport]:
    """Maximin centers, then one assignment pass and a pixel-mean update."""
    n = len(hist)
    if not 1 <= K <= n:
        raise KRangeError(f"K={K} must be between 1 and the {n} distinct colors")
    t0 = time.perf_counter()
    first = int(make_rng(seed).integers(0, n))
    idx = maximin_indices(hist, K, first)
    centers = hist.colors[idx]
    memb = _kernels.assign_weighted_metric(hist.colors, centers, CHANNEL_WEIGHTS)
    w = hist.counts.astype(np.float64)
    wsum = np.bincount(memb, weights=w, minlength=K)
    new = np.stack(
        [np.bincount(memb, weights=w * hist.colors[:, c], minlength=K) for c in range(3)], axis=1
    ) / wsum[:, None]
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = RunReport("mmm", K, int(seed), 1, elapsed_ms=elapsed, distance_evals=2 * n * K)
    return Palette(new), report
