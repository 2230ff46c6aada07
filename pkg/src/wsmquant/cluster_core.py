"""Batch k-means over weighted points, with exact sort-means pruning.

The conventional algorithm runs over every pixel.  The weighted variant runs
over the distinct colors of an image, each weighted by its pixel frequency;
with matching initial centers both produce the same center sequence.  The
sort-means assignment visits candidate centers in increasing distance from
a point's previous center and stops as soon as the triangle inequality rules
out every remaining one.

Ties between equidistant centers always go to the lowest index.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from wsmquant import _kernels
from wsmquant.histogram import ColorHistogram, build_histogram_with_inverse
from wsmquant.imageio import RgbImage

FIXED = "fixed"
CONVERGENT = "convergent"


class KRangeError(ValueError):
    """K is outside [1, number of distinct colors]."""


@dataclass(frozen=True, eq=False)
class Palette:
    """K cluster centers in real-valued RGB space."""

    centers: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64).reshape(-1, 3)
        if len(c) < 1:
            raise ValueError("palette needs at least one center")
        if not np.all(np.isfinite(c)):
            raise ValueError("palette centers must be finite")
        if c.min() < -1e-9 or c.max() > 255 + 1e-9:
            raise ValueError("palette centers must lie in [0, 255]^3")
        c = np.clip(c, 0.0, 255.0)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    def __len__(self):
        return len(self.centers)

    def __eq__(self, other):
        if not isinstance(other, Palette):
            return NotImplemented
        return bool(np.array_equal(self.centers, other.centers))

    def __hash__(self):
        return hash(self.centers.tobytes())

    @property
    def K(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class Termination:
    mode: str = FIXED
    max_iters: int = 10
    epsilon: float = 1e-4
    hard_cap: int = 1000

    def __post_init__(self):
        if self.mode not in (FIXED, CONVERGENT):
            raise ValueError(f"unknown termination mode {self.mode!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.mode == CONVERGENT and not self.epsilon > 0:
            raise ValueError("epsilon must be positive in convergent mode")

    @classmethod
    def fixed(cls, max_iters: int = 10) -> "Termination":
        return cls(FIXED, max_iters=max_iters)

    @classmethod
    def convergent(cls, epsilon: float = 1e-4, hard_cap: int = 1000) -> "Termination":
        return cls(CONVERGENT, epsilon=epsilon, hard_cap=hard_cap)

    def done(self, iteration: int, sse_history: list[float]) -> bool:
        if self.mode == FIXED:
            return iteration >= self.max_iters
        if iteration >= self.hard_cap:
            return True
        sse = sse_history[-1]
        if sse == 0.0:
            return True
        if len(sse_history) < 2:
            return False
        return (sse_history[-2] - sse) / sse <= self.epsilon


RUN_FIELDS = ["method", "K", "seed", "iterations", "sse", "mse", "elapsed_ms", "distance_evals"]


@dataclass
class RunReport:
    method: str
    K: int
    seed: int
    iterations: int = 0
    sse: float = float("nan")
    mse: float = float("nan")
    elapsed_ms: float = 0.0
    distance_evals: int = 0
    sse_history: list[float] = field(default_factory=list)
    trace: list | None = None
    extras: dict = field(default_factory=dict)

    def csv_row(self) -> list[str]:
        return [
            self.method,
            str(self.K),
            str(self.seed),
            str(self.iterations),
            f"{self.sse:.6g}",
            f"{self.mse:.6g}",
            f"{self.elapsed_ms:.6g}",
            str(self.distance_evals),
        ]


@dataclass
class ClusterState:
    """Working set of one sort-means pass."""

    memberships: np.ndarray
    center_dists: np.ndarray
    sorted_order: np.ndarray

    @classmethod
    def from_centers(cls, centers, memberships) -> "ClusterState":
        c = getattr(centers, "centers", centers)
        d = center_distances(c)
        return cls(np.asarray(memberships, dtype=np.int64), d, sorted_order(d))


def center_distances(centers) -> np.ndarray:
    c = np.asarray(centers, dtype=np.float64)
    diff = c[:, None, :] - c[None, :, :]
    d = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d, 0.0)
    return d


def sorted_order(center_dists: np.ndarray) -> np.ndarray:
    """Row i lists all centers by increasing distance from center i, i first."""
    d = np.array(center_dists, dtype=np.float64)
    np.fill_diagonal(d, -1.0)
    return np.argsort(d, axis=1, kind="stable").astype(np.int64)


def partial_shuffle(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First k entries of a Fisher-Yates shuffle of range(n), in O(k)."""
    swapped: dict[int, int] = {}
    out = np.empty(k, dtype=np.int64)
    for i in range(k):
        j = int(rng.integers(i, n))
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        out[i] = vj
    return out


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_centers(hist: ColorHistogram, K: int, seed) -> Palette:
    """K distinct histogram colors drawn uniformly without replacement."""
    n = len(hist)
    if not 1 <= K <= n:
        raise KRangeError(f"K={K} must be between 1 and the {n} distinct colors")
    idx = partial_shuffle(n, K, make_rng(seed))
    return Palette(hist.colors[idx])


def init_centers_from_pixels(image: RgbImage, K: int, seed) -> Palette:
    """K random pixels, skipping pixels whose color was already drawn."""
    flat = image.flat()
    n = len(flat)
    rng = make_rng(seed)
    swapped: dict[int, int] = {}
    seen: set[tuple[int, int, int]] = set()
    chosen = []
    i = 0
    while len(chosen) < K:
        if i >= n:
            raise KRangeError(f"image has fewer than K={K} distinct colors")
        j = int(rng.integers(i, n))
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        color = tuple(int(v) for v in flat[vj])
        if color not in seen:
            seen.add(color)
            chosen.append(color)
        i += 1
    return Palette(np.array(chosen, dtype=np.float64))


def assign_naive(hist: ColorHistogram, palette: Palette) -> np.ndarray:
    memb, _, _ = _kernels.assign_naive(hist.colors, _centers(palette))
    return memb


def assign_sort_means(
    hist: ColorHistogram, palette: Palette, state: ClusterState, check: bool = False
):
    """Sort-means assignment seeded from ``state.memberships``.

    Returns the new memberships; with ``check=True`` returns
    ``(memberships, distance_evals, violations)`` where violations counts
    skipped centers that were in fact strictly closer than the previous one.
    """
    memb, _, evals, bad = _kernels.assign_sort_means(
        hist.colors,
        _centers(palette),
        state.center_dists,
        state.sorted_order,
        state.memberships,
        check,
    )
    if check:
        return memb, evals, bad
    return memb


def update_centers(
    hist: ColorHistogram, memberships, K: int | None = None, previous: Palette | None = None
) -> Palette:
    """Weighted mean of each cluster; empty clusters are re-seeded.

    An empty cluster's center moves to the point farthest from its current
    center, in index order for several empty clusters.
    """
    memberships = np.asarray(memberships, dtype=np.int64)
    if K is None:
        K = len(previous) if previous is not None else int(memberships.max()) + 1
    prev = _centers(previous) if previous is not None else np.zeros((K, 3))
    return Palette(_update(hist.colors, hist.counts.astype(np.float64), memberships, prev))


def weighted_sse(hist: ColorHistogram, palette: Palette, memberships) -> float:
    c = _centers(palette)[np.asarray(memberships, dtype=np.int64)]
    d = np.sum((hist.colors - c) ** 2, axis=1)
    return float(np.dot(hist.weights, d))


def _centers(palette) -> np.ndarray:
    return np.ascontiguousarray(getattr(palette, "centers", palette), dtype=np.float64)


def _update(X, w, memb, prev_centers) -> np.ndarray:
    K = len(prev_centers)
    wsum = np.bincount(memb, weights=w, minlength=K)
    new = np.array(prev_centers, dtype=np.float64, copy=True)
    nonempty = wsum > 0
    for c in range(X.shape[1]):
        s = np.bincount(memb, weights=w * X[:, c], minlength=K)
        new[nonempty, c] = s[nonempty] / wsum[nonempty]
    empty = np.flatnonzero(~nonempty)
    if len(empty):
        d = np.sum((X - new[memb]) ** 2, axis=1)
        for k in empty:
            i = int(np.argmax(d))
            new[k] = X[i]
            d = np.minimum(d, np.sum((X - X[i]) ** 2, axis=1))
    return new


AssignFn = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple]


def lloyd(
    X: np.ndarray,
    update_weights: np.ndarray,
    sse_weights: np.ndarray,
    centers: np.ndarray,
    term: Termination,
    assign: AssignFn | None = None,
    trace: bool = False,
):
    """Generic batch k-means loop.

    The first pass is always a full scan; later passes use ``assign(X, C,
    prev_memberships) -> (memberships, min_sqdist, evals)`` when given.
    Returns ``(centers, memberships, sse_history, evals, trace)``, where
    ``sse_history[i]`` is the SSE of the i-th assignment against the centers
    it was made with.
    """
    C = np.array(centers, dtype=np.float64, copy=True)
    memb = None
    history: list[float] = []
    steps = [] if trace else None
    evals = 0
    it = 0
    while True:
        it += 1
        if memb is None or assign is None:
            memb, mind, ev = _kernels.assign_naive(X, C)
        else:
            memb, mind, ev = assign(X, C, memb)
        evals += int(ev)
        history.append(float(np.dot(sse_weights, mind)))
        C = _update(X, update_weights, memb, C)
        if trace:
            steps.append((memb.copy(), C.copy()))
        if term.done(it, history):
            break
    return C, memb, history, evals, steps


def _sort_means_assign(X, C, prev):
    d = center_distances(C)
    memb, mind, ev, _ = _kernels.assign_sort_means(X, C, d, sorted_order(d), prev, False)
    return memb, mind, ev


def _check_k(K: int, n: int):
    if not 1 <= K <= n:
        raise KRangeError(f"K={K} must be between 1 and the {n} distinct colors")


def run_wsm(
    hist: ColorHistogram,
    K: int,
    term: Termination = Termination(),
    seed=0,
    init: Palette | None = None,
    trace: bool = False,
) -> tuple[Palette, RunReport]:
    """Weighted sort-means over a color histogram."""
    _check_k(K, len(hist))
    t0 = time.perf_counter()
    start = init if init is not None else init_centers(hist, K, seed)
    C, _, history, evals, steps = lloyd(
        hist.colors,
        hist.counts.astype(np.float64),
        hist.weights,
        _centers(start),
        term,
        _sort_means_assign,
        trace,
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    name = "wsm" if term.mode == FIXED else "wsm-c"
    report = RunReport(name, K, _seed_int(seed), len(history), history[-1], elapsed_ms=elapsed,
                       distance_evals=evals, sse_history=history, trace=steps)
    return Palette(C), report


def run_weighted_km(
    hist: ColorHistogram,
    K: int,
    term: Termination = Termination(),
    seed=0,
    init: Palette | None = None,
    trace: bool = False,
) -> tuple[Palette, RunReport]:
    """Weighted k-means with a full scan every iteration (no pruning)."""
    _check_k(K, len(hist))
    t0 = time.perf_counter()
    start = init if init is not None else init_centers(hist, K, seed)
    C, _, history, evals, steps = lloyd(
        hist.colors, hist.counts.astype(np.float64), hist.weights, _centers(start), term,
        None, trace,
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = RunReport("wkm", K, _seed_int(seed), len(history), history[-1], elapsed_ms=elapsed,
                       distance_evals=evals, sse_history=history, trace=steps)
    return Palette(C), report


def run_km_full(
    image: RgbImage,
    K: int,
    term: Termination = Termination(),
    seed=0,
    init: Palette | None = None,
    trace: bool = False,
) -> tuple[Palette, RunReport]:
    """Conventional k-means over every pixel of the image."""
    t0 = time.perf_counter()
    X = image.flat().astype(np.float64)
    start = init if init is not None else init_centers_from_pixels(image, K, seed)
    if len(start) != K:
        raise ValueError("initial palette size does not match K")
    n = len(X)
    C, _, history, evals, steps = lloyd(
        X, np.ones(n), np.full(n, 1.0 / n), _centers(start), term, None, trace
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    name = "km" if term.mode == FIXED else "km-c"
    report = RunReport(name, K, _seed_int(seed), len(history), history[-1], elapsed_ms=elapsed,
                       distance_evals=evals, sse_history=history, trace=steps)
    return Palette(C), report


def quantize_wsm(image: RgbImage, K: int, term: Termination = Termination(), seed=0):
    """Histogram construction followed by weighted sort-means, timed as one phase."""
    t0 = time.perf_counter()
    hist, _ = build_histogram_with_inverse(image)
    palette, report = run_wsm(hist, K, term, seed)
    report.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return palette, report


def _seed_int(seed) -> int:
    try:
        return int(seed)
    except (TypeError, ValueError):
        return -1
