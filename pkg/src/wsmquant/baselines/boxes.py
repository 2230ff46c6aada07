"""Divisive box-splitting quantizers: median cut, Wan's variance-based
method, and Wu's greedy orthogonal bipartitioning.

All three work on the 32x32x32 histogram of 5-bit cells.  Median cut and
Wan's method see only the reduced colors: every pixel in a cell counts as
the cell's midpoint, and centroids are scaled back from those.  Wu's method
keeps the exact moments of the 8-bit pixels in each cell.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from wsmquant.cluster_core import KRangeError
from wsmquant.imageio import RgbImage


@dataclass
class CellTable:
    coords: np.ndarray  # (n, 3) int 5-bit cell coordinates
    counts: np.ndarray  # (n,)
    sums: np.ndarray  # (n, 3) per-channel pixel sums
    sumsq: np.ndarray  # (n,) sum of squared norms
    outer: np.ndarray  # (n, 3, 3) sum of x x^T

    @classmethod
    def from_image(cls, image: RgbImage, exact: bool = True) -> "CellTable":
        flat = image.flat().astype(np.int64)
        cell = flat >> 3
        key = (cell[:, 0] << 10) | (cell[:, 1] << 5) | cell[:, 2]
        uniq, inv = np.unique(key, return_inverse=True)
        inv = inv.ravel()
        n = len(uniq)
        coords = np.stack([(uniq >> 10) & 31, (uniq >> 5) & 31, uniq & 31], axis=1)
        counts = np.bincount(inv, minlength=n).astype(np.float64)
        x = flat.astype(np.float64) if exact else (cell * 8 + 3.5).astype(np.float64)
        sums = np.stack([np.bincount(inv, weights=x[:, c], minlength=n) for c in range(3)], axis=1)
        outer = np.empty((n, 3, 3))
        for a in range(3):
            for b in range(a, 3):
                s = np.bincount(inv, weights=x[:, a] * x[:, b], minlength=n)
                outer[:, a, b] = s
                outer[:, b, a] = s
        sumsq = outer[:, 0, 0] + outer[:, 1, 1] + outer[:, 2, 2]
        return cls(coords, counts, sums, sumsq, outer)


@dataclass(eq=False)
class ColorBox:
    """A set of occupied cells with aggregate pixel moments."""

    cells: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    population: float
    sums: np.ndarray
    sumsq: float
    order: int

    @classmethod
    def of(cls, table: CellTable, cells: np.ndarray, order: int) -> "ColorBox":
        c = table.coords[cells]
        return cls(
            cells,
            c.min(axis=0),
            c.max(axis=0),
            float(table.counts[cells].sum()),
            table.sums[cells].sum(axis=0),
            float(table.sumsq[cells].sum()),
            order,
        )

    @property
    def splittable(self) -> bool:
        return len(self.cells) > 1

    @property
    def sse(self) -> float:
        return max(0.0, self.sumsq - float(self.sums @ self.sums) / self.population)

    @property
    def centroid(self) -> np.ndarray:
        return self.sums / self.population


def _partition(table, box, left_mask, counter):
    left = box.cells[left_mask]
    right = box.cells[~left_mask]
    return ColorBox.of(table, left, next(counter)), ColorBox.of(table, right, next(counter))


def median_split(table: CellTable, box: ColorBox, counter):
    extent = box.hi - box.lo
    axis = int(np.argmax(extent))
    coord = table.coords[box.cells, axis]
    values, (cnt,) = _grouped(coord, table.counts[box.cells])
    cum = np.cumsum(cnt)
    half = box.population / 2.0
    pos = int(np.searchsorted(cum, half))
    if pos >= len(values) - 1:
        pos = len(values) - 2
    return _partition(table, box, coord <= values[pos], counter)


def _best_threshold(values, counts, sums, sumsq):
    """Cut between sorted 1-D groups minimizing the summed two-sided SSE.

    ``values`` are ascending group keys; the other arrays are per-group
    moments.  Returns the index of the last group on the left side and the
    resulting SSE, or ``(None, inf)`` when there is only one group.
    """
    if len(values) < 2:
        return None, np.inf
    n_l = np.cumsum(counts)[:-1]
    s_l = np.cumsum(sums, axis=0)[:-1]
    q_l = np.cumsum(sumsq)[:-1]
    n_t = counts.sum()
    s_t = sums.sum(axis=0)
    q_t = sumsq.sum()
    n_r = n_t - n_l
    s_r = s_t - s_l
    q_r = q_t - q_l
    if s_l.ndim == 1:
        e_l = q_l - s_l**2 / n_l
        e_r = q_r - s_r**2 / n_r
    else:
        e_l = q_l - np.sum(s_l**2, axis=1) / n_l
        e_r = q_r - np.sum(s_r**2, axis=1) / n_r
    total = e_l + e_r
    best = int(np.argmin(total))
    return best, float(total[best])


def _grouped(keys, *arrays):
    values, inv = np.unique(keys, return_inverse=True)
    inv = inv.ravel()
    out = []
    for arr in arrays:
        if arr.ndim == 1:
            out.append(np.bincount(inv, weights=arr, minlength=len(values)))
        else:
            out.append(
                np.stack(
                    [np.bincount(inv, weights=arr[:, c], minlength=len(values)) for c in range(arr.shape[1])],
                    axis=1,
                )
            )
    return values, out


def wu_split(table: CellTable, box: ColorBox, counter):
    """Axis-aligned cut minimizing the summed SSE of both halves."""
    cells = box.cells
    best = (np.inf, None, None)
    for axis in range(3):
        coord = table.coords[cells, axis]
        values, (cnt, sm, sq) = _grouped(coord, table.counts[cells], table.sums[cells], table.sumsq[cells])
        idx, err = _best_threshold(values, cnt, sm, sq)
        if idx is not None and err < best[0]:
            best = (err, axis, values[idx])
    _, axis, cut = best
    return _partition(table, box, table.coords[cells, axis] <= cut, counter)


def principal_axis(table: CellTable, box: ColorBox) -> np.ndarray:
    cells = box.cells
    n = box.population
    mean = box.sums / n
    cov = table.outer[cells].sum(axis=0) / n - np.outer(mean, mean)
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    # canonical sign for reproducibility
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return axis


def wan_split(table: CellTable, box: ColorBox, counter, axis_mode: str = "coordinate"):
    """Cut minimizing the marginal (projected 1-D) squared error.

    With ``axis_mode="coordinate"`` the cut is perpendicular to the color axis
    of largest variance, so boxes stay boxes; ``"principal"`` projects onto
    the top eigenvector of the box covariance instead.
    """
    cells = box.cells
    if axis_mode == "principal":
        direction = principal_axis(table, box)
    else:
        n = box.population
        mean = box.sums / n
        var = np.einsum("nii->i", table.outer[cells]) / n - mean**2
        var[box.hi == box.lo] = -1.0
        direction = np.eye(3)[int(np.argmax(var))]
    cnt = table.counts[cells]
    proj_sum = table.sums[cells] @ direction
    proj_sq = np.einsum("i,nij,j->n", direction, table.outer[cells], direction)
    key = proj_sum / cnt
    values, (g_cnt, g_sum, g_sq) = _grouped(key, cnt, proj_sum, proj_sq)
    idx, _ = _best_threshold(values, g_cnt, g_sum, g_sq)
    if idx is None:
        return wu_split(table, box, counter)
    return _partition(table, box, key <= values[idx], counter)


def _divide(table: CellTable, K: int, select, split) -> np.ndarray:
    if K < 1:
        raise KRangeError("K must be at least 1")
    counter = itertools.count()
    boxes = [ColorBox.of(table, np.arange(len(table.counts)), next(counter))]
    while len(boxes) < K:
        candidates = [b for b in boxes if b.splittable]
        if not candidates:
            break
        target = max(candidates, key=lambda b: (select(b), -b.order))
        boxes.remove(target)
        boxes.extend(split(table, target, counter))
    boxes.sort(key=lambda b: b.order)
    return np.array([b.centroid for b in boxes])


def median_cut(image: RgbImage, K: int) -> np.ndarray:
    """Split the most populous box at the population median of its longest side."""
    return _divide(CellTable.from_image(image, exact=False), K, lambda b: b.population, median_split)


def wan_quantize(image: RgbImage, K: int, axis_mode: str = "coordinate") -> np.ndarray:
    """Split the box of largest squared error at the marginal-error optimum."""
    if axis_mode not in ("coordinate", "principal"):
        raise ValueError(f"unknown axis mode {axis_mode!r}")
    table = CellTable.from_image(image, exact=False)
    return _divide(table, K, lambda b: b.sse,
                   lambda t, b, c: wan_split(t, b, c, axis_mode))


def wu_quantize(image: RgbImage, K: int) -> np.ndarray:
    """Split the box of largest squared error by the best axis-aligned cut."""
    return _divide(CellTable.from_image(image, exact=True), K, lambda b: b.sse, wu_split)
