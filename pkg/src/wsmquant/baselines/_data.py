"""Uniform view of clustering input: a histogram or every pixel of an image."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wsmquant.cluster_core import Palette, init_centers, init_centers_from_pixels
from wsmquant.histogram import ColorHistogram
from wsmquant.imageio import RgbImage


@dataclass
class Points:
    X: np.ndarray
    counts: np.ndarray  # multiplicities, used for means
    weights: np.ndarray  # counts / total, used for SSE and objectives
    source: object

    def initial(self, K: int, seed) -> np.ndarray:
        if isinstance(self.source, RgbImage):
            return init_centers_from_pixels(self.source, K, seed).centers
        return init_centers(self.source, K, seed).centers


def as_points(data) -> Points:
    if isinstance(data, ColorHistogram):
        return Points(data.colors, data.counts.astype(np.float64), data.weights, data)
    if isinstance(data, RgbImage):
        X = data.flat().astype(np.float64)
        n = len(X)
        return Points(X, np.ones(n), np.full(n, 1.0 / n), data)
    raise TypeError(f"expected ColorHistogram or RgbImage, got {type(data).__name__}")


def start_centers(pts: Points, K: int, seed, init) -> np.ndarray:
    if init is not None:
        c = np.asarray(getattr(init, "centers", init), dtype=np.float64)
        if len(c) != K:
            raise ValueError("initial palette size does not match K")
        return c.copy()
    return np.array(pts.initial(K, seed))


__all__ = ["Points", "as_points", "start_centers", "Palette"]
