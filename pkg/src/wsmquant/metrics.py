"""Distortion measures and benchmark statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wsmquant.imageio import RgbImage


def mse(original: RgbImage, quantized: RgbImage) -> float:
    """Mean over pixels of the squared RGB error (channels summed)."""
    if original.pixels.shape != quantized.pixels.shape:
        raise ValueError(
            f"dimension mismatch: {original.pixels.shape} vs {quantized.pixels.shape}"
        )
    d = original.pixels.astype(np.int64) - quantized.pixels.astype(np.int64)
    return float(np.sum(d * d)) / original.n_pixels


def psnr(mse_value: float) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for a perfect reconstruction."""
    if mse_value < 0:
        raise ValueError("MSE cannot be negative")
    if mse_value == 0:
        return math.inf
    return 20.0 * math.log10(255.0 / math.sqrt(mse_value))


def stability(mu: float, sigma: float) -> float:
    """Percentage ``100 * (1 - sigma / mu)``."""
    if not mu > 0:
        raise ValueError("mean must be positive")
    if sigma < 0:
        raise ValueError("standard deviation cannot be negative")
    return 100.0 * (1.0 - sigma / mu)


def average_ranks(scores) -> np.ndarray:
    """Ranks 1..M ascending by score; tied scores share their average rank."""
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def mean_ranks(table: dict) -> dict:
    """Mean per-method rank over cells.

    ``table`` maps a cell key, e.g. ``(image, K)``, to ``{method: score}``.
    Every cell must score the same set of methods.
    """
    if not table:
        raise ValueError("no cells to rank")
    methods = None
    totals: dict[str, float] = {}
    for cell, scores in table.items():
        if methods is None:
            methods = list(scores)
            totals = {m: 0.0 for m in methods}
        missing = set(methods) ^ set(scores)
        if missing:
            raise ValueError(f"cell {cell!r} is missing scores for {sorted(missing)}")
        r = average_ranks([scores[m] for m in methods])
        for m, v in zip(methods, r):
            totals[m] += v
    return {m: totals[m] / len(table) for m in methods}


SUMMARY_FIELDS = [
    "method", "K", "image", "runs", "mse_mean", "mse_std", "psnr_mean",
    "time_mean_ms", "stability", "iterations_mean",
]


@dataclass(frozen=True)
class BenchSummary:
    method: str
    K: int
    image: str
    runs: int
    mse_mean: float
    mse_std: float
    psnr_mean: float
    time_mean_ms: float
    stability: float
    iterations_mean: float

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.mse_std < 0:
            raise ValueError("standard deviation cannot be negative")

    @classmethod
    def from_runs(cls, method, K, image, mses, times_ms, iterations) -> "BenchSummary":
        m = np.asarray(mses, dtype=np.float64)
        mu = float(m.mean())
        sigma = float(m.std())
        stab = stability(mu, sigma) if mu > 0 else 100.0
        return cls(
            method, int(K), str(image), len(m), mu, sigma,
            float(np.mean([psnr(v) for v in m])),
            float(np.mean(times_ms)), stab, float(np.mean(iterations)),
        )

    def csv_row(self) -> list[str]:
        return [
            self.method, str(self.K), self.image, str(self.runs),
            _fmt(self.mse_mean), _fmt(self.mse_std), _fmt(self.psnr_mean),
            _fmt(self.time_mean_ms), _fmt(self.stability), _fmt(self.iterations_mean),
        ]

    @classmethod
    def from_row(cls, row: dict) -> "BenchSummary":
        return cls(
            row["method"], int(row["K"]), row["image"], int(row["runs"]),
            float(row["mse_mean"]), float(row["mse_std"]), float(row["psnr_mean"]),
            float(row["time_mean_ms"]), float(row["stability"]), float(row["iterations_mean"]),
        )


def _fmt(x: float) -> str:
    return f"{x:.6g}"
