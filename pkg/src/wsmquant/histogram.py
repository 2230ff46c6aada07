"""Unique-color extraction with frequency weights.

Only the distinct colors of an image are clustered; each one carries the
fraction of pixels that have it.  Distinct colors are found with a chained
hash table keyed by a universal hash ``(a1*r + a2*g + a3*b) mod m``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from wsmquant import _kernels
from wsmquant.imageio import RgbImage, _unpack


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class UniversalHashParams:
    m: int
    a: tuple[int, int, int]

    def __post_init__(self):
        if not is_prime(self.m):
            raise ValueError(f"hash modulus {self.m} is not prime")
        a = tuple(int(v) for v in self.a)
        if len(a) != 3 or any(v < 0 or v >= self.m for v in a):
            raise ValueError(f"coefficients {self.a} must lie in [0, {self.m})")
        object.__setattr__(self, "a", a)

    @classmethod
    def for_image(cls, width: int, height: int, seed=0) -> "UniversalHashParams":
        """Table size for a load factor of at most 0.5 at W*H/4 expected colors."""
        expected = max(1, (width * height) // 4)
        m = next_prime(2 * expected)
        rng = np.random.default_rng(seed)
        a = tuple(int(v) for v in rng.integers(0, m, size=3))
        return cls(m, a)


def universal_hash(color, params: UniversalHashParams) -> int:
    r, g, b = (int(c) for c in color)
    a1, a2, a3 = params.a
    return (a1 * r + a2 * g + a3 * b) % params.m


def hash_colors(colors, params: UniversalHashParams) -> np.ndarray:
    """Vectorized :func:`universal_hash` over an ``(n, 3)`` array."""
    c = np.asarray(colors, dtype=np.int64).reshape(-1, 3)
    a = np.asarray(params.a, dtype=np.int64)
    return (c @ a) % params.m


@dataclass(frozen=True)
class ColorHistogram:
    """Distinct colors of an image in first-occurrence order.

    ``colors`` is ``(N', 3)`` float64, ``counts`` the pixel count per color and
    ``weights`` the counts normalized by ``total_pixels``.
    """

    colors: np.ndarray
    counts: np.ndarray
    total_pixels: int
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        colors = np.ascontiguousarray(self.colors, dtype=np.float64).reshape(-1, 3)
        counts = np.ascontiguousarray(self.counts, dtype=np.int64).ravel()
        if len(colors) != len(counts) or len(colors) == 0:
            raise ValueError("colors and counts must be non-empty and aligned")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        if int(counts.sum()) != self.total_pixels:
            raise ValueError("counts must sum to total_pixels")
        weights = counts / float(self.total_pixels)
        for arr in (colors, counts, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.counts)

    def as_dict(self) -> dict[tuple[int, int, int], int]:
        return {
            tuple(int(v) for v in c): int(n) for c, n in zip(self.colors, self.counts)
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "g", "b", "count"])
        for c, n in zip(self.colors.astype(np.int64), self.counts):
            w.writerow([c[0], c[1], c[2], n])
        return buf.getvalue()


def build_histogram_with_inverse(image: RgbImage, params: UniversalHashParams | None = None):
    """Histogram plus, for every pixel, the index of its histogram entry."""
    if params is None:
        params = UniversalHashParams.for_image(image.width, image.height)
    a0, a1, a2 = params.a
    keys, counts, inverse, _ = _kernels.build_color_table(image.flat(), a0, a1, a2, params.m)
    colors = _unpack(keys).astype(np.float64)
    return ColorHistogram(colors, counts, image.n_pixels), inverse


def build_histogram(image: RgbImage, params: UniversalHashParams | None = None) -> ColorHistogram:
    return build_histogram_with_inverse(image, params)[0]


def histogram_from_points(points, weights=None) -> ColorHistogram:
    """Wrap arbitrary (possibly non-integer) points as a histogram.

    ``weights`` are treated as integer multiplicities; unit weights when absent.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if weights is None:
        counts = np.ones(len(pts), dtype=np.int64)
    else:
        counts = np.asarray(weights, dtype=np.int64)
    return ColorHistogram(pts, counts, int(counts.sum()))
