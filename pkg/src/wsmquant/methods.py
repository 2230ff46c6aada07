"""Uniform entry point for every quantizer: ``(image, K, seed, params) -> (Palette, RunReport)``.

The reported time covers palette generation only, including any histogram
construction the method needs, and excludes pixel mapping.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, fields, replace

from wsmquant.baselines import boxes, fastkm, fuzzy
from wsmquant.baselines.mmm import mmm
from wsmquant.cluster_core import KRangeError, Palette, RunReport, Termination, run_km_full, run_wsm
from wsmquant.histogram import build_histogram
from wsmquant.imageio import RgbImage


@dataclass(frozen=True)
class MethodParams:
    max_iters: int = 10
    epsilon: float = 1e-4
    k_prime: int = 8
    i_prime: int = 10
    theta: float = 1.0
    q: float = 2.0
    delta: float = 0.4
    fuzzy_iters: int = 10
    full_pixels: bool = False

    def fixed(self) -> Termination:
        return Termination.fixed(self.max_iters)

    def convergent(self) -> Termination:
        return Termination.convergent(self.epsilon)

    def updated(self, **changes) -> "MethodParams":
        names = {f.name: f.type for f in fields(self)}
        clean = {}
        for k, v in changes.items():
            if k not in names:
                raise KeyError(f"unknown method parameter {k!r}")
            clean[k] = _coerce(getattr(self, k), v)
        return replace(self, **clean)


def _coerce(current, value):
    if isinstance(value, str):
        if isinstance(current, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return type(current)(value)
    return value


def _boxes(fn):
    def run(image, K, seed, params):
        return Palette(fn(image, K)), RunReport("", K, seed, 1)

    return run


def _fuzzy_data(image, params):
    return image if params.full_pixels else build_histogram(image)


METHODS = {
    "mc": _boxes(boxes.median_cut),
    "wan": _boxes(boxes.wan_quantize),
    "wu": _boxes(boxes.wu_quantize),
    "mmm": lambda image, K, seed, p: mmm(build_histogram(image), K, seed),
    "fcm": lambda image, K, seed, p: fuzzy.fcm(_fuzzy_data(image, p), K, p.q, p.fuzzy_iters, seed),
    "pim": lambda image, K, seed, p: fuzzy.pim(
        _fuzzy_data(image, p), K, p.q, p.delta, p.fuzzy_iters, seed
    ),
    "km": lambda image, K, seed, p: run_km_full(image, K, p.fixed(), seed),
    "km-c": lambda image, K, seed, p: run_km_full(image, K, p.convergent(), seed),
    "fkm": lambda image, K, seed, p: fastkm.fkm(image, K, p.k_prime, p.fixed(), seed),
    "fkm-c": lambda image, K, seed, p: fastkm.fkm(image, K, p.k_prime, p.convergent(), seed),
    "skm": lambda image, K, seed, p: fastkm.skm(image, K, p.i_prime, p.theta, p.convergent(), seed),
    "wsm": lambda image, K, seed, p: run_wsm(build_histogram(image), K, p.fixed(), seed),
    "wsm-c": lambda image, K, seed, p: run_wsm(build_histogram(image), K, p.convergent(), seed),
}

DETERMINISTIC = {"mc", "wan", "wu"}
RANDOMIZED = [m for m in METHODS if m not in DETERMINISTIC]


class UnknownMethodError(KeyError):
    pass


def run_method(method: str, image: RgbImage, K: int, seed: int = 0,
               params: MethodParams | None = None) -> tuple[Palette, RunReport]:
    """Run one quantizer and time its palette generation."""
    if method not in METHODS:
        raise UnknownMethodError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if K < 1:
        raise KRangeError("K must be at least 1")
    params = params or MethodParams()
    t0 = time.perf_counter()
    palette, report = METHODS[method](image, K, seed, params)
    report.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    report.method = method
    report.seed = int(seed)
    return palette, report
