"""Experiment grid: images x methods x K x seeded runs, with CSV reports."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wsmquant.cluster_core import RUN_FIELDS, RunReport, weighted_sse
from wsmquant.cluster_core import assign_naive as _assign_naive
from wsmquant.histogram import build_histogram
from wsmquant.imageio import PPMError, RgbImage, load_ppm, map_pixels
from wsmquant.methods import DETERMINISTIC, METHODS, MethodParams, run_method
from wsmquant.metrics import SUMMARY_FIELDS, BenchSummary, mean_ranks, mse

log = logging.getLogger(__name__)

THREADS_ENV = "WSMQUANT_THREADS"
DEFAULT_K = (32, 64, 128, 256)


class ConfigError(ValueError):
    pass


class CellError(RuntimeError):
    def __init__(self, cell, cause):
        super().__init__(f"cell {cell} failed: {cause}")
        self.cell = cell
        self.cause = cause


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class BenchConfig:
    images: list[str]
    methods: list[str]
    K_values: list[int] = field(default_factory=lambda: list(DEFAULT_K))
    runs: int = 100
    base_seed: int = 0
    output: str = "bench_runs.csv"
    params: MethodParams = field(default_factory=MethodParams)
    threads: int = field(default_factory=default_threads)
    serial_timing: bool = False
    plots: str | None = None

    def __post_init__(self):
        if not self.images:
            raise ConfigError("no images configured")
        if not self.methods:
            raise ConfigError("no methods configured")
        if not self.K_values:
            raise ConfigError("no K values configured")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods: {', '.join(unknown)}")
        if any(k < 1 for k in self.K_values):
            raise ConfigError("K values must be positive")

    @property
    def summary_path(self) -> Path:
        p = Path(self.output)
        return p.with_name(p.stem + "_summary.csv")

    @property
    def ranks_path(self) -> Path:
        p = Path(self.output)
        return p.with_name(p.stem + "_ranks.csv")


_PARAM_KEYS = {f for f in MethodParams.__dataclass_fields__}


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def config_from_mapping(values: dict) -> BenchConfig:
    """Build a config from flat ``key -> value`` strings (file and CLI share this)."""
    kw: dict = {}
    params: dict = {}
    for raw_key, value in values.items():
        key = raw_key.strip().lower().replace("-", "_")
        if value is None:
            continue
        if key in _PARAM_KEYS:
            params[key] = value
        elif key == "images":
            kw["images"] = _split_list(value) if isinstance(value, str) else list(value)
        elif key == "methods":
            kw["methods"] = _split_list(value) if isinstance(value, str) else list(value)
        elif key == "k_values":
            items = _split_list(value) if isinstance(value, str) else list(value)
            kw["K_values"] = [int(v) for v in items]
        elif key in ("runs", "base_seed", "threads"):
            kw[key] = int(value)
        elif key == "serial_timing":
            kw[key] = str(value).strip().lower() in ("1", "true", "yes", "on")
        elif key in ("output", "plots"):
            kw[key] = str(value)
        else:
            raise ConfigError(f"unknown config key {raw_key!r}")
    try:
        kw["params"] = MethodParams().updated(**params)
        return BenchConfig(**kw)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def read_config_text(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[bench]\n" + text)
    return dict(parser["bench"])


def load_config(path, overrides: dict | None = None) -> BenchConfig:
    values = read_config_text(Path(path).read_text())
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(values)


@dataclass
class CellResult:
    image: str
    method: str
    K: int
    reports: list[RunReport]
    summary: BenchSummary


def _run_cell(image_name: str, image: RgbImage, hist, method: str, K: int,
              cfg: BenchConfig) -> CellResult:
    reports = []
    for r in range(cfg.runs):
        seed = cfg.base_seed + r
        palette, report = run_method(method, image, K, seed, cfg.params)
        report.mse = mse(image, map_pixels(image, palette))
        memb = _assign_naive(hist, palette)
        report.sse = weighted_sse(hist, palette, memb)
        report.trace = None
        reports.append(report)
    summary = BenchSummary.from_runs(
        method, K, image_name,
        [rep.mse for rep in reports],
        [rep.elapsed_ms for rep in reports],
        [rep.iterations for rep in reports],
    )
    log.info("%s %s K=%d mse=%.3f", image_name, method, K, summary.mse_mean)
    return CellResult(image_name, method, K, reports, summary)


def warm_up(method: str, params: MethodParams | None = None) -> None:
    """Run ``method`` once on a tiny image so JIT compilation is not timed."""
    rng = np.random.default_rng(0)
    tiny = RgbImage(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
    run_method(method, tiny, 2, 0, params)


def image_label(path) -> str:
    return Path(path).stem


def run_bench(cfg: BenchConfig) -> list[CellResult]:
    """Execute the whole grid; raises :class:`CellError` naming the first failure."""
    loaded = {}
    for path in cfg.images:
        try:
            img = load_ppm(path)
        except (OSError, PPMError) as exc:
            raise CellError((path, "*", "*"), exc) from exc
        loaded[path] = (img, build_histogram(img))
    for method in cfg.methods:
        warm_up(method, cfg.params)
    cells = [(p, m, K) for p in cfg.images for m in cfg.methods for K in cfg.K_values]

    def work(cell):
        path, method, K = cell
        img, hist = loaded[path]
        try:
            return _run_cell(image_label(path), img, hist, method, K, cfg)
        except Exception as exc:  # noqa: BLE001 - reported with the cell name
            raise CellError((image_label(path), method, K), exc) from exc

    if cfg.threads > 1 and not cfg.serial_timing:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(work, cells))
    return [work(c) for c in cells]


def runs_csv(results: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["image"] + RUN_FIELDS)
    for res in results:
        for rep in res.reports:
            w.writerow([res.image] + rep.csv_row())
    return buf.getvalue()


def summary_csv(summaries: list[BenchSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for s in summaries:
        w.writerow(s.csv_row())
    return buf.getvalue()


def parse_summary_csv(text: str) -> list[BenchSummary]:
    return [BenchSummary.from_row(row) for row in csv.DictReader(io.StringIO(text))]


def rank_table(summaries: list[BenchSummary]) -> dict[str, dict[str, float]]:
    """Mean MSE, time, combined, and stability ranks over (image, K) cells."""
    by_cell: dict = {}
    for s in summaries:
        by_cell.setdefault((s.image, s.K), {})[s.method] = s
    mse_ranks = mean_ranks({c: {m: s.mse_mean for m, s in v.items()} for c, v in by_cell.items()})
    time_ranks = mean_ranks({c: {m: s.time_mean_ms for m, s in v.items()} for c, v in by_cell.items()})
    out = {
        m: {"mse_rank": mse_ranks[m], "time_rank": time_ranks[m],
            "mean_rank": (mse_ranks[m] + time_ranks[m]) / 2.0, "stability_rank": float("nan")}
        for m in mse_ranks
    }
    randomized = [m for m in mse_ranks if m not in DETERMINISTIC]
    if randomized:
        stab = mean_ranks({c: {m: -v[m].stability for m in randomized} for c, v in by_cell.items()})
        for m, r in stab.items():
            out[m]["stability_rank"] = r
    return out


RANK_FIELDS = ["method", "mse_rank", "time_rank", "mean_rank", "stability_rank"]


def ranks_csv(ranks: dict[str, dict[str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RANK_FIELDS)
    for m, r in ranks.items():
        row = [m] + [("" if np.isnan(r[k]) else f"{r[k]:.6g}") for k in RANK_FIELDS[1:]]
        w.writerow(row)
    return buf.getvalue()


def write_reports(cfg: BenchConfig, results: list[CellResult]) -> dict[str, Path]:
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    summaries = [r.summary for r in results]
    out.write_text(runs_csv(results))
    cfg.summary_path.write_text(summary_csv(summaries))
    cfg.ranks_path.write_text(ranks_csv(rank_table(summaries)))
    paths = {"runs": out, "summary": cfg.summary_path, "ranks": cfg.ranks_path}
    if cfg.plots:
        from wsmquant import plots

        paths.update(plots.bench_figures(summaries, cfg.plots))
    return paths


def parse_k_range(text: str) -> list[int]:
    """``"2:256"`` (inclusive), ``"2:256:2"`` or ``"2,4,8"``."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise ValueError(f"bad K range {text!r}")
        if step < 1 or lo > hi:
            raise ValueError(f"bad K range {text!r}")
        return list(range(lo, hi + 1, step))
    return [int(v) for v in _split_list(text)]


SCALING_FIELDS = ["K", "elapsed_ms", "distance_evals", "iterations"]


def run_scaling(image: RgbImage, method: str, Ks: list[int], seed: int = 0,
                params: MethodParams | None = None, repeats: int = 1) -> list[dict]:
    """Palette-generation time and distance evaluations across K.

    With ``repeats > 1`` the reported time is the median over repeats.
    """
    warm_up(method, params)
    rows = []
    for K in Ks:
        times = []
        for _ in range(repeats):
            _, report = run_method(method, image, K, seed, params)
            times.append(report.elapsed_ms)
        rows.append({"K": K, "elapsed_ms": float(np.median(times)),
                     "distance_evals": report.distance_evals, "iterations": report.iterations})
    return rows


def scaling_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCALING_FIELDS)
    for r in rows:
        w.writerow([r["K"], f"{r['elapsed_ms']:.6g}", r["distance_evals"], r["iterations"]])
    return buf.getvalue()
