"""Figures for bench and scaling reports (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from wsmquant.metrics import BenchSummary  # noqa: E402


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _series(summaries, image, value):
    out: dict[str, list[tuple[int, float]]] = {}
    for s in summaries:
        if s.image == image:
            out.setdefault(s.method, []).append((s.K, value(s)))
    return {m: sorted(pts) for m, pts in out.items()}


def _line_figure(summaries, image, value, ylabel, logy=False):
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, pts in _series(summaries, image, value).items():
        ks, ys = zip(*pts)
        ax.plot(ks, ys, marker="o", label=method)
    ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("K")
    ax.set_ylabel(ylabel)
    ax.set_title(image)
    ax.legend(fontsize="small", ncol=2)
    ax.grid(alpha=0.3)
    return fig


def bench_figures(summaries: list[BenchSummary], directory) -> dict[str, Path]:
    """One MSE-vs-K and one time-vs-K figure per image."""
    directory = Path(directory)
    paths = {}
    for image in dict.fromkeys(s.image for s in summaries):
        fig = _line_figure(summaries, image, lambda s: s.mse_mean, "mean MSE")
        paths[f"mse_{image}"] = _save(fig, directory / f"{image}_mse.png")
        fig = _line_figure(summaries, image, lambda s: s.time_mean_ms, "mean time (ms)", logy=True)
        paths[f"time_{image}"] = _save(fig, directory / f"{image}_time.png")
    return paths


def scaling_figure(rows: list[dict], path, title: str = "") -> Path:
    ks = [r["K"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, [r["elapsed_ms"] for r in rows], marker=".", color="tab:blue")
    ax.set_xlabel("K")
    ax.set_ylabel("time (ms)", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(ks, [r["distance_evals"] for r in rows], marker=".", color="tab:orange")
    ax2.set_ylabel("distance evaluations", color="tab:orange")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, Path(path))
