"""Figures for result directories, benchmark tables and overlap series."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .calibration import fitting  # noqa: E402
from .emulator import OverlapSeries  # noqa: E402
from .results import FIT, load_results, read_json  # noqa: E402

plt.rcParams.update({"figure.dpi": 120, "savefig.dpi": 150, "font.size": 9, "axes.grid": True, "grid.alpha": 0.3})

_MODELS = {
    "lorentzian": fitting.lorentzian,
    "sinusoid": fitting.cosine,
    "damped_cosine": fitting.damped_cosine,
    "exponential": fitting.exponential,
    "rb": fitting.rb_decay,
}


def _fit_curve(fit: dict, x: np.ndarray):
    fn = _MODELS.get(fit.get("model"))
    if fn is None:
        return None
    params = fit["params"]
    names = fn.__code__.co_varnames[1 : fn.__code__.co_argcount]
    fine = np.linspace(np.min(x), np.max(x), 400)
    return fine, fn(fine, *(params[n] for n in names))


def plot_run(directory: Union[str, Path], path: Union[str, Path, None] = None) -> Path:
    """One figure per result directory: data along the first axis, fit overlaid."""
    directory = Path(directory)
    meta, data = load_results(directory)
    fit = read_json(directory / FIT) if (directory / FIT).exists() else {}
    averaged = meta.get("options", {}).get("averaging") == "averaged"
    grids = meta.get("grids", [])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for key, values in data.items():
        values = np.asarray(values, dtype=float)
        if fit.get("model") == "threshold":
            bins = np.linspace(values.min(), values.max(), 81)
            for state, shots in enumerate(values):
                ax.hist(shots, bins=bins, alpha=0.6, label=f"prepared {state}")
            ax.axvline(fit["params"]["threshold"], color="k", lw=1, ls="--", label="threshold")
            ax.set_xlabel("integrated voltage")
            ax.set_ylabel("counts")
            continue
        if not averaged:
            values = values.mean(axis=-1)
        if values.ndim == 0:
            ax.bar([key], [float(values)])
            continue
        if fit.get("model") == "rb":
            values = 1 - values  # survival probability
        if values.ndim > 1:
            values = values.reshape(values.shape[0], -1).mean(axis=1)
        x = np.asarray(grids[0]["values"], dtype=float) if grids else np.arange(len(values))
        ax.plot(x, values, "o", ms=3, label=key)
        curve = _fit_curve(fit, x)
        if curve is not None:
            ax.plot(*curve, "-", lw=1.2, label=f"{fit['model']} fit")
        ax.set_xlabel(grids[0]["name"] if grids else "point")
        ax.set_ylabel("survival" if fit.get("model") == "rb" else "P(1)")
    title = meta.get("routine", directory.name)
    if meta.get("qubit"):
        title += f" ({meta['qubit']})"
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path) if path is not None else directory / "plot.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_benchmark(rows: Sequence[dict], path: Union[str, Path]) -> Path:
    """Two panels: absolute ideal and real times, and their ratio."""
    names = [r["routine"] for r in rows]
    x = np.arange(len(rows))
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    width = 0.38
    top.bar(x - width / 2, [r["t_ideal_s"] for r in rows], width, label="ideal")
    top.bar(x + width / 2, [r["t_real_s"] for r in rows], width, label="real")
    top.set_yscale("log")
    top.set_ylabel("time (s)")
    top.legend(fontsize=7)
    bottom.bar(x, [r["ratio"] for r in rows], 0.6, color="C2")
    bottom.axhline(1.0, color="k", lw=0.8)
    bottom.set_ylabel("real / ideal")
    bottom.set_xticks(x)
    bottom.set_xticklabels(names, rotation=30, ha="right")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_overlaps(series: OverlapSeries, path: Union[str, Path], title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for level in range(series.levels):
        ax.plot(series.times, series[level], lw=1.2, label=f"|{level}>")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("overlap")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
