"""SVG figures: forecasts vs actuals, and cumulative absolute error by model."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .forecast_eval import EvalReport  # noqa: E402

_SVG_META = {"Date": None, "Creator": "ndpcast"}


def _save(fig, path: str | Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "ndpcast", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _ticks(ax, labels: list[str]) -> None:
    step = max(1, len(labels) // 9)
    idx = list(range(0, len(labels), step))
    ax.set_xticks(idx)
    ax.set_xticklabels([labels[i] for i in idx], rotation=45, ha="right")


def plot_forecasts(reports: Sequence[EvalReport], path: str | Path, title: str = "") -> None:
    if not reports:
        raise ValueError("no reports to plot")
    labels = [str(q) for q in reports[0].quarters]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(x, reports[0].actual, color="black", linewidth=2, label="actual")
    for r in reports:
        ax.plot(x, r.forecast, linewidth=1.2, label=r.model)
    _ticks(ax, labels)
    ax.set_ylabel("regularized level")
    ax.set_title(title or "Forecasts vs actual (out of sample)")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_cumulative_error(reports: Sequence[EvalReport], path: str | Path, title: str = "") -> None:
    if not reports:
        raise ValueError("no reports to plot")
    labels = [str(q) for q in reports[0].quarters]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for r in reports:
        ax.plot(x, r.cumulative_abs_error, linewidth=1.5, label=r.model)
    _ticks(ax, labels)
    ax.set_ylabel("cumulative absolute error")
    ax.set_title(title or "Cumulative absolute out-of-sample error")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
