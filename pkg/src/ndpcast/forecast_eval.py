"""Level forecasts from fitted models and out-of-sample error reports.

How a cost-to-go score turns into a level forecast is an interpretation:

``direct_score``
    the score ``J(encode(state))`` is the regularized level forecast.
``incremental_root``
    treats the score as a discounted sum of squared changes and reads the
    next change off its stationary part: ``prev + sign * sqrt(max(0, (1-alpha) J))``
    where ``sign`` follows the previous change (``previous_change``, zero
    counts as up) or is always ``+1`` (``always_positive``).

OLS models ignore the rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .features import encode
from .ols_baseline import OlsModel, predict_ols
from .panel_data import Quarter
from .value_approx import LinearModel, NetworkModel, evaluate as score

RULE_KINDS = ("direct_score", "incremental_root")
SIGN_HEURISTICS = ("previous_change", "always_positive")


@dataclass(frozen=True)
class ForecastRule:
    kind: str = "direct_score"
    sign: str = "previous_change"

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"forecast rule must be one of {RULE_KINDS}, got {self.kind!r}")
        if self.sign not in SIGN_HEURISTICS:
            raise ValueError(f"sign heuristic must be one of {SIGN_HEURISTICS}, got {self.sign!r}")

    def label(self) -> str:
        return self.kind if self.kind == "direct_score" else f"{self.kind}:{self.sign}"


class ForecastContext(NamedTuple):
    previous_level: float
    previous_change: float


def forecast(
    model,
    state,
    context: ForecastContext | None = None,
    rule: ForecastRule = ForecastRule(),
    alpha: float | None = None,
) -> float:
    if isinstance(model, OlsModel):
        return predict_ols(model, state)
    if not isinstance(model, (LinearModel, NetworkModel)):
        raise TypeError(f"unsupported model type {type(model).__name__}")
    j = score(model, encode(state, model.features))
    if rule.kind == "direct_score":
        return j
    if context is None:
        raise ValueError("incremental_root forecasts need a previous level and change")
    if alpha is None or not 0.0 < alpha < 1.0:
        raise ValueError("incremental_root forecasts need alpha in (0,1)")
    step = math.sqrt(max(0.0, (1.0 - alpha) * j))
    sign = 1.0
    if rule.sign == "previous_change" and context.previous_change < 0:
        sign = -1.0
    return context.previous_level + sign * step


@dataclass
class EvalReport:
    model: str
    quarters: list[Quarter]
    actual: np.ndarray
    forecast: np.ndarray
    mae: float
    rmse: float
    cumulative_abs_error: np.ndarray
    fingerprint: dict[str, str] = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return self.forecast - self.actual

    @property
    def abs_errors(self) -> np.ndarray:
        return np.abs(self.errors)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quarter", "actual", "forecast", "abs_error", "cumulative_abs_error"])
            for q, a, f, e, c in zip(
                self.quarters, self.actual, self.forecast, self.abs_errors, self.cumulative_abs_error
            ):
                w.writerow([str(q), repr(float(a)), repr(float(f)), repr(float(e)), repr(float(c))])


def _as_pairs(items: Iterable[tuple[Quarter, float]], what: str) -> dict[Quarter, float]:
    out: dict[Quarter, float] = {}
    for q, v in items:
        q = Quarter.parse(q) if isinstance(q, str) else Quarter(*q)
        if q in out:
            raise ValueError(f"duplicate quarter {q} in {what}")
        out[q] = float(v)
    return out


def evaluate(
    forecasts: Iterable[tuple[Quarter, float]],
    actuals: Iterable[tuple[Quarter, float]],
    model: str = "model",
    fingerprint: dict[str, str] | None = None,
) -> EvalReport:
    """MAE, RMSE and the running sum of absolute errors, in quarter order.

    The cumulative series starts at the first quarter's absolute error.
    """
    f = _as_pairs(forecasts, "forecasts")
    a = _as_pairs(actuals, "actuals")
    if not f or not a:
        raise ValueError("empty forecasts or actuals")
    if set(f) != set(a):
        only_f = sorted(set(f) - set(a))
        only_a = sorted(set(a) - set(f))
        raise ValueError(
            "quarter mismatch: "
            f"forecast-only {[str(q) for q in only_f]}, actual-only {[str(q) for q in only_a]}"
        )
    quarters = sorted(f)
    fc = np.array([f[q] for q in quarters])
    ac = np.array([a[q] for q in quarters])
    abs_err = np.abs(fc - ac)
    return EvalReport(
        model=model,
        quarters=quarters,
        actual=ac,
        forecast=fc,
        mae=float(np.mean(abs_err)),
        rmse=float(np.sqrt(np.mean(abs_err**2))),
        cumulative_abs_error=np.cumsum(abs_err),
        fingerprint=dict(fingerprint or {}),
    )


def write_summary_csv(reports: Iterable[EvalReport], path: str | Path) -> None:
    """Table-shaped summary ``model,mae,rmse`` with values rounded to 10 decimals."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "mae", "rmse"])
        for r in reports:
            w.writerow([r.model, f"{r.mae:.10f}", f"{r.rmse:.10f}"])


def format_summary(reports: Iterable[EvalReport]) -> str:
    reports = list(reports)
    width = max([len("model")] + [len(r.model) for r in reports])
    lines = [f"{'model':<{width}}  {'MAE':>8}  {'RMSE':>8}"]
    for r in reports:
        lines.append(f"{r.model:<{width}}  {r.mae:8.4f}  {r.rmse:8.4f}")
    return "\n".join(lines)
