"""Leave-one-country-out experiment: TD models on the other countries, OLS on
the test country's own history, all scored on the test country's later quarters.
"""

from __future__ import annotations

import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__
from .features import feature_names
from .forecast_eval import (
    EvalReport,
    ForecastContext,
    ForecastRule,
    evaluate,
    forecast,
    write_summary_csv,
)
from .ols_baseline import OlsModel, design_matrix, fit_ols
from .panel_data import (
    PanelDataset,
    Quarter,
    Transition,
    build_transitions,
    regularize,
    write_regularization_csv,
)
from .td_learning import TrainConfig, TrainLog, train
from .value_approx import ValueModel, save_model

logger = logging.getLogger(__name__)

OLS_NAME = "ols"


class ExperimentError(ValueError):
    pass


@dataclass
class TrainedModel:
    name: str
    config: TrainConfig
    rule: ForecastRule
    model: ValueModel
    log: TrainLog


@dataclass
class ExperimentResult:
    dataset: PanelDataset  # regularized
    test_country: str
    ols_cutoff: Quarter
    transitions: list[Transition]
    test_quarters: list[Quarter]
    ols: OlsModel
    trained: list[TrainedModel] = field(default_factory=list)
    reports: list[EvalReport] = field(default_factory=list)

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)


def fit_test_country_ols(dataset: PanelDataset, country: str, cutoff: Quarter) -> OlsModel:
    """OLS of the regularized target on same-quarter indicators, quarters <= cutoff."""
    s = dataset[country]
    rows = [t for t, q in enumerate(s.quarters) if q <= cutoff]
    if not rows:
        raise ExperimentError(f"no {country} observations at or before {cutoff}")
    X = design_matrix(s.states[rows])
    return fit_ols(X, s.target[rows], ("intercept",) + dataset.indicators)


def _forecasts(dataset, country, window, predict) -> list[tuple[Quarter, float]]:
    s = dataset[country]
    out = []
    for t in window:
        prev = float(s.target[t - 1]) if t >= 1 else float(s.target[t])
        change = float(s.target[t - 1] - s.target[t - 2]) if t >= 2 else 0.0
        out.append((s.quarters[t], predict(s.states[t], ForecastContext(prev, change))))
    return out


def run_experiment(
    data: PanelDataset,
    test_country: str,
    configs: Sequence[tuple[TrainConfig, ForecastRule]],
    ols_cutoff: Quarter | str,
) -> ExperimentResult:
    """Train every TD config on all countries but ``test_country``, fit OLS on
    the test country up to ``ols_cutoff`` and score every model on the test
    country's quarters after the cutoff. Reports come back OLS first, then
    configs in the given order.
    """
    cutoff = Quarter.parse(ols_cutoff) if isinstance(ols_cutoff, str) else Quarter(*ols_cutoff)
    dataset = data if data.is_regularized else regularize(data)
    if test_country not in dataset.series:
        raise ExperimentError(f"test country {test_country!r} not in dataset")
    s = dataset[test_country]
    if not s.quarters[0] <= cutoff <= s.quarters[-1]:
        raise ExperimentError(
            f"OLS cutoff {cutoff} outside {test_country} range {s.quarters[0]}..{s.quarters[-1]}"
        )
    window = [t for t, q in enumerate(s.quarters) if q > cutoff]
    if not window:
        raise ExperimentError(f"empty test window after {cutoff}")
    names = [cfg.model_name for cfg, _ in configs]
    if len(set(names)) != len(names) or OLS_NAME in names:
        raise ExperimentError(f"model names must be unique and not {OLS_NAME!r}: {names}")

    transitions = build_transitions(dataset, exclude=[test_country])
    if any(tr.country == test_country for tr in transitions):
        raise ExperimentError(f"test country {test_country} leaked into training transitions")
    ols = fit_test_country_ols(dataset, test_country, cutoff)
    test_quarters = [s.quarters[t] for t in window]
    actuals = [(s.quarters[t], float(s.target[t])) for t in window]

    result = ExperimentResult(dataset, test_country, cutoff, transitions, test_quarters, ols)
    ols_pred = _forecasts(dataset, test_country, window, lambda x, ctx: forecast(ols, x))
    result.reports.append(
        evaluate(ols_pred, actuals, OLS_NAME, {"ols_cutoff": str(cutoff), "rule": "ols"})
    )
    for cfg, rule in configs:
        if not transitions and cfg.epochs > 0:
            raise ExperimentError("no training transitions outside the test country")
        logger.info("training %s on %d transitions", cfg.model_name, len(transitions))
        model, log = train(transitions, cfg)
        result.trained.append(TrainedModel(cfg.model_name, cfg, rule, model, log))
        pred = _forecasts(
            dataset,
            test_country,
            window,
            lambda x, ctx, m=model, r=rule, a=cfg.alpha: forecast(m, x, ctx, r, a),
        )
        result.reports.append(evaluate(pred, actuals, cfg.model_name, fingerprint(cfg, rule)))
    return result


def fingerprint(cfg: TrainConfig, rule: ForecastRule) -> dict[str, str]:
    return {
        "architecture": cfg.architecture,
        "alpha": repr(cfg.alpha),
        "seed": str(cfg.seed),
        "features": cfg.resolved_feature_kind,
        "activation": cfg.activation if cfg.architecture == "network" else "none",
        "rule": rule.label(),
    }


def environment_fingerprint() -> dict[str, str]:
    return {
        "ndpcast": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(outdir: str | Path, entries: dict[str, str]) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "manifest.txt"
    lines = [f"{k} = {v}" for k, v in entries.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_outputs(result: ExperimentResult, outdir: str | Path) -> None:
    """Write every artifact of a finished run. Nothing is written for a run
    that failed before this point, so partial or non-finite files never appear.
    """
    from .plots import plot_cumulative_error, plot_forecasts

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for r in result.reports:
        if not (np.all(np.isfinite(r.forecast)) and np.isfinite(r.mae) and np.isfinite(r.rmse)):
            raise ExperimentError(f"non-finite forecasts for model {r.model}; nothing written")
    write_regularization_csv(result.dataset, outdir / "regularization.csv")
    result.ols.write_csv(outdir / "ols_coefficients.csv")
    for tm in result.trained:
        save_model(tm.model, outdir / f"model_{tm.name}.txt")
        tm.log.write_csv(outdir / f"trainlog_{tm.name}.csv")
        names = feature_names(result.dataset.indicators, tm.model.features)
        (outdir / f"features_{tm.name}.txt").write_text("\n".join(names) + "\n")
    for r in result.reports:
        r.write_csv(outdir / f"forecasts_{r.model}.csv")
    write_summary_csv(result.reports, outdir / "summary.csv")
    title = f"{result.test_country}, {result.test_quarters[0]}-{result.test_quarters[-1]}"
    plot_forecasts(result.reports, outdir / "figure1.svg", f"Forecasts vs actual ({title})")
    plot_cumulative_error(
        result.reports, outdir / "figure2.svg", f"Cumulative absolute error ({title})"
    )
