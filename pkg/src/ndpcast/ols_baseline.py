"""Benchmark OLS regression of the target on same-quarter indicators."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    def __init__(self, column: int, name: str | None = None):
        self.column = column
        self.name = name
        label = f"{column} ({name})" if name else str(column)
        super().__init__(
            f"design matrix is rank deficient: column {label} is linearly dependent on earlier columns"
        )


@dataclass(frozen=True)
class OlsModel:
    coefficients: np.ndarray  # intercept first
    terms: tuple[str, ...]
    in_sample_rmse: float
    condition: float

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])

    @property
    def slopes(self) -> np.ndarray:
        return self.coefficients[1:]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "estimate"])
            for term, b in zip(self.terms, self.coefficients):
                w.writerow([term, repr(float(b))])


def design_matrix(states) -> np.ndarray:
    X = np.asarray(states, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.hstack([np.ones((X.shape[0], 1)), X])


def fit_ols(X, y, terms: Sequence[str] | None = None) -> OlsModel:
    """Least squares via Householder QR of the (already bias-augmented) design.

    A column whose R diagonal is negligible relative to its own norm lies in
    the span of the earlier columns and is reported; no pseudo-inverse fallback.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n < p:
        raise ValueError(f"need at least as many rows as columns (n={n}, p={p})")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in design or response")
    if terms is None:
        terms = ("intercept",) + tuple(f"x{k}" for k in range(1, p))
    terms = tuple(terms)
    if len(terms) != p:
        raise ValueError("terms length does not match column count")

    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    for k, d in enumerate(diag):
        col_norm = np.linalg.norm(X[:, k])
        if col_norm == 0.0 or d <= RANK_TOL * col_norm:
            raise RankDeficiencyError(k, terms[k])
    beta = solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    return OlsModel(
        coefficients=beta,
        terms=terms,
        in_sample_rmse=float(np.sqrt(np.mean(resid**2))),
        condition=float(np.linalg.cond(R)),
    )


def predict_ols(model: OlsModel, state) -> float:
    x = np.asarray(state, dtype=float)
    if x.shape != (model.coefficients.shape[0] - 1,):
        raise ValueError(
            f"state length {x.shape} does not match {model.coefficients.shape[0] - 1} slopes"
        )
    return float(model.coefficients[0] + model.coefficients[1:] @ x)
