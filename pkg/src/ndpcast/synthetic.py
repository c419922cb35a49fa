"""Seeded synthetic panels with the shape of a quarterly macro dataset.

Generator equations (version 1). For country ``c`` and quarter ``t = 0..T-1``:

    factor      f[t]   = 0.8 f[t-1] + e[t],           e ~ N(0, 1), f[-1] stationary
    shock       f[t*] -= 6,  f[t*+1] -= 3              (nonlinear only; t* = round(0.85 T))
    idiosync.   v[l,t] = 0.5 v[l,t-1] + w[l,t],        w ~ N(0, 1)
    indicator   x[l,t] = 100 + m[c,l] + k[c] b[l] t + a[c,l] f[t] + v[l,t]

with ``m ~ U(-10, 10)``, ``k ~ U(0.2, 0.8)``, ``b ~ U(0.5, 1.5)``,
``a ~ U(0.5, 2)``. The target (GDP) is

    linear:     y[t] = c0 + sum_l c[l] x[l,t] + noise * n[t]
    nonlinear:  y[t] = c0 + sum_l c[l] x[l,t]
                       + d (x[0,t] - 100)(x[1,t] - 100) / 100
                       - kappa * max(0, theta[c] - x[0,t]) + noise * n[t]

where ``n ~ N(0, 1)``, ``c0 = 10``, ``c[l] ~ U(0.1, 0.5)``, ``d = 0.05`` and
``kappa = 3``. ``theta[c]`` is the 10th percentile of ``x[0]`` for
country ``c``. With a single indicator the interaction uses ``x[0]`` twice.

``c0, c, b, d, kappa`` are shared by all countries (see
:func:`gdp_coefficients`); everything else is drawn per country from
``default_rng([seed, 2, country_index])``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel_data import CountrySeries, PanelDataset, Quarter

GENERATOR_VERSION = 1
DEFAULT_INDICATORS = (
    "industrial_production",
    "construction",
    "retail_trade",
    "exports",
    "imports",
    "esi",
)
EU_COUNTRIES = (
    "PT", "AT", "BE", "BG", "CY", "CZ", "DE", "DK", "EE", "EL", "ES", "FI", "FR", "HR",
    "HU", "IE", "IT", "LT", "LU", "LV", "MT", "NL", "PL", "RO", "SE", "SI", "SK",
)  # fmt: skip

INTERACTION = 0.05
REGIME_DROP = 3.0


@dataclass(frozen=True)
class SyntheticSpec:
    countries: int = 27
    quarters: int = 96
    seed: int = 0
    indicators: int = 6
    structure: str = "nonlinear"
    noise: float = 0.01
    start: Quarter = Quarter(2000, 1)
    target: str = "GDP"

    def __post_init__(self):
        if self.countries < 2 or self.quarters < 2:
            raise ValueError("countries and quarters must be >= 2")
        if self.indicators < 1:
            raise ValueError("indicators must be >= 1")
        if self.structure not in ("linear", "nonlinear"):
            raise ValueError("structure must be 'linear' or 'nonlinear'")
        if not (np.isfinite(self.noise) and self.noise >= 0):
            raise ValueError("noise must be finite and >= 0")

    @property
    def country_codes(self) -> tuple[str, ...]:
        extra = tuple(f"C{k:02d}" for k in range(len(EU_COUNTRIES) + 1, self.countries + 1))
        return (EU_COUNTRIES + extra)[: self.countries]

    @property
    def indicator_names(self) -> tuple[str, ...]:
        extra = tuple(f"indicator_{k}" for k in range(len(DEFAULT_INDICATORS) + 1, self.indicators + 1))
        return (DEFAULT_INDICATORS + extra)[: self.indicators]


def gdp_coefficients(spec: SyntheticSpec) -> np.ndarray:
    """Intercept followed by one slope per indicator, in ``indicator_names`` order."""
    rng = np.random.default_rng([spec.seed, 0])
    return np.concatenate(([10.0], rng.uniform(0.1, 0.5, spec.indicators)))


def gdp_coefficient_map(spec: SyntheticSpec) -> dict[str, float]:
    coef = gdp_coefficients(spec)
    return {"intercept": float(coef[0]), **{n: float(c) for n, c in zip(spec.indicator_names, coef[1:])}}


def _trend_loadings(spec: SyntheticSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 1])
    return rng.uniform(0.5, 1.5, spec.indicators)


def _country(spec: SyntheticSpec, index: int, coef: np.ndarray, b: np.ndarray):
    rng = np.random.default_rng([spec.seed, 2, index])
    T, L, rho = spec.quarters, spec.indicators, 0.8
    m = rng.uniform(-10, 10, L)
    k = rng.uniform(0.2, 0.8)
    a = rng.uniform(0.5, 2.0, L)
    e = rng.standard_normal(T)
    w = rng.standard_normal((T, L))
    n = rng.standard_normal(T)
    f = np.empty(T)
    v = np.empty((T, L))
    f_prev = rng.standard_normal() / np.sqrt(1 - rho**2)
    v_prev = rng.standard_normal(L) / np.sqrt(1 - 0.25)
    shock_at = int(round(0.85 * T))
    for t in range(T):
        f[t] = rho * f_prev + e[t]
        if spec.structure == "nonlinear":
            if t == shock_at:
                f[t] -= 6.0
            elif t == shock_at + 1:
                f[t] -= 3.0
        v[t] = 0.5 * v_prev + w[t]
        f_prev, v_prev = f[t], v[t]
    t_idx = np.arange(T)[:, None]
    x = 100.0 + m + k * b * t_idx + a * f[:, None] + v
    y = coef[0] + x @ coef[1:]
    if spec.structure == "nonlinear":
        second = x[:, 1] if L > 1 else x[:, 0]
        y = y + INTERACTION * (x[:, 0] - 100.0) * (second - 100.0) / 100.0
        theta = np.percentile(x[:, 0], 10)
        y = y - REGIME_DROP * np.maximum(0.0, theta - x[:, 0])
    y = y + spec.noise * n
    return x, y


def generate_synthetic_panel(spec: SyntheticSpec) -> PanelDataset:
    """Raw (unregularized) panel following the generator equations above."""
    coef = gdp_coefficients(spec)
    b = _trend_loadings(spec)
    names = spec.indicator_names
    order = np.argsort(names, kind="stable")  # dataset stores indicators sorted by name
    quarters = tuple(spec.start.shift(t) for t in range(spec.quarters))
    series = {}
    for idx, code in enumerate(spec.country_codes):
        x, y = _country(spec, idx, coef, b)
        series[code] = CountrySeries(code, quarters, x[:, order].copy(), y.copy())
    series = dict(sorted(series.items()))
    return PanelDataset(spec.target, tuple(names[i] for i in order), series)
