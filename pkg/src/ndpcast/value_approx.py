"""Approximate cost-to-go architectures.

Two scoring functions are supported:

* :class:`LinearModel`, ``J(x) = sum_l r_l x_l``;
* :class:`NetworkModel`, a single hidden layer without node biases,
  ``J(x) = sum_k r_k sigma(sum_l r_kl x_l)`` with logistic or ReLU ``sigma``.

Models are immutable snapshots. Updates build new instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
from scipy.special import expit

from .features import FeatureSpec

ACTIVATIONS = ("relu", "logistic")
MODEL_FORMAT = "ndpcast-model/1"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def activation_eval(kind: str, xi):
    """Logistic ``1/(1+exp(-xi))`` or ReLU ``max(0, xi)``; works on scalars and arrays."""
    if kind == "relu":
        return np.maximum(xi, 0.0)
    if kind == "logistic":
        return expit(xi)
    raise ValueError(f"unknown activation {kind!r}")


def activation_derivative(kind: str, preact, value=None):
    """Derivative of the activation at ``preact``. ReLU uses 0 at exactly 0."""
    if kind == "relu":
        return (np.asarray(preact) > 0).astype(float)
    if kind == "logistic":
        s = activation_eval(kind, preact) if value is None else value
        return s * (1.0 - s)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    features: FeatureSpec
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.weights.shape != (self.features.dim,):
            raise ValueError(
                f"weights shape {self.weights.shape} != ({self.features.dim},) for {self.features}"
            )

    kind = "linear"

    def score(self, x) -> float:
        return linear_eval(self, x)


@dataclass(frozen=True)
class NetworkModel:
    hidden_weights: np.ndarray  # (s, q), r_kl
    output_weights: np.ndarray  # (s,), r_k
    activation: str
    features: FeatureSpec
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_weights", _frozen(self.hidden_weights))
        object.__setattr__(self, "output_weights", _frozen(self.output_weights))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        s = self.output_weights.shape[0] if self.output_weights.ndim == 1 else -1
        if self.hidden_weights.shape != (s, self.features.dim):
            raise ValueError(
                f"inconsistent shapes: hidden {self.hidden_weights.shape}, "
                f"output {self.output_weights.shape}, feature dim {self.features.dim}"
            )

    kind = "network"

    @property
    def width(self) -> int:
        return self.output_weights.shape[0]

    def score(self, x) -> float:
        return network_eval(self, x).score


ValueModel = Union[LinearModel, NetworkModel]


class NetworkOutput(NamedTuple):
    score: float
    hidden: np.ndarray
    preactivations: np.ndarray


def _check_x(x, q: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (q,):
        raise ValueError(f"feature vector shape {x.shape} != ({q},)")
    return x


def linear_eval(model: LinearModel, x) -> float:
    x = _check_x(x, model.weights.shape[0])
    return float(model.weights @ x)


def network_eval(model: NetworkModel, x) -> NetworkOutput:
    x = _check_x(x, model.hidden_weights.shape[1])
    pre = model.hidden_weights @ x
    h = activation_eval(model.activation, pre)
    return NetworkOutput(float(model.output_weights @ h), h, pre)


def network_gradients(model: NetworkModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the score w.r.t. (output_weights, hidden_weights).

    ``d/dr_k = h_k`` and ``d/dr_kl = r_k * sigma'(pre_k) * x_l``.
    """
    x = _check_x(x, model.hidden_weights.shape[1])
    out = network_eval(model, x)
    dh = activation_derivative(model.activation, out.preactivations, out.hidden)
    return out.hidden, np.outer(model.output_weights * dh, x)


def evaluate(model: ValueModel, x) -> float:
    if isinstance(model, LinearModel):
        return linear_eval(model, x)
    return network_eval(model, x).score


def init_linear(features: FeatureSpec) -> LinearModel:
    return LinearModel(np.zeros(features.dim), features)


def init_network(
    s: int,
    q: int,
    seed: int,
    activation: str = "relu",
    features: FeatureSpec | None = None,
) -> NetworkModel:
    """Weights i.i.d. uniform on [-1/sqrt(q), 1/sqrt(q)] from ``default_rng(seed)``."""
    if s < 1 or q < 1:
        raise ValueError("s and q must be >= 1")
    if features is None:
        features = FeatureSpec("raw", q)
    elif features.dim != q:
        raise ValueError(f"q={q} does not match feature dim {features.dim}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(q)
    hidden = rng.uniform(-bound, bound, size=(s, q))
    output = rng.uniform(-bound, bound, size=s)
    return NetworkModel(hidden, output, activation, features, seed)


# -- model files -------------------------------------------------------------
#
# Plain ``key = value`` lines. Arrays are space separated; every float is
# written with repr() so a reload is bit-exact. Keys:
#   format, architecture, activation (network only), feature_kind, raw_dim,
#   feature_dim, hidden_width (network only), seed, weights (linear),
#   output_weights and hidden_weights.<k> for k = 0..s-1 (network).


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def model_to_text(model: ValueModel) -> str:
    lines = [
        f"format = {MODEL_FORMAT}",
        f"architecture = {model.kind}",
    ]
    if isinstance(model, NetworkModel):
        lines.append(f"activation = {model.activation}")
    lines += [
        f"feature_kind = {model.features.kind}",
        f"raw_dim = {model.features.raw_dim}",
        f"feature_dim = {model.features.dim}",
    ]
    if isinstance(model, NetworkModel):
        lines.append(f"hidden_width = {model.width}")
    lines.append(f"seed = {'none' if model.seed is None else model.seed}")
    if isinstance(model, LinearModel):
        lines.append(f"weights = {_fmt(model.weights)}")
    else:
        lines.append(f"output_weights = {_fmt(model.output_weights)}")
        for k, row in enumerate(model.hidden_weights):
            lines.append(f"hidden_weights.{k} = {_fmt(row)}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> ValueModel:
    kv: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"model file line {n}: expected 'key = value'")
        kv[key.strip()] = value.strip()
    if kv.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {kv.get('format')!r}")
    features = FeatureSpec(kv["feature_kind"], int(kv["raw_dim"]))
    if int(kv["feature_dim"]) != features.dim:
        raise ValueError("feature_dim inconsistent with feature_kind/raw_dim")
    seed = None if kv["seed"] == "none" else int(kv["seed"])
    arr = lambda s: np.array([float(v) for v in s.split()], dtype=float)  # noqa: E731
    if kv["architecture"] == "linear":
        return LinearModel(arr(kv["weights"]), features, seed)
    if kv["architecture"] == "network":
        width = int(kv["hidden_width"])
        hidden = np.vstack([arr(kv[f"hidden_weights.{k}"]) for k in range(width)])
        return NetworkModel(hidden, arr(kv["output_weights"]), kv["activation"], features, seed)
    raise ValueError(f"unknown architecture {kv['architecture']!r}")


def save_model(model: ValueModel, path: str | Path) -> None:
    Path(path).write_text(model_to_text(model))


def load_model(path: str | Path) -> ValueModel:
    return model_from_text(Path(path).read_text())
