"""TD(0) training of linear and single-hidden-layer cost-to-go models.

The temporal difference for a transition i -> j with cost g is

    delta = J(i) - alpha * J(j) - g

and both architectures move their weights along ``-gamma * delta * dJ(i)/dr``
(semi-gradient: the target ``alpha * J(j) + g`` is held fixed). Costs are
minimized, hence the sign convention differs from reward-based TD.

Sub-seeds derived from ``TrainConfig.seed``: network initialization uses
``seed``, the per-epoch shuffle uses ``seed + 1``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FEATURE_KINDS, FeatureSpec, encode, encode_many
from .panel_data import Transition
from .value_approx import (
    ACTIVATIONS,
    LinearModel,
    NetworkModel,
    ValueModel,
    activation_derivative,
    activation_eval,
    init_linear,
    init_network,
)

logger = logging.getLogger(__name__)

ARCHITECTURES = ("linear", "network")
WEIGHT_LIMIT = 1e8
SHUFFLE_SEED_OFFSET = 1


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, update: int, gamma: float, reason: str):
        self.epoch = epoch
        self.update = update
        self.gamma = gamma
        super().__init__(
            f"TD training diverged at epoch {epoch}, update {update} (gamma={gamma!r}): {reason}"
        )


@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "network"
    alpha: float = 0.9
    gamma0: float = 0.1
    decay_tau: float | None = None  # None -> 10 * number of transitions
    epochs: int = 100
    shuffle: bool = True
    seed: int = 0
    activation: str = "relu"
    feature_kind: str | None = None  # None -> tensor_degree2 (network), raw_with_bias (linear)
    hidden_width: int = 16
    strict_listing_order: bool = False
    name: str | None = None
    log_every: int = 1

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if not self.gamma0 > 0.0:
            raise ValueError("gamma0 must be > 0")
        if self.decay_tau is not None and not self.decay_tau > 0.0:
            raise ValueError("decay_tau must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.feature_kind is not None and self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"feature kind must be one of {FEATURE_KINDS}, got {self.feature_kind!r}")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    @property
    def resolved_feature_kind(self) -> str:
        if self.feature_kind is not None:
            return self.feature_kind
        return "tensor_degree2" if self.architecture == "network" else "raw_with_bias"

    @property
    def model_name(self) -> str:
        return self.name or f"td_{self.architecture}"

    def tau_for(self, n_transitions: int) -> float:
        return self.decay_tau if self.decay_tau is not None else 10.0 * n_transitions


@dataclass
class TrainLog:
    updates: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    epochs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    deltas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epoch_mean_abs_delta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_gamma: float | None = None
    update_count: int = 0

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["update", "epoch", "gamma", "delta"])
            for row in zip(self.updates, self.epochs, self.gammas, self.deltas):
                w.writerow([int(row[0]), int(row[1]), repr(float(row[2])), repr(float(row[3]))])


def step_size(t: int, gamma0: float, decay_tau: float) -> float:
    """``gamma0 / (1 + t / decay_tau)``."""
    return gamma0 / (1.0 + t / decay_tau)


# The *_features helpers carry the update arithmetic; the public td_step_*
# functions encode raw states first. train() calls the helpers on
# pre-encoded features so both paths produce identical bits.


def _td_linear_features(model: LinearModel, fi, fj, g, alpha, gamma):
    r = model.weights
    delta = float(r @ fi) - alpha * float(r @ fj) - g
    new = r - gamma * delta * fi
    return LinearModel(new, model.features, model.seed), delta


def _td_network_features(model: NetworkModel, fi, fj, g, alpha, gamma, strict_listing_order=False):
    W, r = model.hidden_weights, model.output_weights
    pre_i = W @ fi
    h_i = activation_eval(model.activation, pre_i)
    j_i = float(r @ h_i)
    j_j = float(r @ activation_eval(model.activation, W @ fj))
    delta = j_i - alpha * j_j - g
    new_r = r - gamma * delta * h_i
    scale = new_r if strict_listing_order else r
    grad_hidden = np.outer(scale * activation_derivative(model.activation, pre_i, h_i), fi)
    new_W = W - gamma * delta * grad_hidden
    return NetworkModel(new_W, new_r, model.activation, model.features, model.seed), delta


def _features_for(model: ValueModel, tr: Transition):
    return encode(tr.x_i, model.features), encode(tr.x_j, model.features)


def td_step_linear(model: LinearModel, tr: Transition, alpha: float, gamma: float):
    """One TD(0) update of a linear model; returns ``(new_model, delta)``."""
    fi, fj = _features_for(model, tr)
    return _td_linear_features(model, fi, fj, tr.g, alpha, gamma)


def td_step_network(
    model: NetworkModel,
    tr: Transition,
    alpha: float,
    gamma: float,
    strict_listing_order: bool = False,
):
    """One TD(0) update of the network; returns ``(new_model, delta)``.

    delta and both gradients use the pre-update weights. With
    ``strict_listing_order`` the hidden-layer update is scaled by the
    already-updated output weights instead.
    """
    fi, fj = _features_for(model, tr)
    return _td_network_features(model, fi, fj, tr.g, alpha, gamma, strict_listing_order)


def initial_model(config: TrainConfig, raw_dim: int) -> ValueModel:
    spec = FeatureSpec(config.resolved_feature_kind, raw_dim)
    if config.architecture == "linear":
        return replace(init_linear(spec), seed=config.seed)
    return init_network(config.hidden_width, spec.dim, config.seed, config.activation, spec)


def train(
    transitions: Sequence[Transition],
    config: TrainConfig,
    initial: ValueModel | None = None,
) -> tuple[ValueModel, TrainLog]:
    """Run ``config.epochs`` sweeps of TD(0) over ``transitions``.

    Without shuffling, transitions are visited in the given order (the
    country-chronological order produced by ``build_transitions``).
    """
    n = len(transitions)
    if n == 0:
        raise ValueError("no transitions to train on")
    raw_dim = len(transitions[0].x_i)
    model = initial if initial is not None else initial_model(config, raw_dim)

    Fi = encode_many([t.x_i for t in transitions], model.features)
    Fj = encode_many([t.x_j for t in transitions], model.features)
    Fi, Fj = list(Fi), list(Fj)
    g = [float(t.g) for t in transitions]
    tau = config.tau_for(n)
    rng = np.random.default_rng(config.seed + SHUFFLE_SEED_OFFSET)

    total = config.epochs * n
    n_logged = (total + config.log_every - 1) // config.log_every
    log = TrainLog(
        updates=np.zeros(n_logged, dtype=np.int64),
        epochs=np.zeros(n_logged, dtype=np.int64),
        gammas=np.zeros(n_logged),
        deltas=np.zeros(n_logged),
        epoch_mean_abs_delta=np.zeros(config.epochs),
    )
    # Working copies updated in place with the same expressions as the
    # _td_*_features helpers; the run is private so no snapshot is exposed.
    alpha = config.alpha
    strict = config.strict_listing_order
    if isinstance(model, LinearModel):
        r = model.weights.copy()
    else:
        W = model.hidden_weights.copy()
        r = model.output_weights.copy()
        act = model.activation
    t = 0
    gamma = None
    for epoch in range(config.epochs):
        order = rng.permutation(n).tolist() if config.shuffle else range(n)
        abs_sum = 0.0
        for idx in order:
            gamma = step_size(t, config.gamma0, tau)
            fi = Fi[idx]
            if isinstance(model, LinearModel):
                delta = float(r @ fi) - alpha * float(r @ Fj[idx]) - g[idx]
                r -= gamma * delta * fi
                peak = float(np.abs(r).max())
            else:
                pre_i = W @ fi
                h_i = activation_eval(act, pre_i)
                delta = float(r @ h_i) - alpha * float(r @ activation_eval(act, W @ Fj[idx])) - g[idx]
                new_r = r - gamma * delta * h_i
                scale = new_r if strict else r
                W -= gamma * delta * np.outer(scale * activation_derivative(act, pre_i, h_i), fi)
                r = new_r
                peak = max(float(np.abs(r).max()), float(np.abs(W).max()))
            if not math.isfinite(delta):
                raise DivergenceError(epoch, t, gamma, f"non-finite temporal difference {delta!r}")
            if not math.isfinite(peak):
                raise DivergenceError(epoch, t, gamma, "non-finite weight")
            if peak > WEIGHT_LIMIT:
                raise DivergenceError(
                    epoch, t, gamma, f"weight magnitude {peak:.3g} exceeds {WEIGHT_LIMIT:g}"
                )
            if t % config.log_every == 0:
                k = t // config.log_every
                log.updates[k] = t
                log.epochs[k] = epoch
                log.gammas[k] = gamma
                log.deltas[k] = delta
            abs_sum += abs(delta)
            t += 1
        log.epoch_mean_abs_delta[epoch] = abs_sum / n
        logger.debug("epoch %d mean |delta| %.6g", epoch, abs_sum / n)
    if isinstance(model, LinearModel):
        model = LinearModel(r, model.features, model.seed)
    else:
        model = NetworkModel(W, r, act, model.features, model.seed)
    log.final_gamma = gamma
    log.update_count = t
    return model, log


def solve_finite_mrp(P, g, alpha: float) -> np.ndarray:
    """Exact discounted cost-to-go of a finite Markov reward process.

    Solves ``(I - alpha P) J = g`` directly.
    """
    P = np.asarray(P, dtype=float)
    g = np.asarray(g, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n) or g.shape != (n,):
        raise ValueError(f"shape mismatch: P {P.shape}, g {g.shape}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
        raise ValueError("P must be row-stochastic")
    A = np.eye(n) - alpha * P
    try:
        J = np.linalg.solve(A, g)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular system: {exc}") from None
    if np.max(np.abs(A @ J - g)) >= 1e-10:
        raise ValueError("linear solve residual too large")
    return J
