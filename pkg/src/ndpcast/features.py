"""State-to-feature encodings for the value architectures.

Ordering for ``tensor_degree2``: bias first, then the linear terms in
indicator order, then the quadratic terms ``s_a * s_b`` (a <= b) in
row-major upper-triangular order. For a two-dimensional state ``[a, b]``
this gives ``[1, a, b, a*a, a*b, b*b]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FEATURE_KINDS = ("raw", "raw_with_bias", "tensor_degree2")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    raw_dim: int

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}; choose from {FEATURE_KINDS}")
        if self.raw_dim < 1:
            raise ValueError("raw_dim must be >= 1")

    @property
    def dim(self) -> int:
        return feature_dim(self.kind, self.raw_dim)


def feature_dim(kind: str, raw_dim: int) -> int:
    if kind == "raw":
        return raw_dim
    if kind == "raw_with_bias":
        return raw_dim + 1
    if kind == "tensor_degree2":
        return (raw_dim + 1) * (raw_dim + 2) // 2
    raise ValueError(f"unknown feature kind {kind!r}")


@lru_cache(maxsize=None)
def _quadratic_index(raw_dim: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.triu_indices(raw_dim)
    return a, b


def encode(state, spec: FeatureSpec) -> np.ndarray:
    x = np.asarray(state, dtype=float)
    if x.ndim != 1 or x.shape[0] != spec.raw_dim:
        raise ValueError(f"state length {x.shape} does not match raw_dim {spec.raw_dim}")
    if spec.kind == "raw":
        return x.copy()
    if spec.kind == "raw_with_bias":
        return np.concatenate(([1.0], x))
    a, b = _quadratic_index(spec.raw_dim)
    return np.concatenate(([1.0], x, x[a] * x[b]))


def encode_many(states, spec: FeatureSpec) -> np.ndarray:
    """Row-wise :func:`encode` over a 2-D array of states."""
    X = np.asarray(states, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.raw_dim:
        raise ValueError(f"states shape {X.shape} does not match raw_dim {spec.raw_dim}")
    if spec.kind == "raw":
        return X.copy()
    ones = np.ones((X.shape[0], 1))
    if spec.kind == "raw_with_bias":
        return np.hstack([ones, X])
    a, b = _quadratic_index(spec.raw_dim)
    return np.hstack([ones, X, X[:, a] * X[:, b]])


def feature_names(indicators, spec: FeatureSpec) -> list[str]:
    names = list(indicators)
    if len(names) != spec.raw_dim:
        raise ValueError("indicator count does not match raw_dim")
    if spec.kind == "raw":
        return names
    if spec.kind == "raw_with_bias":
        return ["bias"] + names
    a, b = _quadratic_index(spec.raw_dim)
    return ["bias"] + names + [f"{names[i]}*{names[j]}" for i, j in zip(a, b)]
