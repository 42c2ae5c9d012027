"""Basis expansions for the varying-coefficient functions.

The expansion phi maps a covariate vector in R^q to R^d with first
coordinate fixed to 1. Linear gives d = q + 1, cubic polynomial gives
d = 3q + 1, and a custom evaluator hook covers anything else.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch


class BasisKind(enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class BasisSpec:
    kind: BasisKind
    q: int
    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.d < 1:
            raise DimensionMismatch("basis dimension d must be >= 1")
        probe = np.asarray(self.evaluator(np.zeros(self.q)), dtype=np.float64)
        if probe.shape != (self.d,):
            raise DimensionMismatch(
                f"evaluator returns shape {probe.shape}, expected ({self.d},)"
            )
        if probe[0] != 1.0:
            raise DimensionMismatch("first basis coordinate must be the constant 1")


def _linear_eval(w: np.ndarray) -> np.ndarray:
    return np.concatenate(([1.0], w))


def _cubic_eval(w: np.ndarray) -> np.ndarray:
    out = np.empty(3 * w.size + 1)
    out[0] = 1.0
    for r, wr in enumerate(w):
        out[1 + 3 * r] = wr
        out[2 + 3 * r] = wr * wr
        out[3 + 3 * r] = wr * wr * wr
    return out


def linear_basis(q: int) -> BasisSpec:
    """phi(w) = (1, w_1, ..., w_q)."""
    return BasisSpec(BasisKind.LINEAR, q, q + 1, _linear_eval)


def cubic_basis(q: int) -> BasisSpec:
    """phi(w) = (1, w_1, w_1^2, w_1^3, ..., w_q, w_q^2, w_q^3)."""
    return BasisSpec(BasisKind.CUBIC, q, 3 * q + 1, _cubic_eval)


def custom_basis(evaluator: Callable[[np.ndarray], np.ndarray], q: int, d: int) -> BasisSpec:
    return BasisSpec(BasisKind.CUSTOM, q, d, evaluator)


def basis_by_name(name: str, q: int) -> BasisSpec:
    if name == "linear":
        return linear_basis(q)
    if name == "cubic":
        return cubic_basis(q)
    raise DimensionMismatch(f"unknown basis {name!r} (expected 'linear' or 'cubic')")


def expand(w, spec: BasisSpec) -> np.ndarray:
    """Evaluate phi(w). Pure and deterministic."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != spec.q:
        raise DimensionMismatch(f"covariate vector has length {w.size}, expected {spec.q}")
    out = np.asarray(spec.evaluator(w), dtype=np.float64)
    if out.shape != (spec.d,):
        raise DimensionMismatch(
            f"evaluator returned shape {out.shape}, expected ({spec.d},)"
        )
    return out


def expand_matrix(W: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Row-wise expansion of an n x q covariate matrix into n x d."""
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    if spec.kind is BasisKind.LINEAR:
        return np.hstack([np.ones((n, 1)), W])
    if spec.kind is BasisKind.CUBIC:
        cols = [np.ones((n, 1))]
        for r in range(spec.q):
            wr = W[:, r : r + 1]
            cols.extend([wr, wr**2, wr**3])
        return np.hstack(cols)
    return np.vstack([expand(W[i], spec) for i in range(n)])
