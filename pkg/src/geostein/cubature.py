"""Optimal cubature weights, integral estimates and the kernel Stein discrepancy.

Everything works from one Cholesky factor of ``K_P``. The finite-``sigma``
estimator is reduced to that factor through the Woodbury identity, so the
bordered matrix ``sigma^2 11^T + K_P`` is never formed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSystem, LengthMismatch
from .stein import SteinKernelMatrix


@dataclass(frozen=True)
class CubatureResult:
    """Weights ``w = K^-1 1 / 1^T K^-1 1`` and the matching ``ksd = (1^T K^-1 1)^(-1/2)``.

    ``estimate`` stays ``nan`` until :func:`integrate` fills it in.
    """

    weights: np.ndarray
    ksd: float
    estimate: float = math.nan
    jitter: float = 0.0
    n: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "n", len(w))


@dataclass(frozen=True)
class SigmaEstimatorConfig:
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be finite and positive")


def _ones_solve(K: SteinKernelMatrix):
    v = K.solve(np.ones(K.n))
    s = float(v.sum())
    if not (s > 0 and math.isfinite(s)):
        raise DegenerateSystem(f"1^T K_P^-1 1 = {s:.3g} is not positive; K_P is catastrophically conditioned")
    return v, s


def solve_weights(K: SteinKernelMatrix) -> CubatureResult:
    v, s = _ones_solve(K)
    return CubatureResult(weights=v / s, ksd=s**-0.5, jitter=K.jitter)


def _check_length(n, f):
    f = np.asarray(f, dtype=float).ravel()
    if len(f) != n:
        raise LengthMismatch(f"expected {n} function values, got {len(f)}")
    return f


def integrate(result: CubatureResult, f_values) -> CubatureResult:
    """``I_X(f) = w . f``; returns a copy of ``result`` with ``estimate`` set."""
    f = _check_length(result.n, f_values)
    return replace(result, estimate=float(result.weights @ f))


def integrate_sigma(K: SteinKernelMatrix, cfg: SigmaEstimatorConfig, f_values) -> float:
    """``sigma^2 1^T (sigma^2 11^T + K_P)^-1 f`` in the Woodbury form.

    Equals ``1^T K^-1 f / (sigma^-2 + 1^T K^-1 1)`` and tends to the
    limit-form estimate as ``sigma`` grows, with a deviation of order
    ``sigma^-2``.
    """
    f = _check_length(K.n, f_values)
    v, s = _ones_solve(K)
    return float(v @ f) / (cfg.sigma**-2 + s)


def ksd_of_weights(K: SteinKernelMatrix, w) -> float:
    """``sqrt(w^T K_P w)`` for arbitrary weights; round-off negatives clamp to 0.

    Any jitter added during factorization is included, so the optimal
    weights reproduce the ``ksd`` reported by :func:`solve_weights`.
    """
    w = _check_length(K.n, w)
    q = float(w @ K.entries @ w) + K.jitter * float(w @ w)
    if q < 0:
        warnings.warn(f"negative quadratic form {q:.3g} clamped to 0", RuntimeWarning, stacklevel=2)
        q = 0.0
    return math.sqrt(q)
