"""Hypergeometric series and Pochhammer symbols.

Only what the sphere kernels need: a vectorised generalised series
``pFq`` summed with the term-ratio recurrence. The Gauss ``2F1`` comes from
``scipy.special.hyp2f1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special as sps

from .errors import SeriesDivergence

_INT_TOL = 1e-12


def _nonpositive_integer(z: float) -> bool:
    return z <= 0 and abs(z - round(z)) < _INT_TOL


def log_gamma(z: float) -> tuple[float, float]:
    """Return ``(log|Gamma(z)|, sign(Gamma(z)))``."""
    if _nonpositive_integer(z):
        raise ValueError(f"Gamma has a pole at {z}")
    return float(sps.gammaln(z)), float(sps.gammasgn(z))


def pochhammer(z: float, n: float) -> float:
    """Rising factorial ``(z)_n = Gamma(z + n) / Gamma(z)``.

    Integer ``n >= 0`` is evaluated as a finite product, which is exact for
    negative ``z`` as well. Otherwise the ratio goes through log-Gamma with
    explicit sign tracking.
    """
    if n >= 0 and abs(n - round(n)) < _INT_TOL:
        out = 1.0
        for k in range(int(round(n))):
            out *= z + k
        return out
    lg_num, s_num = log_gamma(z + n)
    lg_den, s_den = log_gamma(z)
    return s_num * s_den * math.exp(lg_num - lg_den)


@dataclass(frozen=True)
class HypergeomSpec:
    """Parameters of a generalised hypergeometric series ``pFq``."""

    upper: tuple[float, ...]
    lower: tuple[float, ...]
    max_terms: int = 1_000_000
    tol: float = 1e-13

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in self.lower))

    @property
    def degree(self) -> int | None:
        """Polynomial degree when some upper parameter is a non-positive integer."""
        degs = [int(round(-a)) for a in self.upper if _nonpositive_integer(a)]
        return min(degs) if degs else None

    def shifted(self, j: int) -> "HypergeomSpec":
        return HypergeomSpec(
            tuple(a + j for a in self.upper),
            tuple(b + j for b in self.lower),
            self.max_terms,
            self.tol,
        )

    def derivative_factor(self, j: int) -> float:
        """``prod (a_i)_j / prod (b_k)_j`` from ``d^j/dt^j pFq = factor * pFq(a+j; b+j)``."""
        num = math.prod(pochhammer(a, j) for a in self.upper)
        if num == 0.0:
            return 0.0
        den = math.prod(pochhammer(b, j) for b in self.lower)
        return num / den


def hypergeom(spec: HypergeomSpec, t, *, return_terms: bool = False):
    """Sum ``pFq(upper; lower; t)`` elementwise over ``t``.

    Terminating series are summed exactly. Otherwise summation stops once the
    tail estimate ``|term| / (1 - |ratio|)`` falls below ``tol`` relative to
    the partial sum, and :class:`SeriesDivergence` is raised if that never
    happens within ``max_terms``.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if np.any(np.abs(t_arr) > 1.0 + 1e-15):
        raise ValueError("hypergeom is only supported for |t| <= 1")

    upper, lower = spec.upper, spec.lower
    deg = spec.degree
    limit = deg + 1 if deg is not None else spec.max_terms
    for b in lower:
        if _nonpositive_integer(b) and (deg is None or -round(b) < deg):
            raise ValueError(f"lower parameter {b} hits a pole before the series terminates")
    p, q = len(upper), len(lower)
    if deg is None and p > q + 1:
        raise SeriesDivergence("pFq with p > q + 1 diverges for t != 0")
    # Beyond this index every ratio factor has settled its sign and magnitude.
    settle = int(max([abs(a) for a in upper + lower] + [0.0])) + 2

    total = np.ones_like(t_arr)
    term = np.ones_like(t_arr)
    active = np.ones(t_arr.shape, dtype=bool) if deg is None else None
    n_terms = 1
    for n in range(limit - 1):
        num = math.prod(a + n for a in upper)
        den = math.prod(b + n for b in lower) * (n + 1)
        coef = num / den
        if deg is not None:
            term = term * coef * t_arr
            total = total + term
            n_terms += 1
            continue
        term[active] *= coef * t_arr[active]
        total[active] += term[active]
        n_terms += 1
        if n >= settle:
            nxt = (n + 1)
            r_next = abs(math.prod(a + nxt for a in upper) / (math.prod(b + nxt for b in lower) * (nxt + 1)))
            ratio = r_next * np.abs(t_arr[active])
            with np.errstate(divide="ignore", invalid="ignore"):
                tail = np.where(ratio < 1.0, np.abs(term[active]) * ratio / (1.0 - ratio), np.inf)
            done = tail <= spec.tol * np.maximum(np.abs(total[active]), 1e-300)
            done |= term[active] == 0.0
            idx = np.flatnonzero(active)
            active[idx[done]] = False
            if not active.any():
                break
    else:
        if deg is None and active.any():
            raise SeriesDivergence(
                f"pFq{upper};{lower} did not converge to tol={spec.tol} within {spec.max_terms} terms"
            )
    out = total[0] if scalar else total
    if return_terms:
        return out, n_terms
    return out


def hypergeom_derivative(spec: HypergeomSpec, t, j: int):
    """``j``-th derivative in ``t`` by parameter shifting."""
    if j == 0:
        return hypergeom(spec, t)
    factor = spec.derivative_factor(j)
    if factor == 0.0:
        return np.zeros_like(np.asarray(t, dtype=float)) + 0.0
    return factor * hypergeom(spec.shifted(j), t)
