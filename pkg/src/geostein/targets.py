"""Unnormalised target densities on S^2.

A target exposes ``log_density`` (up to an additive constant) and
``grad_log``, the gradient of a smooth extension of ``log p`` to the ambient
space. The Stein operator projects that gradient onto the tangent plane
itself, so any extension will do.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ConfigError
from .sphere import chart_hessian, chart_jacobian, from_chart_array


class TargetDensity:
    """Base class; subclasses implement ``log_density`` and ``grad_log``."""

    smoothness_order: float = math.inf

    def log_density(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad_log(self, x) -> np.ndarray:
        raise NotImplementedError

    def hess_log(self, x) -> np.ndarray:
        """Ambient Hessian of the extension, ``(n, 3, 3)``; central differences by default."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h = 1e-5
        out = np.empty((len(x), 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            out[:, :, k] = (self.grad_log(x + e) - self.grad_log(x - e)) / (2 * h)
        return 0.5 * (out + out.transpose(0, 2, 1))

    def rotated(self, R) -> "TargetDensity":
        """The same density carried along by the rotation ``x -> R x``."""
        return RotatedTarget(self, R)

    def check_smoothness(self, required: float) -> bool:
        """Warn when the kernel asks for more smoothness than the target declares."""
        if required > self.smoothness_order:
            warnings.warn(
                f"kernel needs log p in C^{required:g} but the target declares C^{self.smoothness_order:g}",
                stacklevel=2,
            )
            return False
        return True


class VonMisesFisher(TargetDensity):
    """``p(x) ~ exp(c . x)`` with concentration ``kappa = |c|``."""

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float).reshape(3)
        self.kappa = float(np.linalg.norm(self.c))

    def __repr__(self):
        return f"VonMisesFisher(c={self.c.tolist()})"

    @property
    def mean_direction(self) -> np.ndarray:
        if self.kappa == 0:
            return np.array([0.0, 0.0, 1.0])
        return self.c / self.kappa

    def log_density(self, x):
        return np.atleast_2d(np.asarray(x, dtype=float)) @ self.c

    def grad_log(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(self.c, x.shape).copy()

    def hess_log(self, x):
        return np.zeros((len(np.atleast_2d(x)), 3, 3))

    def normalizing_constant(self) -> float:
        """``kappa / (4 pi sinh kappa)``; reserved for oracle checks."""
        k = self.kappa
        if k < 1e-8:
            return 1.0 / (4 * np.pi)
        return k / (4 * np.pi * math.sinh(k))

    def rotated(self, R):
        return VonMisesFisher(np.asarray(R) @ self.c)


class RotatedTarget(TargetDensity):
    def __init__(self, base: TargetDensity, R):
        self.base = base
        self.R = np.asarray(R, dtype=float)
        self.smoothness_order = base.smoothness_order

    def log_density(self, x):
        return self.base.log_density(np.atleast_2d(x) @ self.R)

    def grad_log(self, x):
        return self.base.grad_log(np.atleast_2d(x) @ self.R) @ self.R.T

    def hess_log(self, x):
        H = self.base.hess_log(np.atleast_2d(x) @ self.R)
        return self.R @ H @ self.R.T


def chart_log_density_partials(target: TargetDensity, q, order: int = 1):
    """Partial derivatives of ``log p(phi^{-1}(q))`` in chart coordinates.

    Returns ``(d1, d2)`` for ``order=1`` and ``(d1, d2, d11, d12, d22)`` for
    ``order=2``; each entry has one value per row of ``q``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    q = np.atleast_2d(np.asarray(q, dtype=float))
    x = from_chart_array(q)
    g = target.grad_log(x)
    t1, t2 = chart_jacobian(q)
    d1 = np.sum(g * t1, axis=1)
    d2 = np.sum(g * t2, axis=1)
    if order == 1:
        return d1, d2
    H = target.hess_log(x)
    s11, s12, s22 = chart_hessian(q)
    d11 = np.einsum("ni,nij,nj->n", t1, H, t1) + np.sum(g * s11, axis=1)
    d12 = np.einsum("ni,nij,nj->n", t1, H, t2) + np.sum(g * s12, axis=1)
    d22 = np.einsum("ni,nij,nj->n", t2, H, t2) + np.sum(g * s22, axis=1)
    return d1, d2, d11, d12, d22


def vmf_expected_linear(c, v, m: int = 200) -> float:
    """``E[v . x]`` under vMF(c), by the product-grid reference quadrature."""
    c = np.asarray(c, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(c) == 0.0:
        return 0.0
    from .quadrature import reference_expectation

    return reference_expectation(VonMisesFisher(c), lambda x: x @ v, m)


def parse_target(text: str) -> TargetDensity:
    """Parse ``vmf:<c1>,<c2>,<c3>``."""
    kind, _, rest = text.partition(":")
    if kind.strip().lower() != "vmf":
        raise ConfigError(f"unknown target kind {kind!r}")
    try:
        c = [float(s) for s in rest.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad vmf coefficients {rest!r}") from exc
    if len(c) != 3:
        raise ConfigError("vmf target needs exactly three coefficients")
    return VonMisesFisher(c)
