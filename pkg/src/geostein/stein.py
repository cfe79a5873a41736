"""The Riemannian-Stein operator on S^2 and the Stein kernel it induces.

For a target ``p`` the operator is ``tau h = div(p grad h) / p``, i.e.
``Laplace-Beltrami(h) + <grad log p, grad h>``. Applied to both arguments of
a radial kernel ``psi(x . y)`` it yields the Stein kernel ``k_P``; the
closed form below needs ``psi`` up to its fourth derivative and only the
(ambient) gradient of ``log p``. A nested finite-difference realisation of
the chart formula is kept alongside as an independent oracle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree

from .errors import ChartDomainError, DuplicatePoints, FactorizationFailure, UnsupportedTarget
from .sphere import (
    ChartPoint,
    chart_hessian,
    chart_jacobian,
    chart_safe_rotation,
    from_chart_array,
    geodesic_distance,
    to_chart_array,
)
from .targets import TargetDensity, chart_log_density_partials

log = logging.getLogger(__name__)


class OperatorVariant(enum.Enum):
    # div(p grad h) / p
    DIVERGENCE = "divergence"
    # (grad h)(p) / p + Laplacian(h): the f = p, s = grad h member of the
    # "integrates to zero" family; algebraically the same operator
    PRODUCT = "product"


@dataclass(frozen=True)
class SteinOperatorConfig:
    target: TargetDensity
    variant: OperatorVariant = OperatorVariant.DIVERGENCE
    fd_step: float = 1e-4

    def __post_init__(self):
        if not 1e-6 <= self.fd_step <= 1e-2:
            raise ValueError("fd_step must lie in [1e-6, 1e-2]")
        if not isinstance(self.variant, OperatorVariant):
            object.__setattr__(self, "variant", OperatorVariant(self.variant))


@dataclass(frozen=True)
class TestFunction:
    """A smooth function on S^2 given through its ambient extension.

    ``value``, ``grad`` and ``hess`` map ``(n, 3)`` points to ``(n,)``,
    ``(n, 3)`` and ``(n, 3, 3)`` arrays.
    """

    __test__ = False  # not a pytest class

    value: Callable
    grad: Callable
    hess: Callable
    name: str = "h"

    def __call__(self, x):
        return self.value(np.atleast_2d(x))


def _as_points(x) -> np.ndarray:
    if isinstance(x, ChartPoint):
        return from_chart_array([x.q1, x.q2])
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], ChartPoint):
        return from_chart_array([[q.q1, q.q2] for q in x])
    return np.atleast_2d(np.asarray(x, dtype=float))


def _chart_partials_fd(h: Callable, q: np.ndarray, step: float, points: int = 3):
    """Central differences of ``h(phi^{-1}(q))``: ``(h1, h2, h11, h22)``.

    ``points`` selects the 3-point (``O(step^2)``) or 5-point (``O(step^4)``)
    stencil.
    """
    if points not in (3, 5):
        raise ValueError("stencil must have 3 or 5 points")
    f0 = h(from_chart_array(q))
    out = []
    for axis in (0, 1):
        e = np.zeros(2)
        e[axis] = step
        fp, fm = h(from_chart_array(q + e)), h(from_chart_array(q - e))
        if points == 3:
            d1 = (fp - fm) / (2 * step)
            d2 = (fp - 2 * f0 + fm) / step**2
        else:
            fpp, fmm = h(from_chart_array(q + 2 * e)), h(from_chart_array(q - 2 * e))
            d1 = (8 * (fp - fm) - (fpp - fmm)) / (12 * step)
            d2 = (16 * (fp + fm) - (fpp + fmm) - 30 * f0) / (12 * step**2)
        out.append((d1, d2))
    (h1, h11), (h2, h22) = out
    return h1, h2, h11, h22


def _chart_partials_exact(h: TestFunction, q: np.ndarray):
    x = from_chart_array(q)
    g = np.atleast_2d(h.grad(x))
    H = np.atleast_3d(h.hess(x)).reshape(len(x), 3, 3)
    t1, t2 = chart_jacobian(q)
    s11, _, s22 = chart_hessian(q)
    h1 = np.sum(g * t1, axis=1)
    h2 = np.sum(g * t2, axis=1)
    h11 = np.einsum("ni,nij,nj->n", t1, H, t1) + np.sum(g * s11, axis=1)
    h22 = np.einsum("ni,nij,nj->n", t2, H, t2) + np.sum(g * s22, axis=1)
    return h1, h2, h11, h22


def tau_from_chart_partials(q, lp1, lp2, h1, h2, h11, h22):
    """The operator written in the spherical chart."""
    q2 = np.asarray(q)[:, 1]
    s, c = np.sin(q2), np.cos(q2)
    return (c / s) * h2 + (lp1 * h1 + h11) / (s * s) + (lp2 * h2 + h22)


def apply_tau_chart(cfg: SteinOperatorConfig, h, points, step: float | None = None,
                    stencil: int = 3) -> np.ndarray:
    """Evaluate ``tau h`` at ``points`` through the chart formula.

    ``h`` is a :class:`TestFunction` (exact chart partials by the chain rule)
    or any callable on ``(n, 3)`` arrays (central differences with
    ``step`` or ``cfg.fd_step`` and a ``stencil``-point rule). Points must be
    inside the chart.
    """
    x = _as_points(points)
    q = to_chart_array(x)
    lp1, lp2 = chart_log_density_partials(cfg.target, q, order=1)
    if isinstance(h, TestFunction):
        parts = _chart_partials_exact(h, q)
    else:
        parts = _chart_partials_fd(h, q, step or cfg.fd_step, stencil)
    return tau_from_chart_partials(q, lp1, lp2, *parts)


def apply_tau_ambient(cfg: SteinOperatorConfig, h: TestFunction, points) -> np.ndarray:
    """``tau h`` from ambient derivatives; valid everywhere including the poles.

    The Laplace-Beltrami operator of an ambient extension on the unit sphere
    is ``tr H - x^T H x - 2 x . grad h``.
    """
    x = _as_points(points)
    g = np.atleast_2d(h.grad(x))
    H = np.asarray(h.hess(x)).reshape(len(x), 3, 3)
    glp = cfg.target.grad_log(x)
    xg = np.sum(x * g, axis=1)
    lap = np.trace(H, axis1=1, axis2=2) - np.einsum("ni,nij,nj->n", x, H, x) - 2 * xg
    if cfg.variant is OperatorVariant.PRODUCT:
        # grad h (p) / p with the tangential projection made explicit
        tg = g - xg[:, None] * x
        return lap + np.sum(tg * glp, axis=1)
    # <P grad log p, P grad h> with P = I - x x^T
    return lap + np.sum(glp * g, axis=1) - np.sum(x * glp, axis=1) * xg


def _check_gradient_target(target):
    if not callable(getattr(target, "grad_log", None)):
        raise UnsupportedTarget(f"{target!r} does not provide grad_log")


def tau_x_kernel(cfg: SteinOperatorConfig, profile, x, y) -> np.ndarray:
    """``tau`` applied in the first argument of ``psi(x . y)``; broadcasts over rows."""
    _check_gradient_target(cfg.target)
    x = _as_points(x)
    y = _as_points(y)
    gx = cfg.target.grad_log(x)
    u = np.sum(x * y, axis=-1)
    a = np.sum(gx * x, axis=-1)
    b = np.sum(gx * y, axis=-1)
    d1 = profile.eval(u, 1)
    out = profile.weighted(u, 2, 1) - 2 * u * d1 + d1 * (b - u * a)
    return out if out.size > 1 else out.reshape(-1)[0]


def _stein_combine(profile, u, a, beta, a2, b2, gg):
    """Closed form of ``tau_y tau_x psi(x . y)`` from the scalar invariants.

    ``a = g(x).x``, ``beta = g(x).y``, ``a2 = g(y).x``, ``b2 = g(y).y``,
    ``gg = g(x).g(y)`` with ``g`` the ambient gradient of ``log p``.
    """
    w = 1.0 - u * u
    d1 = profile.eval(u, 1)
    d2 = profile.eval(u, 2)
    w3 = profile.weighted(u, 3, 1)
    w4 = profile.weighted(u, 4, 2)
    m = a2 - u * b2 - 2 * u
    out = w4
    out = out + w3 * (beta + a2 - u * (8.0 + a + b2))
    out = out + d2 * (-w * (6.0 + 2 * a) + 2 * (a - u * beta) + m * (beta - (4.0 + a) * u))
    out = out + d1 * (-m * (2.0 + a) + gg - b2 * beta - 2 * beta)
    return out


def stein_kernel(cfg: SteinOperatorConfig, profile, x, y) -> np.ndarray:
    """``k_P(x, y)`` for paired rows of ``x`` and ``y``."""
    _check_gradient_target(cfg.target)
    x = _as_points(x)
    y = _as_points(y)
    x, y = np.broadcast_arrays(x, y)
    gx = cfg.target.grad_log(x)
    gy = cfg.target.grad_log(y)
    s = lambda p, r: np.sum(p * r, axis=-1)  # noqa: E731
    u = np.clip(s(x, y), -1.0, 1.0)
    out = _stein_combine(profile, u, s(gx, x), s(gx, y), s(gy, x), s(gy, y), s(gx, gy))
    return out if out.size > 1 else out.reshape(-1)[0]


def stein_kernel_matrix(target: TargetDensity, profile, X, Y=None) -> np.ndarray:
    """Cross matrix ``[k_P(x_i, y_j)]``."""
    _check_gradient_target(target)
    X = _as_points(X)
    sym = Y is None
    Y = X if sym else _as_points(Y)
    gx = target.grad_log(X)
    gy = gx if sym else target.grad_log(Y)
    U = np.clip(X @ Y.T, -1.0, 1.0)
    if sym:
        np.fill_diagonal(U, 1.0)
    a = np.sum(gx * X, axis=1)[:, None]
    b2 = np.sum(gy * Y, axis=1)[None, :]
    K = _stein_combine(profile, U, a, gx @ Y.T, X @ gy.T, b2, gx @ gy.T)
    if sym:
        K = 0.5 * (K + K.T)
    return K


# ------------------------------------------------------------ FD oracle

NESTED_STEP = 8e-2
# the default oracle step is halved this many times before choosing
NESTED_LEVELS = 4


def _stencil(q, step):
    """Chart points of the 5-point stencil: centre, then +-1, +-2 steps along q1 and along q2."""
    offs = np.array([[0, 0], [1, 0], [-1, 0], [2, 0], [-2, 0], [0, 1], [0, -1], [0, 2], [0, -2]], dtype=float)
    return q + step * offs


def _tau_from_stencil(q, lp, vals, step):
    """``tau`` at the stencil centre ``q`` from values on its 9 points (leading axis)."""
    out = []
    for a in (0, 1):
        fp, fm, fpp, fmm = vals[1 + 4 * a], vals[2 + 4 * a], vals[3 + 4 * a], vals[4 + 4 * a]
        d1 = (8 * (fp - fm) - (fpp - fmm)) / (12 * step)
        d2 = (16 * (fp + fm) - (fpp + fmm) - 30 * vals[0]) / (12 * step**2)
        out.append((d1, d2))
    (h1, h11), (h2, h22) = out
    return tau_from_chart_partials(q, lp[0], lp[1], h1, h2, h11, h22)


def _nested_fd(target, profile, x, y, step):
    """``tau_y tau_x psi(x . y)`` from one 9 x 9 table of profile values."""
    qx, qy = to_chart_array(x), to_chart_array(y)
    X9 = from_chart_array(_stencil(qx, step))
    Y9 = from_chart_array(_stencil(qy, step))
    psi = profile.eval(np.clip(X9 @ Y9.T, -1.0, 1.0), 0)
    # inner: tau in x for each of the 9 stencil points in y
    inner = _tau_from_stencil(qx, chart_log_density_partials(target, qx), psi, step)
    return float(_tau_from_stencil(qy, chart_log_density_partials(target, qy), inner, step)[0])


def stein_kernel_fd(cfg: SteinOperatorConfig, profile, x, y, step: float | None = None) -> float:
    """``k_P(x, y)`` by nested central differences of the chart formula.

    Both points are first rotated (together with the target) well inside the
    chart, and every partial derivative uses the 5-point central stencil.
    One Richardson step on ``h`` and ``h / 2`` lifts the ``O(h^4)`` scheme to
    ``O(h^6)``; round-off grows like ``eps / h^4``.

    With an explicit ``step`` that single extrapolation is returned. Without
    one, the starting step is capped by the profile's local scale (compactly
    supported kernels stay resolved near their support edge) and by an
    eighth of the distance between ``x`` and ``y`` (the nested stencil moves
    the points up to ``4 h`` towards each other, and finite-smoothness
    profiles are singular at ``x = y``). It is then halved repeatedly and
    the extrapolation that best agrees with its successor is returned, which
    balances truncation against round-off.
    """
    x = _as_points(x)[0]
    y = _as_points(y)[0]
    R = chart_safe_rotation(np.vstack([x, y]))
    target = cfg.target.rotated(R)
    xr, yr = (R @ x)[None, :], (R @ y)[None, :]
    if step is not None:
        coarse = _nested_fd(target, profile, xr, yr, step)
        fine = _nested_fd(target, profile, xr, yr, step / 2)
        return (16 * fine - coarse) / 15
    h = min(NESTED_STEP, 0.2 * profile.local_scale(float(x @ y)), geodesic_distance(x, y) / 8)
    nested = [_nested_fd(target, profile, xr, yr, h / 2**k) for k in range(NESTED_LEVELS)]
    rich = [(16 * f - c) / 15 for c, f in zip(nested, nested[1:])]
    gaps = [abs(b - a) for a, b in zip(rich, rich[1:])]
    k = int(np.argmin(gaps))
    return float(rich[k])


# ------------------------------------------------------------ assembly

@dataclass
class SteinKernelMatrix:
    """``K_P`` with the Cholesky factor used for every downstream solve."""

    entries: np.ndarray
    jitter: float = 0.0
    jitter_relative: float = 0.0
    factor: tuple | None = field(default=None, repr=False)
    min_pivot_ratio: float = float("nan")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def solve(self, b) -> np.ndarray:
        if self.factor is None:
            raise FactorizationFailure("matrix has not been factorized")
        return linalg.cho_solve(self.factor, np.asarray(b, dtype=float))


# Below this, min(L_ii^2) / max(K_ii) signals a factor no better than round-off.
PIVOT_FLOOR = 1e-15
JITTER_START = 1e-10
JITTER_DOUBLINGS = 20


def check_distinct(X, tol: float = 1e-8) -> None:
    pairs = cKDTree(X).query_pairs(tol, output_type="ndarray")
    if len(pairs):
        i, j = pairs[0]
        raise DuplicatePoints(f"points {i} and {j} are closer than {tol}")


def _try_cholesky(A):
    try:
        c, lower = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError:
        return None, 0.0
    piv = np.diag(c) ** 2
    return (c, lower), float(piv.min() / np.max(np.diag(A)))


def factorize(K: np.ndarray, pivot_floor: float = PIVOT_FLOOR) -> SteinKernelMatrix:
    """Cholesky with the escalating-jitter fallback.

    A factorization counts as failed when LAPACK rejects it or when the
    smallest squared pivot drops below ``pivot_floor`` times the largest
    diagonal entry. Jitter ``eps * mean(diag)`` starts at ``eps = 1e-10`` and
    doubles at most 20 times.
    """
    K = np.asarray(K, dtype=float)
    factor, ratio = _try_cholesky(K)
    if factor is not None and ratio >= pivot_floor:
        return SteinKernelMatrix(K, 0.0, 0.0, factor, ratio)
    scale = float(np.mean(np.diag(K)))
    eps = JITTER_START
    for _ in range(JITTER_DOUBLINGS + 1):
        Kj = K + eps * scale * np.eye(len(K))
        factor, ratio = _try_cholesky(Kj)
        if factor is not None and ratio >= pivot_floor:
            log.info("K_P needed jitter %.3g x mean diagonal (n=%d)", eps, len(K))
            return SteinKernelMatrix(K, eps * scale, eps, factor, ratio)
        eps *= 2
    raise FactorizationFailure(
        f"K_P (n={len(K)}) not factorizable after {JITTER_DOUBLINGS} jitter doublings; numerically singular"
    )


def assemble_KP(cfg: SteinOperatorConfig, profile, X) -> SteinKernelMatrix:
    X = _as_points(X)
    check_distinct(X)
    K = stein_kernel_matrix(cfg.target, profile, X)
    return factorize(K)
