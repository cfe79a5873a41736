"""Sobolev kernels on S^2 as radial profiles ``psi(u)``, ``u = x . y``.

Every profile returns derivatives ``psi^(j)(u)`` for ``j <= 4`` analytically.
Kernels whose smoothness is finite (k1, k3) have ``psi'''`` or ``psi''''``
singular at ``u = 1``; the Stein kernel only ever needs them multiplied by
powers of ``1 - u^2``, so profiles also expose
``weighted(u, j, k) = (1 - u^2)^k psi^(j)(u)`` which stays finite on the
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import hyp2f1, roots_jacobi

from .errors import ConfigError, InvalidSmoothness, UnsupportedSmoothness
from .special import HypergeomSpec, hypergeom_derivative, pochhammer

MAX_DERIV = 4


def _falling(e: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= e - i
    return out


@dataclass(frozen=True)
class PowerSum:
    """``sum_i coef_i * t^exp_i`` in the chordal variable ``t = 2 - 2u = |x - y|^2``.

    Vanishes identically for ``t > t_max`` when a support bound is given.
    """

    coefs: tuple[float, ...]
    exps: tuple[float, ...]
    t_max: float | None = None

    def _terms(self, j: int):
        for c, e in zip(self.coefs, self.exps):
            if e >= 0 and abs(e - round(e)) < 1e-12 and j > round(e):
                continue
            yield c * _falling(e, j) * (-2.0) ** j, e - j

    def __call__(self, u, j: int = 0, k: int = 0):
        """``(1 - u^2)^k d^j/du^j`` of the sum."""
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        t = np.maximum(2.0 - 2.0 * u, 0.0)
        out = np.zeros_like(t)
        # (1 - u^2)^k = (t / 2)^k (1 + u)^k
        pref = (0.5 * (1.0 + u)) ** k
        with np.errstate(divide="ignore", invalid="ignore"):
            for c, e in self._terms(j):
                out = out + c * t ** (e + k)
        out = out * pref
        if self.t_max is not None:
            out = np.where(t > self.t_max, 0.0, out)
        return out


class RadialProfile:
    """Base class for ``psi(u)``.

    Subclasses implement :meth:`eval`; :meth:`weighted` defaults to the
    plain product, which is fine whenever ``psi`` is ``C^4`` up to ``u = 1``.
    """

    name = "profile"
    sobolev_order: float = math.inf
    length_scale: float | None = None
    rate_is_lower_bound = False

    @property
    def params(self) -> dict:
        return {}

    def eval(self, u, j: int = 0):
        raise NotImplementedError

    def __call__(self, u):
        return self.eval(u, 0)

    def weighted(self, u, j: int, k: int):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        return (1.0 - u * u) ** k * self.eval(u, j)

    def local_scale(self, u) -> float:
        """Distance over which ``psi`` changes appreciably near ``u``; sizes FD steps."""
        return math.inf

    @property
    def regular_order(self) -> int:
        """Highest ``j`` for which ``psi^(j)(1)`` is finite."""
        return MAX_DERIV

    def _guard(self, u, j):
        if not 0 <= j <= MAX_DERIV:
            raise ValueError(f"derivative order must be in 0..{MAX_DERIV}, got {j}")
        if j > self.regular_order and np.any(np.asarray(u) >= 1.0):
            raise UnsupportedSmoothness(
                f"{self.spec()}: psi^({j}) is singular at u = 1; use weighted() there"
            )

    @property
    def required_target_smoothness(self) -> float:
        """``s + 1`` with ``s = alpha - 2``: the ``C^{s+1}`` class needed of ``log p``."""
        return self.sobolev_order - 1.0

    def spec(self) -> str:
        body = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}:{body}" if body else self.name

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()}>"


class PolynomialProfile(RadialProfile):
    """``psi(u) = sum_k a_k u^k``; handy for closed-form checks."""

    name = "poly"

    def __init__(self, coefs):
        self.coefs = np.asarray(coefs, dtype=float)

    def eval(self, u, j=0):
        c = P.polyder(self.coefs, j) if j else self.coefs
        return P.polyval(np.asarray(u, dtype=float), c)


class K1Profile(RadialProfile):
    """``C1 3F2[...; (1 - u)/2] + C2 |x - y|^{2 alpha - 2}``, reproducing ``W_2^alpha(S^d)``."""

    name = "k1"

    def __init__(self, alpha: float, d: int = 2):
        m = alpha + 0.5 - d / 2
        if not (alpha > d / 2 and m >= 1 - 1e-12 and abs(m - round(m)) < 1e-12):
            raise InvalidSmoothness(
                f"k1 needs alpha > d/2 and alpha + 1/2 - d/2 a positive integer (got alpha={alpha}, d={d})"
            )
        self.alpha = float(alpha)
        self.d = int(d)
        self.sobolev_order = self.alpha
        h = d / 2
        self.hyper = HypergeomSpec((h + 0.5 - alpha, h - alpha, h + 0.5 - alpha), (h + 1 - alpha, 1 + h - 2 * alpha))
        self.c1 = (2.0 ** (2 * alpha - 2) / (2 * alpha - d)) * pochhammer(h, 2 * alpha - 2) / pochhammer(d, 2 * alpha - 2)
        nm = int(round(m))
        self.c2 = (
            (-1.0) ** nm
            * 2.0 ** (d - 2 * alpha - 1)
            * math.gamma((d + 1) / 2) * math.gamma(m) ** 2
            / (math.sqrt(math.pi) * math.gamma(h) * pochhammer(0.5, m) * pochhammer(h, m))
        )
        self.power = PowerSum((self.c2,), (alpha - 1.0,))

    @property
    def params(self):
        return {"alpha": self.alpha}

    @property
    def regular_order(self) -> int:
        e = self.alpha - 1.0
        if abs(e - round(e)) < 1e-12:
            return MAX_DERIV
        return min(MAX_DERIV, math.floor(e))

    def _hyper_part(self, u, j):
        s = 0.5 * (1.0 - np.asarray(u, dtype=float))
        return self.c1 * (-0.5) ** j * hypergeom_derivative(self.hyper, s, j)

    def eval(self, u, j=0):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        self._guard(u, j)
        return self._hyper_part(u, j) + self.power(u, j)

    def weighted(self, u, j, k):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        return (1.0 - u * u) ** k * self._hyper_part(u, j) + self.power(u, j, k)


class K2Profile(RadialProfile):
    """Geodesic-type kernel ``Gamma-prefactor * 2F1(1/l, 1/l + 1/2; 2/l + 1/2 + alpha; u)``.

    Its RKHS is not characterised, so the Sobolev order is only a lower bound
    for convergence-rate predictions.
    """

    name = "k2"
    rate_is_lower_bound = True

    def __init__(self, alpha: float, lam: float):
        if not (alpha > 0 and lam > 0):
            raise InvalidSmoothness("k2 needs alpha > 0 and lambda > 0")
        self.alpha = float(alpha)
        self.length_scale = float(lam)
        self.sobolev_order = self.alpha
        a, b, c = 1 / lam, 1 / lam + 0.5, 2 / lam + 0.5 + alpha
        self.prefactor = math.exp(
            math.lgamma(1 / lam + 0.5 + alpha) + math.lgamma(1 / lam + alpha)
            - math.lgamma(2 / lam + 0.5 + alpha) - math.lgamma(alpha)
        )
        self._abc = (a, b, c)

    @property
    def params(self):
        return {"alpha": self.alpha, "lambda": self.length_scale}

    @property
    def regular_order(self) -> int:
        # the singular part behaves like (1 - u)^alpha
        if abs(self.alpha - round(self.alpha)) < 1e-12:
            return min(MAX_DERIV, round(self.alpha) - 1)
        return min(MAX_DERIV, math.floor(self.alpha))

    def _raw(self, u, j):
        a, b, c = self._abc
        factor = pochhammer(a, j) * pochhammer(b, j) / pochhammer(c, j)
        return self.prefactor * factor * hyp2f1(a + j, b + j, c + j, u)

    def eval(self, u, j=0):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        self._guard(u, j)
        return self._raw(u, j)

    def weighted(self, u, j, k):
        # psi^(j) ~ (1 - u)^(alpha - j) at the diagonal, so the weight wins
        # whenever k > 0 and alpha > 2
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        with np.errstate(invalid="ignore"):
            out = (1.0 - u * u) ** k * self._raw(u, j)
        if k > 0:
            out = np.where(u == 1.0, 0.0, out)
        return out


_WENDLAND_3 = {
    # phi_{3,j}(r) = (1 - r)^m * factor(r) / scale on r <= 1 for R^3, with phi(0) = 1
    2: (6, (3.0, 18.0, 35.0), 3.0),
    3: (8, (1.0, 8.0, 25.0, 32.0), 1.0),
}


class K3Profile(RadialProfile):
    """Wendland ``phi_{3,j}(|x - y| / lambda)`` restricted to S^2; ``alpha = j + 3/2``."""

    name = "k3"

    def __init__(self, j: int, lam: float):
        if j not in _WENDLAND_3:
            raise UnsupportedSmoothness(f"k3 supports j in {sorted(_WENDLAND_3)}, got {j}")
        if lam <= 0:
            raise InvalidSmoothness("k3 needs lambda > 0")
        self.j = int(j)
        self.length_scale = float(lam)
        self.sobolev_order = j + 1.5
        m, factor, scale = _WENDLAND_3[j]
        # integer coefficients throughout, so both expansions are exact
        # until the final division by the scale
        self.poly = P.polymul(P.polypow([1.0, -1.0], m), factor) / scale
        coefs, exps = [], []
        for k, pk in enumerate(self.poly):
            if pk != 0.0:
                coefs.append(pk / lam**k)
                exps.append(k / 2)
        self.power = PowerSum(tuple(coefs), tuple(exps), t_max=lam * lam)
        # the same polynomial in s = 1 - r, i.e. s^m factor(1 - s); its low
        # coefficients are exactly zero, so it keeps full relative accuracy
        # near the support edge
        self._poly_s = P.polymul(np.eye(m + 1)[m], _compose_one_minus(factor)) / scale

    @property
    def params(self):
        return {"j": self.j, "lambda": self.length_scale}

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, P.polyval(1.0 - r, self._poly_s), 0.0)

    def _far(self, t, j):
        """``d^j/du^j phi(sqrt(t) / lambda)`` by Faa di Bruno; needs ``t`` bounded away from 0."""
        lam = self.length_scale
        r = np.sqrt(t) / lam
        s = 1.0 - r
        dphi = [P.polyval(s, P.polyder(self._poly_s, k)) * (-1.0) ** k for k in range(j + 1)]
        if j == 0:
            return dphi[0]
        dr = [None] + [(-2.0) ** i * _falling(0.5, i) * t ** (0.5 - i) / lam for i in range(1, j + 1)]
        if j == 1:
            return dphi[1] * dr[1]
        if j == 2:
            return dphi[2] * dr[1] ** 2 + dphi[1] * dr[2]
        if j == 3:
            return dphi[3] * dr[1] ** 3 + 3 * dphi[2] * dr[1] * dr[2] + dphi[1] * dr[3]
        return (
            dphi[4] * dr[1] ** 4
            + 6 * dphi[3] * dr[1] ** 2 * dr[2]
            + dphi[2] * (3 * dr[2] ** 2 + 4 * dr[1] * dr[3])
            + dphi[1] * dr[4]
        )

    _SWITCH_R = 0.25

    def local_scale(self, u) -> float:
        r = math.sqrt(max(2.0 - 2.0 * float(u), 0.0)) / self.length_scale
        return self.length_scale * max(1.0 - r, 1e-3)

    def weighted(self, u, j, k):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        t = np.maximum(2.0 - 2.0 * u, 0.0)
        lam = self.length_scale
        near = t < (self._SWITCH_R * lam) ** 2
        out = np.zeros_like(t)
        if np.any(near):
            out[near] = self.power(u[near], j, k)
        far = ~near & (t < lam * lam)
        if np.any(far):
            uf = u[far]
            out[far] = (1.0 - uf * uf) ** k * self._far(t[far], j)
        return out

    @property
    def regular_order(self) -> int:
        # phi_{3,j} is C^{2j} in r, hence C^j in u at r = 0
        return self.j

    def eval(self, u, j=0):
        u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
        self._guard(u, j)
        return self.weighted(u, j, 0)


def _compose_one_minus(poly):
    """Coefficients of ``q(s) = poly(1 - s)``."""
    out = np.zeros(1)
    basis = np.ones(1)
    for c in poly:
        out = P.polyadd(out, c * basis)
        basis = P.polymul(basis, [1.0, -1.0])
    return out


def profile_k1(alpha: float, d: int = 2) -> K1Profile:
    return K1Profile(alpha, d)


def profile_k2(alpha: float, lam: float) -> K2Profile:
    return K2Profile(alpha, lam)


def profile_k3(j: int, lam: float) -> K3Profile:
    return K3Profile(j, lam)


def parse_kernel(text: str) -> RadialProfile:
    """Parse ``k1:alpha=3.5``, ``k2:alpha=5.5,lambda=1`` or ``k3:j=2,lambda=2``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    kw = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"expected key=value in kernel spec, got {item!r}")
        try:
            kw[key.strip().lower()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad number in kernel spec: {item!r}") from exc
    try:
        if kind == "k1":
            return profile_k1(kw["alpha"])
        if kind == "k2":
            return profile_k2(kw["alpha"], kw.get("lambda", 1.0))
        if kind == "k3":
            return profile_k3(int(kw["j"]), kw.get("lambda", 2.0))
    except KeyError as exc:
        raise ConfigError(f"kernel {kind} is missing parameter {exc}") from exc
    except (InvalidSmoothness, UnsupportedSmoothness) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown kernel {kind!r}")


# --------------------------------------------------------------- Schoenberg

@dataclass
class SchoenbergDiagnostic:
    coefficients: np.ndarray
    dimension: int = 2

    def decay_exponent(self, n_min: int = 4, n_max: int = 40) -> float:
        """Least-squares slope of ``log b_n`` against ``log n``."""
        n = np.arange(n_min, n_max + 1)
        b = self.coefficients[n]
        return float(np.polyfit(np.log(n), np.log(np.abs(b)), 1)[0])

    @property
    def harmonic_eigenvalues(self) -> np.ndarray:
        """Per-harmonic Mercer eigenvalues ``4 pi b_n / (2n + 1)`` of the kernel on S^2.

        These, not ``b_n``, decay like ``n^{-2 alpha}`` for a kernel reproducing
        ``W_2^alpha(S^2)``: ``b_n`` carries the extra ``2n + 1`` multiplicity.
        """
        n = np.arange(len(self.coefficients))
        return 4 * np.pi * self.coefficients / (2 * n + 1)

    def sobolev_exponent(self, n_min: int = 4, n_max: int = 40) -> float:
        """Slope of ``log`` harmonic eigenvalue against ``log n``; about ``-2 alpha``."""
        n = np.arange(n_min, n_max + 1)
        lam = self.harmonic_eigenvalues[n]
        return float(np.polyfit(np.log(n), np.log(np.abs(lam)), 1)[0])


def _legendre_table(u, N):
    out = np.empty((N + 1, len(u)))
    out[0] = 1.0
    if N >= 1:
        out[1] = u
    for n in range(2, N + 1):
        out[n] = ((2 * n - 1) * u * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def schoenberg_coefficients(profile, N: int, order: int | None = None) -> SchoenbergDiagnostic:
    """Legendre coefficients ``b_n`` with ``psi(u) = sum_n b_n P_n(u)`` (so ``sum b_n = psi(1)``).

    Fractional powers of ``1 - u`` carried by a profile's ``power`` part are
    projected with Gauss-Jacobi rules matched to each exponent; everything
    else goes through Gauss-Legendre of order at least ``4N``.
    """
    if N > 200:
        raise ValueError("N must be <= 200")
    order = max(order or 0, 4 * N, 512)
    u, w = np.polynomial.legendre.leggauss(order)
    power = getattr(profile, "power", None)
    split = isinstance(power, PowerSum) and (power.t_max is None or power.t_max >= 4.0)
    if isinstance(profile, RadialProfile):
        f = profile.eval(u, 0)
    else:
        f = profile(u)
    f = np.asarray(f, dtype=float) * np.ones_like(u)
    if split:
        f = f - power(u, 0)
    norm = 0.5 * (2 * np.arange(N + 1) + 1)
    b = norm * (_legendre_table(u, N) @ (w * f))
    if split:
        for c, e in zip(power.coefs, power.exps):
            # c (2 - 2u)^e = c 2^e (1 - u)^e, integrated against the Jacobi weight (1 - u)^e
            uj, wj = roots_jacobi(order, e, 0.0)
            b += norm * c * 2.0**e * (_legendre_table(uj, N) @ wj)
    return SchoenbergDiagnostic(b, 2)
