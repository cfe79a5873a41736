"""Point sets on S^2: Fibonacci lattice, Riesz-energy descent, i.i.d. uniform and MH chains.

All generators return ``(n, 3)`` arrays of unit vectors. The stochastic ones
take a seed and reproduce bit-for-bit on one build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sphere import normalize

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

# MH duplicates are pushed this far (geodesically) off their representative.
DEDUP_STEP = 1e-7
_DEDUP_RING = 24


@dataclass(frozen=True)
class RngSeed:
    seed: int

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), stream])


def _rng(seed, stream: int = 0) -> np.random.Generator:
    if not isinstance(seed, RngSeed):
        seed = RngSeed(int(seed))
    return seed.generator(stream)


@dataclass(frozen=True)
class ChainDiagnostics:
    acceptance_rate: float
    chain_length: int
    burn_in: int
    accepted: int
    duplicates_perturbed: int = 0


def fibonacci_points(n: int) -> np.ndarray:
    """Spherical Fibonacci lattice with ``n`` points (equal-area latitude bands)."""
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = GOLDEN_ANGLE * np.arange(n)
    return normalize(np.column_stack([r * np.cos(phi), r * np.sin(phi), z]))


def iid_uniform(n: int, seed=0) -> np.ndarray:
    """Normalised triples of standard normals, i.e. uniform on S^2."""
    if n < 1:
        raise ValueError("need at least one point")
    return normalize(_rng(seed).standard_normal((n, 3)))


def riesz_energy(X, s: float = 1.0) -> float:
    """``sum_{i != j} |x_i - x_j|^{-s}``."""
    X = np.asarray(X, dtype=float)
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sum(d2 ** (-s / 2)))


def _riesz_energy_grad(X, s):
    # rows of X are unit vectors, so |x_i - x_j|^2 = 2 - 2 x_i . x_j
    d2 = np.maximum(2.0 - 2.0 * (X @ X.T), 1e-300)
    np.fill_diagonal(d2, np.inf)
    p = d2 ** (-s / 2)
    energy = float(p.sum())
    # each unordered pair appears twice in the energy
    coef = -2.0 * s * p / d2
    grad = coef.sum(axis=1)[:, None] * X - coef @ X
    return energy, grad


def riesz_minimize(n: int, s_riesz: float = 1.0, iters: int = 500, seed=0,
                   return_trace: bool = False):
    """Projected gradient descent on the Riesz ``s``-energy.

    Starts from a slightly jittered Fibonacci lattice. Each step moves along
    the tangential part of the Euclidean gradient and renormalises onto the
    sphere; the step length is backtracked until the energy does not
    increase, so the trace of accepted energies is non-increasing.

    Returns the points, and the energy trace when ``return_trace`` is set.
    """
    if n < 2:
        raise ValueError("Riesz descent needs n >= 2")
    if s_riesz <= 0:
        raise ValueError("Riesz exponent must be positive")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    rng = _rng(seed)
    X = normalize(fibonacci_points(n) + 1e-3 * rng.standard_normal((n, 3)))
    energy, grad = _riesz_energy_grad(X, s_riesz)
    trace = [energy]
    # initial step: move the typical point by ~ 1% of the mean spacing
    spacing = math.sqrt(4 * math.pi / n)
    tg = grad - np.sum(grad * X, axis=1, keepdims=True) * X
    step = 0.01 * spacing / max(float(np.sqrt(np.mean(np.sum(tg**2, axis=1)))), 1e-300)
    for _ in range(iters):
        tg = grad - np.sum(grad * X, axis=1, keepdims=True) * X
        if not np.any(tg):
            break
        for _ in range(40):
            Y = normalize(X - step * tg)
            e_new, g_new = _riesz_energy_grad(Y, s_riesz)
            if e_new <= energy:
                break
            step *= 0.5
        else:
            break  # no decrease at any tried step: converged to round-off
        X, energy, grad = Y, e_new, g_new
        trace.append(energy)
        step *= 1.5
    if return_trace:
        return X, np.array(trace)
    return X


def _tangent_basis(x):
    a = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = normalize(np.cross(x, a))
    return e1, np.cross(x, e1)


def _dedup_chain(X, rng):
    """Spread runs of repeated MH states around their representative.

    The ``k``-th repeat in a run moves a geodesic distance
    ``DEDUP_STEP * (1 + k // 24)`` along one of 24 evenly spaced tangent
    directions whose common offset angle is drawn from ``rng``.
    """
    X = X.copy()
    n_moved = 0
    i = 0
    while i < len(X):
        j = i + 1
        while j < len(X) and np.array_equal(X[j], X[i]):
            j += 1
        if j - i > 1:
            base = X[i]
            e1, e2 = _tangent_basis(base)
            offset = rng.uniform(0.0, 2 * np.pi)
            for k in range(j - i - 1):
                ang = offset + 2 * np.pi * (k % _DEDUP_RING) / _DEDUP_RING
                t = DEDUP_STEP * (1 + k // _DEDUP_RING)
                v = np.cos(ang) * e1 + np.sin(ang) * e2
                X[i + 1 + k] = normalize(np.cos(t) * base + np.sin(t) * v)
                n_moved += 1
        i = j
    return X, n_moved


def mh_chain(target, n: int, burn_in: int | None = None, seed=0, dedup: bool = True):
    """Independence Metropolis-Hastings with the uniform measure as proposal.

    The chain starts at a uniform draw, runs ``burn_in + n`` transitions and
    keeps the last ``n`` states. With ``dedup`` the repeated states produced
    by rejections are perturbed apart so the kernel matrix stays nonsingular.

    Returns
    -------
    points : ndarray, shape (n, 3)
    diagnostics : ChainDiagnostics
    """
    if n < 1:
        raise ValueError("need at least one point")
    if burn_in is None:
        burn_in = n // 10
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = _rng(seed)
    total = burn_in + n
    proposals = normalize(rng.standard_normal((total + 1, 3)))
    log_u = np.log(rng.uniform(size=total))
    logp = target.log_density(proposals)

    cur, cur_lp = proposals[0], logp[0]
    states = np.empty((total, 3))
    accepted = 0
    for t in range(total):
        if log_u[t] < logp[t + 1] - cur_lp:
            cur, cur_lp = proposals[t + 1], logp[t + 1]
            accepted += 1
        states[t] = cur
    X = states[burn_in:]
    moved = 0
    if dedup:
        X, moved = _dedup_chain(X, _rng(seed, stream=1))
    diag = ChainDiagnostics(accepted / total, total, burn_in, accepted, moved)
    return X, diag
