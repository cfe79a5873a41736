"""Reference integration on S^2 with a Gauss-Legendre x trapezoid product grid.

This is the ground truth the rest of the package is checked against; it is
allowed to use the normalising constant that the Stein method never sees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

REFERENCE_M = 200


@dataclass(frozen=True)
class ProductGrid:
    """``m`` Gauss-Legendre nodes in ``cos q2`` times ``2m`` equispaced longitudes.

    Exact for spherical harmonics up to degree ``2m - 1``. Longitudes are
    offset by half a step so no node lands on the chart seam.
    """

    points: np.ndarray
    weights: np.ndarray
    resolution: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=8)
def product_grid(m: int) -> ProductGrid:
    if m < 4:
        raise ValueError("product grid resolution must be at least 4")
    t, wt = np.polynomial.legendre.leggauss(m)
    n_phi = 2 * m
    phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
    T, P = np.meshgrid(t, phi, indexing="ij")
    S = np.sqrt(1.0 - T**2)
    pts = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), T.ravel()])
    w = np.repeat(wt * (2 * np.pi / n_phi), n_phi)
    pts.setflags(write=False)
    w.setflags(write=False)
    return ProductGrid(pts, w, m)


def reference_integral(f, m: int = REFERENCE_M) -> float:
    """``int f dV`` over S^2 (so ``f = 1`` gives ``4 pi``)."""
    g = product_grid(m)
    return float(np.dot(g.weights, np.asarray(f(g.points), dtype=float)))


def reference_expectation(target, f, m: int = REFERENCE_M) -> float:
    """``E_P[f]`` as a ratio of two reference integrals of the unnormalised density."""
    g = product_grid(m)
    logp = target.log_density(g.points)
    dens = np.exp(logp - logp.max())
    vals = np.asarray(f(g.points), dtype=float)
    return float(np.dot(g.weights, dens * vals) / np.dot(g.weights, dens))


def stein_identity_residual(target, h, m: int = REFERENCE_M) -> float:
    """``|E_P[tau h]| / E_P[|tau h|]``, which vanishes for an exact Stein pair.

    ``h`` is either a :class:`~geostein.stein.TestFunction` (evaluated with
    exact chart partials) or a plain callable (chart partials by central
    differences).
    """
    from .stein import apply_tau_chart, SteinOperatorConfig

    g = product_grid(m)
    cfg = SteinOperatorConfig(target)
    vals = apply_tau_chart(cfg, h, g.points)
    logp = target.log_density(g.points)
    dens = np.exp(logp - logp.max()) * g.weights
    denom = float(np.dot(dens, np.abs(vals)))
    if denom == 0.0:
        return 0.0
    return abs(float(np.dot(dens, vals))) / denom
