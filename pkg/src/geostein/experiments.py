"""Convergence sweeps: point sets x sizes x seeds -> KSD and integration error.

Results stream to a flat CSV, one row per ``(n, seed)`` cell. A failing
cell (singular ``K_P``, degenerate system) becomes a row flagged
``unstable`` instead of aborting the sweep; jitter that rescued a
factorization is reported in its own column and does not flag the row.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .cubature import SigmaEstimatorConfig, integrate, integrate_sigma, solve_weights
from .errors import (
    ConfigError,
    DegenerateSystem,
    FactorizationFailure,
    GeosteinError,
    InsufficientData,
    UnknownIntegrand,
)
from .kernels import parse_kernel
from .points import fibonacci_points, iid_uniform, mh_chain, riesz_minimize
from .quadrature import REFERENCE_M, reference_expectation
from .sphere import estimate_fill_distance, from_chart_array, write_points
from .stein import SteinOperatorConfig, assemble_KP, stein_kernel_matrix
from .targets import VonMisesFisher, parse_target

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "n", "seed", "kernel", "alpha", "lambda", "points", "ksd", "estimate", "truth",
    "abs_error", "fill_distance", "jitter", "flag", "wall_ms",
)
POINT_REGIMES = ("fibonacci", "riesz", "iid", "mcmc")
DEFAULT_TARGET = "vmf:0,0,2"


def default_integrand(name: str, target=None):
    """Named test integrands.

    ``rosenbrock`` is ``(x2 - x1^2)^2 + (1 - x1)^2`` evaluated on the sphere;
    ``linear`` is ``c . x / |c|`` for a vMF target (``x3`` otherwise);
    ``constant`` is 1.
    """
    key = name.strip().lower()
    if key == "rosenbrock":
        return lambda X: (X[:, 1] - X[:, 0] ** 2) ** 2 + (1.0 - X[:, 0]) ** 2
    if key == "linear":
        if isinstance(target, VonMisesFisher) and target.kappa > 0:
            v = target.c / target.kappa
        else:
            v = np.array([0.0, 0.0, 1.0])
        return lambda X: X @ v
    if key == "constant":
        return lambda X: np.ones(len(X))
    raise UnknownIntegrand(f"unknown integrand {name!r}; choose rosenbrock, linear or constant")


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: str
    target: str = DEFAULT_TARGET
    points: str = "fibonacci"
    n_grid: tuple[int, ...] = (50, 100, 200, 400, 800)
    seeds: tuple[int, ...] = (0,)
    integrand: str = "rosenbrock"
    sigma: float | None = None
    burn_in: int | None = None
    riesz_iters: int = 500
    output: str | None = None
    points_dir: str | None = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid):
            raise ConfigError("n grid must be non-empty and positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds or any(s < 0 for s in seeds):
            raise ConfigError("seeds must be non-negative integers")
        object.__setattr__(self, "seeds", seeds)
        if self.points not in POINT_REGIMES:
            raise ConfigError(f"unknown point regime {self.points!r}; choose from {', '.join(POINT_REGIMES)}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError("sigma must be finite and positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn-in must be non-negative")
        # fail early on unparsable specs
        self.profile()
        self.target_density()
        try:
            default_integrand(self.integrand)
        except UnknownIntegrand as exc:
            raise ConfigError(str(exc)) from exc

    def profile(self):
        return parse_kernel(self.kernel)

    def target_density(self):
        return parse_target(self.target)

    def metadata(self) -> dict:
        return asdict(self)


@dataclass
class ConvergenceRecord:
    n: int
    seed: int
    kernel: str
    alpha: float
    lam: float | None
    points: str
    ksd: float
    estimate: float
    truth: float
    abs_error: float
    fill_distance: float
    jitter: float
    flag: str = ""
    wall_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.flag == ""

    def row(self) -> list[str]:
        def num(v):
            if v is None:
                return ""
            return repr(float(v))

        return [
            str(self.n), str(self.seed), self.kernel, num(self.alpha), num(self.lam), self.points,
            num(self.ksd), num(self.estimate), num(self.truth), num(self.abs_error),
            num(self.fill_distance), num(self.jitter), self.flag, f"{self.wall_ms:.1f}",
        ]


def generate_points(regime: str, n: int, seed: int, target=None, burn_in=None, riesz_iters=500):
    if regime == "fibonacci":
        return fibonacci_points(n)
    if regime == "riesz":
        return riesz_minimize(n, 1.0, riesz_iters, seed) if n > 1 else fibonacci_points(1)
    if regime == "iid":
        return iid_uniform(n, seed)
    if regime == "mcmc":
        X, diag = mh_chain(target, n, burn_in, seed)
        log.debug("mh chain n=%d seed=%d acceptance=%.3f", n, seed, diag.acceptance_rate)
        return X
    raise ConfigError(f"unknown point regime {regime!r}")


def _fill_probe(n: int) -> int:
    return max(10_000, 8 * n)


class _RowWriter:
    """Appends CSV rows one ``write`` call at a time so a crash never leaves half a row."""

    def __init__(self, path, meta: dict):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S")
        with open(self.path, "w", newline="") as fh:
            fh.write(f"# geostein run {stamp} {json.dumps(meta, sort_keys=True)}\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")

    def append(self, rec: ConvergenceRecord):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(rec.row())
        with open(self.path, "a", newline="") as fh:
            fh.write(buf.getvalue())
            fh.flush()
            os.fsync(fh.fileno())


def run_convergence(config: ExperimentConfig, progress=None) -> list[ConvergenceRecord]:
    """Run every ``(n, seed)`` cell of the sweep in order.

    Rows are appended to ``config.output`` (when set) as soon as each cell
    finishes. Deterministic regimes (``fibonacci``) still run once per
    seed so every sweep has the same shape.
    """
    profile = config.profile()
    target = config.target_density()
    target.check_smoothness(profile.required_target_smoothness)
    cfg = SteinOperatorConfig(target)
    f = default_integrand(config.integrand, target)
    truth = reference_expectation(target, f, REFERENCE_M)
    lam = getattr(profile, "length_scale", None)
    sigma_cfg = SigmaEstimatorConfig(config.sigma) if config.sigma is not None else None
    writer = _RowWriter(config.output, config.metadata()) if config.output else None
    if config.points_dir:
        Path(config.points_dir).mkdir(parents=True, exist_ok=True)

    records = []
    for n in config.n_grid:
        for seed in config.seeds:
            t0 = time.perf_counter()
            X = generate_points(config.points, n, seed, target, config.burn_in, config.riesz_iters)
            if config.points_dir:
                write_points(Path(config.points_dir) / f"{config.points}_n{n}_s{seed}.txt", X)
            fill = estimate_fill_distance(X, _fill_probe(n))
            rec = ConvergenceRecord(n, seed, profile.spec(), profile.sobolev_order, lam, config.points,
                                    math.nan, math.nan, truth, math.nan, fill, 0.0)
            try:
                K = assemble_KP(cfg, profile, X)
                res = solve_weights(K)
                fv = f(X)
                if sigma_cfg is None:
                    est = integrate(res, fv).estimate
                else:
                    est = integrate_sigma(K, sigma_cfg, fv)
                rec.ksd, rec.estimate, rec.abs_error = res.ksd, est, abs(est - truth)
                rec.jitter = K.jitter_relative
            except (FactorizationFailure, DegenerateSystem) as exc:
                rec.flag = "unstable"
                log.warning("n=%d seed=%d flagged unstable: %s", n, seed, exc)
            except GeosteinError as exc:
                rec.flag = f"failed:{type(exc).__name__}"
                log.warning("n=%d seed=%d failed: %s", n, seed, exc)
            rec.wall_ms = 1e3 * (time.perf_counter() - t0)
            records.append(rec)
            if writer:
                writer.append(rec)
            if progress:
                progress(rec)
    return records


def read_records(path) -> list[ConvergenceRecord]:
    """Load a CSV written by :func:`run_convergence`."""
    def opt(s):
        return float(s) if s != "" else None

    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        out.append(ConvergenceRecord(
            int(row["n"]), int(row["seed"]), row["kernel"], float(row["alpha"]), opt(row["lambda"]),
            row["points"], float(row["ksd"]), float(row["estimate"]), float(row["truth"]),
            float(row["abs_error"]), float(row["fill_distance"]), float(row["jitter"]), row["flag"],
            float(row["wall_ms"]),
        ))
    return out


def fit_power_law(n, y) -> tuple[float, float, float]:
    """OLS of ``log y`` on ``log n``: ``(slope, intercept, r^2)``."""
    ln = np.log(np.asarray(n, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    A = np.column_stack([ln, np.ones_like(ln)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ np.array([slope, intercept])
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_rate(records, n_min: int = 0) -> tuple[float, float, float]:
    """Slope of ``log ksd`` against ``log n`` over unflagged records with ``n >= n_min``."""
    use = [r for r in records if r.ok and r.n >= n_min and np.isfinite(r.ksd) and r.ksd > 0]
    if len(use) < 4 or len({r.n for r in use}) < 2:
        raise InsufficientData(f"need at least 4 unflagged records over 2+ sizes, have {len(use)}")
    return fit_power_law([r.n for r in use], [r.ksd for r in use])


@dataclass(frozen=True)
class SizeSummary:
    n: int
    mean_ksd: float
    stderr: float
    count: int
    flagged: int


def summarize(records) -> list[SizeSummary]:
    """Per-size mean KSD with its standard error over unflagged seeds."""
    out = []
    for n in sorted({r.n for r in records}):
        at = [r for r in records if r.n == n]
        ks = np.array([r.ksd for r in at if r.ok])
        se = float(ks.std(ddof=1) / math.sqrt(len(ks))) if len(ks) > 1 else 0.0
        mean = float(ks.mean()) if len(ks) else math.nan
        out.append(SizeSummary(n, mean, se, len(ks), len(at) - len(ks)))
    return out


def theoretical_slope(profile, dimension: int = 2) -> float:
    """``-s / d`` with ``s = alpha - 2``: the predicted KSD rate on quasi-uniform points."""
    return -(profile.sobolev_order - 2.0) / dimension


# ------------------------------------------------------------ figure / dumps

def render_svg(summaries, slope: float | None = None, title: str = "", width: int = 480, height: int = 360) -> str:
    """Minimal log-log plot of mean KSD against ``n``; ``slope`` adds a dashed reference line."""
    pts = [(s.n, s.mean_ksd) for s in summaries if np.isfinite(s.mean_ksd) and s.mean_ksd > 0]
    pad = 50
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    lx = np.log10([p[0] for p in pts])
    ly = np.log10([p[1] for p in pts])
    x0, x1 = lx.min() - 0.1, lx.max() + 0.1
    y0, y1 = ly.min() - 0.3, ly.max() + 0.3

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">n (log scale)</text>',
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">KSD (log scale)</text>',
    ]
    for n, v in zip(lx, ly):
        parts.append(f'<text x="{sx(n):.1f}" y="{height - pad + 14}" text-anchor="middle">{10 ** n:.0f}</text>')
    poly = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(lx, ly))
    parts.append(f'<polyline points="{poly}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for a, b in zip(lx, ly):
        parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="3" fill="steelblue"/>')
    if slope is not None:
        ya, yb = ly[0], ly[0] + slope * (lx[-1] - lx[0])
        parts.append(
            f'<line x1="{sx(lx[0]):.1f}" y1="{sy(ya):.1f}" x2="{sx(lx[-1]):.1f}" y2="{sy(yb):.1f}" '
            f'stroke="gray" stroke-dasharray="5,4"/>'
        )
        parts.append(f'<text x="{width - pad - 4}" y="{pad + 14}" text-anchor="end">dashed: slope {slope:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def latlong_grid(n_lat: int = 45, n_lon: int = 90) -> np.ndarray:
    """Cell-centred chart grid ``(q1, q2)``, away from the poles and the seam."""
    q2 = (np.arange(n_lat) + 0.5) * np.pi / n_lat
    q1 = (np.arange(n_lon) + 0.5) * 2 * np.pi / n_lon
    Q1, Q2 = np.meshgrid(q1, q2)
    return np.column_stack([Q1.ravel(), Q2.ravel()])


def interpolant(cfg: SteinOperatorConfig, profile, X, f_values, K=None):
    """The fitted ``f_hat = xi + tau h`` as a callable on ``(m, 3)`` arrays.

    With ``xi = I_X(f)`` the limit-form estimate, the coefficients solve
    ``K_P beta = f - xi 1`` and ``f_hat(x) = xi + sum_i beta_i k_P(x, x_i)``;
    ``f_hat`` reproduces ``f`` on ``X``.
    """
    K = assemble_KP(cfg, profile, X) if K is None else K
    f_values = np.asarray(f_values, dtype=float)
    xi = integrate(solve_weights(K), f_values).estimate
    beta = K.solve(f_values - xi)

    def f_hat(Y):
        return xi + stein_kernel_matrix(cfg.target, profile, Y, X) @ beta

    return f_hat, xi


def dump_interpolant(path, config: ExperimentConfig, n: int | None = None, seed: int | None = None,
                     n_lat: int = 45, n_lon: int = 90) -> None:
    """Write ``q1,q2,x1,x2,x3,f,f_hat`` on a lat-long grid for one sweep cell."""
    profile = config.profile()
    target = config.target_density()
    cfg = SteinOperatorConfig(target)
    n = config.n_grid[-1] if n is None else n
    seed = config.seeds[0] if seed is None else seed
    X = generate_points(config.points, n, seed, target, config.burn_in, config.riesz_iters)
    f = default_integrand(config.integrand, target)
    f_hat, _ = interpolant(cfg, profile, X, f(X))
    Q = latlong_grid(n_lat, n_lon)
    G = from_chart_array(Q)
    fv, fh = f(G), f_hat(G)
    with open(path, "w", newline="") as fh_out:
        w = csv.writer(fh_out, lineterminator="\n")
        w.writerow(["q1", "q2", "x1", "x2", "x3", "f", "f_hat"])
        for q, g, a, b in zip(Q, G, fv, fh):
            w.writerow([repr(float(v)) for v in (*q, *g, a, b)])
