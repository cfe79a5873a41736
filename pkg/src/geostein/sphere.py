"""Points, the spherical-coordinate chart, and distances on S^2.

Points are stored as ``(n, 3)`` float arrays of unit vectors in the ambient
space. The chart ``(q1, q2) -> (cos q1 sin q2, sin q1 sin q2, cos q2)`` with
``q1 in (0, 2 pi)`` and ``q2 in (0, pi)`` is derived on demand; it misses the
half great circle through both poles and ``(1, 0, 0)``.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChartDomainError, EmptyPointSet

POLE_TOL = 1e-9


def normalize(x) -> np.ndarray:
    """Project rows of ``x`` onto the unit sphere."""
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


@dataclass(frozen=True)
class UnitVector3:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        v = np.array([self.x1, self.x2, self.x3], dtype=float)
        r = np.linalg.norm(v)
        if not np.isfinite(r) or r == 0.0:
            raise ValueError("cannot normalise a zero or non-finite vector")
        v /= r
        object.__setattr__(self, "x1", float(v[0]))
        object.__setattr__(self, "x2", float(v[1]))
        object.__setattr__(self, "x3", float(v[2]))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x1, self.x2, self.x3], dtype=dtype)

    @classmethod
    def of(cls, v) -> "UnitVector3":
        return cls(*np.asarray(v, dtype=float).ravel()[:3])


@dataclass(frozen=True)
class ChartPoint:
    q1: float
    q2: float

    def __post_init__(self):
        if not (0.0 < self.q1 < 2 * np.pi and 0.0 < self.q2 < np.pi):
            raise ChartDomainError(f"({self.q1}, {self.q2}) is outside (0, 2pi) x (0, pi)")


@dataclass(frozen=True)
class ChartFrame:
    G: np.ndarray
    sqrt_det_G: float


def _chordal_to_excluded(x: np.ndarray) -> np.ndarray:
    """Chordal distance from each row of ``x`` to the excluded half great circle.

    That set is ``{(sin t, 0, cos t) : t in [0, pi]}``; for a point with
    ``x2`` coordinate removed the nearest member lies along ``(x1, x3)`` when
    ``x1 >= 0`` and at a pole otherwise.
    """
    x = np.atleast_2d(x)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    r13 = np.hypot(x1, x3)
    near_meridian = np.sqrt(np.maximum(x2**2 + (r13 - 1.0) ** 2, 0.0))
    to_pole = np.sqrt(np.maximum(x1**2 + x2**2 + (np.abs(x3) - 1.0) ** 2, 0.0))
    return np.where(x1 >= 0, near_meridian, to_pole)


def in_chart_domain(x, tol: float = POLE_TOL) -> np.ndarray:
    return _chordal_to_excluded(np.asarray(x, dtype=float)) > tol


def to_chart_array(x, tol: float = POLE_TOL) -> np.ndarray:
    """Vectorised inverse chart: rows ``(x1, x2, x3)`` to rows ``(q1, q2)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(in_chart_domain(x, tol)):
        raise ChartDomainError("point on or near the excluded half great circle")
    q2 = np.arccos(np.clip(x[:, 2], -1.0, 1.0))
    q1 = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
    return np.column_stack([q1, q2])


def from_chart_array(q) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    q1, q2 = q[:, 0], q[:, 1]
    s2 = np.sin(q2)
    return normalize(np.column_stack([np.cos(q1) * s2, np.sin(q1) * s2, np.cos(q2)]))


def to_chart(p: UnitVector3) -> ChartPoint:
    q = to_chart_array(np.asarray(p))[0]
    return ChartPoint(float(q[0]), float(q[1]))


def from_chart(q: ChartPoint) -> UnitVector3:
    return UnitVector3.of(from_chart_array([q.q1, q.q2])[0])


def chart_jacobian(q) -> tuple[np.ndarray, np.ndarray]:
    """Tangent vectors ``d phi^{-1}/dq1`` and ``d phi^{-1}/dq2`` as ``(n, 3)`` arrays."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    c1, s1 = np.cos(q[:, 0]), np.sin(q[:, 0])
    c2, s2 = np.cos(q[:, 1]), np.sin(q[:, 1])
    d1 = np.column_stack([-s1 * s2, c1 * s2, np.zeros_like(s2)])
    d2 = np.column_stack([c1 * c2, s1 * c2, -s2])
    return d1, d2


def chart_hessian(q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second derivatives ``d11, d12, d22`` of the inverse chart, each ``(n, 3)``."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    c1, s1 = np.cos(q[:, 0]), np.sin(q[:, 0])
    c2, s2 = np.cos(q[:, 1]), np.sin(q[:, 1])
    zero = np.zeros_like(s2)
    d11 = np.column_stack([-c1 * s2, -s1 * s2, zero])
    d12 = np.column_stack([-s1 * c2, c1 * c2, zero])
    d22 = np.column_stack([-c1 * s2, -s1 * s2, -c2])
    return d11, d12, d22


def chart_frame(q: ChartPoint) -> ChartFrame:
    s = np.sin(q.q2)
    return ChartFrame(G=np.diag([s * s, 1.0]), sqrt_det_G=float(s))


def geodesic_distance(a, b) -> np.ndarray | float:
    """Great-circle distance ``arccos(a . b)``, broadcasting over leading axes.

    Evaluated as ``atan2(|a x b|, a . b)``, which keeps full accuracy for
    nearly coincident and nearly antipodal pairs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.sum(a * b, axis=-1)
    out = np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), dot)
    return float(out) if np.ndim(out) == 0 else out


def chordal_distance(a, b) -> np.ndarray | float:
    d = np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def rotation_between(a, b) -> np.ndarray:
    """Rotation matrix taking unit vector ``a`` onto unit vector ``b`` (Rodrigues)."""
    a = normalize(a)
    b = normalize(b)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    if c < -1.0 + 1e-12:
        # antipodal: rotate by pi about any axis orthogonal to a
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis = normalize(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def chart_safe_rotation(points, margin: float = 0.2) -> np.ndarray:
    """Find a rotation ``R`` such that every ``R @ p`` sits well inside the chart.

    Used by derivative computations in chart coordinates, which degrade near
    the poles and the seam. A small deterministic family of candidate
    rotations is scanned and the one maximising the worst-case distance to the
    excluded set is returned (``margin`` is the early-exit threshold).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    best, best_score = np.eye(3), -1.0
    target = np.array([-1.0, 0.0, 0.0])  # centre of the chart, (q1, q2) = (pi, pi/2)
    centre = normalize(pts.mean(axis=0)) if np.linalg.norm(pts.mean(axis=0)) > 1e-8 else pts[0]
    base = rotation_between(centre, target)
    for k in range(24):
        ang = 2 * np.pi * k / 24
        c, s = np.cos(ang), np.sin(ang)
        spin = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
        R = spin @ base
        score = float(_chordal_to_excluded(pts @ R.T).min())
        if score > best_score:
            best, best_score = R, score
        if best_score > margin:
            break
    return best


def estimate_fill_distance(X, n_probe: int, chunk: int = 4096) -> float:
    """Largest geodesic distance from a Fibonacci probe grid to its nearest point of ``X``.

    The two poles, which the lattice only approaches, are probed as well.
    This is a lower bound on the true fill distance; it tightens as
    ``n_probe`` grows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        raise EmptyPointSet("fill distance of an empty point set")
    from .points import fibonacci_points

    probes = np.vstack([fibonacci_points(n_probe), [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]])
    worst = 0.0
    for start in range(0, len(probes), chunk):
        dots = probes[start:start + chunk] @ X.T
        best = np.clip(dots.max(axis=1), -1.0, 1.0)
        worst = max(worst, float(np.arccos(best).max()))
    return worst


# ---------------------------------------------------------------- file format

def write_points(path, X) -> None:
    """Write ``X`` as ``# unit-vectors d=3 n=<count>`` followed by one point per line."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    path = Path(path)
    lines = [f"# unit-vectors d=3 n={len(X)}"]
    lines += [f"{a!r} {b!r} {c!r}" for a, b, c in X.tolist()]
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_points(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# unit-vectors d=3 n="):
            raise ValueError(f"{path}: bad header {header!r}")
        n = int(header.rsplit("=", 1)[1])
        rows = [list(map(float, line.split(" "))) for line in fh if line.strip()]
    X = np.array(rows, dtype=float).reshape(-1, 3)
    if len(X) != n:
        raise ValueError(f"{path}: header says n={n} but found {len(X)} points")
    return X
