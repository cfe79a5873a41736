import math

import numpy as np
import pytest

from geostein import VonMisesFisher, parse_target
from geostein.errors import ConfigError
from geostein.sphere import from_chart_array, normalize
from geostein.targets import chart_log_density_partials, vmf_expected_linear


def _random_rotation(rng):
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def test_normalizing_constant():
    assert VonMisesFisher([0, 0, 0]).normalizing_constant() == pytest.approx(1 / (4 * math.pi))
    assert VonMisesFisher([0, 0, 2]).normalizing_constant() == pytest.approx(2 / (4 * math.pi * math.sinh(2)))


def test_uniform_partials_vanish():
    q = np.array([[0.7, 1.1], [2.0, 0.4]])
    d = chart_log_density_partials(VonMisesFisher([0, 0, 0]), q, order=2)
    assert all(np.all(p == 0.0) for p in d)


def test_axial_partials():
    kappa = 3.0
    q = np.array([[0.7, 1.1], [4.0, 2.5]])
    d1, d2 = chart_log_density_partials(VonMisesFisher([0, 0, kappa]), q)
    assert np.allclose(d1, 0.0, atol=1e-15)
    assert np.allclose(d2, -kappa * np.sin(q[:, 1]), atol=1e-14)


def test_partials_against_central_differences():
    c = np.array([1.0, 2.0, 3.0])
    t = VonMisesFisher(c)
    q0 = np.array([0.7, 1.1])
    h = 1e-5

    def f(q):
        return float(from_chart_array(q)[0] @ c)

    d1, d2, d11, d12, d22 = (float(v[0]) for v in chart_log_density_partials(t, q0[None], order=2))
    e1, e2 = np.array([h, 0]), np.array([0, h])
    assert d1 == pytest.approx((f(q0 + e1) - f(q0 - e1)) / (2 * h), abs=1e-7)
    assert d2 == pytest.approx((f(q0 + e2) - f(q0 - e2)) / (2 * h), abs=1e-7)
    g = 1e-4
    e1, e2 = np.array([g, 0]), np.array([0, g])
    assert d11 == pytest.approx((f(q0 + e1) - 2 * f(q0) + f(q0 - e1)) / g**2, abs=1e-6)
    assert d22 == pytest.approx((f(q0 + e2) - 2 * f(q0) + f(q0 - e2)) / g**2, abs=1e-6)
    mixed = (f(q0 + e1 + e2) - f(q0 + e1 - e2) - f(q0 - e1 + e2) + f(q0 - e1 - e2)) / (4 * g * g)
    assert d12 == pytest.approx(mixed, abs=1e-6)


def test_rotation_equivariance(rng):
    c = np.array([0.3, -1.2, 2.0])
    x = normalize(rng.standard_normal((50, 3)))
    R = _random_rotation(rng)
    a = VonMisesFisher(c).log_density(x)
    b = VonMisesFisher(R @ c).log_density(x @ R.T)
    assert np.allclose(a, b, rtol=0, atol=1e-13)
    rot = VonMisesFisher(c).rotated(R)
    assert np.allclose(rot.log_density(x @ R.T), a, atol=1e-13)


def test_gradient_against_finite_differences(rng):
    t = VonMisesFisher([0.5, -1.0, 2.0])
    x = normalize(rng.standard_normal((100, 3)))
    g = t.grad_log(x)
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (t.log_density(x + e) - t.log_density(x - e)) / (2 * h)
        assert np.allclose(g[:, k], fd, rtol=1e-6, atol=1e-8)


def test_default_hessian_is_central_difference(rng):
    class Quadratic(VonMisesFisher):
        def grad_log(self, x):
            return 2 * np.atleast_2d(x) @ np.diag([1.0, 2.0, 3.0])

        hess_log = VonMisesFisher.__mro__[1].hess_log

    x = normalize(rng.standard_normal((5, 3)))
    H = Quadratic([0, 0, 1]).hess_log(x)
    assert np.allclose(H, np.diag([2.0, 4.0, 6.0]), atol=1e-6)


def test_expected_linear():
    assert vmf_expected_linear([0, 0, 0], [0.2, 0.3, 0.4]) == 0.0
    k = 2.0
    closed = 1 / math.tanh(k) - 1 / k
    assert vmf_expected_linear([0, 0, k], [0, 0, 1]) == pytest.approx(closed, abs=1e-10)
    assert closed == pytest.approx(0.5373, abs=1e-4)
    assert vmf_expected_linear([0, 0, k], [1, 0, 0]) == pytest.approx(0.0, abs=1e-12)


def test_smoothness_warning():
    t = VonMisesFisher([0, 0, 1])
    assert t.check_smoothness(4.5)
    t.smoothness_order = 2
    with pytest.warns(UserWarning):
        assert not t.check_smoothness(4.5)


def test_parse_target():
    t = parse_target("vmf:0,0,2")
    assert np.array_equal(t.c, [0, 0, 2]) and t.kappa == 2.0
    for bad in ("gauss:1,2,3", "vmf:1,2", "vmf:a,b,c"):
        with pytest.raises(ConfigError):
            parse_target(bad)
