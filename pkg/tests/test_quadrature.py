import math

import numpy as np
import pytest

from geostein import (
    SteinOperatorConfig,
    TestFunction,
    VonMisesFisher,
    product_grid,
    reference_expectation,
    reference_integral,
    stein_identity_residual,
)


def test_grid_shape_and_weights():
    g = product_grid(16)
    assert len(g) == 16 * 32
    assert g.weights.sum() == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.allclose(np.linalg.norm(g.points, axis=1), 1.0)
    with pytest.raises(ValueError):
        product_grid(3)


def test_grid_is_read_only():
    g = product_grid(8)
    with pytest.raises(ValueError):
        g.weights[0] = 1.0


def test_reference_integral_examples():
    assert reference_integral(lambda x: np.ones(len(x))) == pytest.approx(4 * math.pi, abs=1e-12)
    assert reference_integral(lambda x: x[:, 2]) == pytest.approx(0.0, abs=1e-12)
    assert reference_integral(lambda x: x[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, abs=1e-10)


def test_reference_integral_of_polynomial_is_exact_at_low_resolution():
    # x1^2 x2^2 x3^2 integrates to 4 pi / 105
    val = reference_integral(lambda x: (x[:, 0] * x[:, 1] * x[:, 2]) ** 2, m=8)
    assert val == pytest.approx(4 * math.pi / 105, rel=1e-13)


def test_reference_expectation_examples():
    t = VonMisesFisher([0, 0, 2])
    assert reference_expectation(t, lambda x: np.ones(len(x))) == 1.0
    assert reference_expectation(t, lambda x: x @ t.c / t.kappa) == pytest.approx(1 / math.tanh(2) - 0.5, abs=1e-10)
    assert reference_expectation(t, lambda x: x[:, 0]) == pytest.approx(0.0, abs=1e-10)


def test_expectation_uses_normalizer_consistently():
    t = VonMisesFisher([0.5, -1.0, 1.5])
    Z = t.normalizing_constant()
    direct = reference_integral(lambda x: Z * np.exp(t.log_density(x)) * x[:, 0])
    assert reference_expectation(t, lambda x: x[:, 0]) == pytest.approx(direct, rel=1e-12)


def _tf_linear(v):
    v = np.asarray(v, float)
    return TestFunction(lambda x: x @ v, lambda x: np.broadcast_to(v, x.shape),
                        lambda x: np.zeros((len(x), 3, 3)), name="linear")


def test_residual_constant_is_exactly_zero():
    t = VonMisesFisher([0, 0, 2])
    assert stein_identity_residual(t, lambda x: np.full(len(x), 3.0)) == 0.0


def test_residual_linear():
    assert stein_identity_residual(VonMisesFisher([0, 0, 2]), _tf_linear([0, 0, 1])) < 1e-8


def test_residual_trig_callable():
    def h(x):
        return np.sin(3 * x[:, 0]) * np.cos(2 * x[:, 1])

    assert stein_identity_residual(VonMisesFisher([0, 0, 2]), h) < 1e-6


def test_residual_detects_wrong_operator():
    # a deliberately broken target gradient must break the identity
    class Wrong(VonMisesFisher):
        def grad_log(self, x):
            return 2 * super().grad_log(x)

    assert stein_identity_residual(Wrong([0, 0, 2]), _tf_linear([0, 0, 1])) > 0.1
