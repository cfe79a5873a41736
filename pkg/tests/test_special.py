import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from geostein.errors import SeriesDivergence
from geostein.special import HypergeomSpec, hypergeom, hypergeom_derivative, log_gamma, pochhammer

mp.mp.dps = 40


@pytest.mark.parametrize("z,n", [(0.5, 3), (-2.5, 4), (-3.0, 2), (1.75, 0), (0.5, 2.5), (-1.5, 3.25)])
def test_pochhammer_against_mpmath(z, n):
    assert pochhammer(z, n) == pytest.approx(float(mp.rf(z, n)), rel=1e-13)


def test_pochhammer_integer_through_zero():
    # (-2)_3 = (-2)(-1)(0)
    assert pochhammer(-2.0, 3) == 0.0


def test_log_gamma_sign_and_pole():
    lg, s = log_gamma(-0.5)
    assert s == -1.0
    assert lg == pytest.approx(math.log(2 * math.sqrt(math.pi)), rel=1e-14)
    with pytest.raises(ValueError):
        log_gamma(-2.0)


def test_hypergeom_at_zero_is_one():
    assert hypergeom(HypergeomSpec((0.3, 1.7), (2.2,)), 0.0) == 1.0


def test_terminating_series_stops_after_degree_plus_one_terms():
    spec = HypergeomSpec((-2.0, 1.5, 0.25), (3.0, 0.75))
    assert spec.degree == 2
    val, n_terms = hypergeom(spec, 0.6, return_terms=True)
    assert n_terms == 3
    assert val == pytest.approx(float(mp.hyp3f2(-2, 1.5, 0.25, 3, 0.75, 0.6)), rel=1e-14)


def test_log_series_against_direct_summation():
    # 2F1(1, 1; 2; t) = -log(1 - t) / t
    direct = sum(mp.mpf(0.5) ** k / (k + 1) for k in range(200))
    val = hypergeom(HypergeomSpec((1.0, 1.0), (2.0,)), 0.5)
    assert val == pytest.approx(float(direct), rel=1e-13)
    assert val == pytest.approx(-math.log(0.5) / 0.5, rel=1e-13)


@given(
    a=st.floats(-3.4, 3.4), b=st.floats(-3.4, 3.4), c=st.floats(0.3, 4.0),
    d=st.floats(0.3, 4.0), t=st.floats(-0.9, 0.9),
)
def test_3f2_against_mpmath(a, b, c, d, t):
    want = float(mp.hyp3f2(a, b, 1.25, c, d, t))
    got = hypergeom(HypergeomSpec((a, b, 1.25), (c, d)), t)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_vectorised_matches_scalar():
    spec = HypergeomSpec((0.5, -1.5, 0.25), (1.5, 2.5))
    t = np.linspace(-1, 1, 9)
    vec = hypergeom(spec, t)
    assert np.allclose(vec, [hypergeom(spec, s) for s in t], rtol=0, atol=1e-15)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_derivative_by_parameter_shift(j):
    spec = HypergeomSpec((0.5, -1.5, 0.25), (1.5, 2.5))
    t = 0.37
    want = float(mp.diff(lambda s: mp.hyp3f2(0.5, -1.5, 0.25, 1.5, 2.5, s), t, j))
    assert hypergeom_derivative(spec, t, j) == pytest.approx(want, rel=1e-10)


def test_budget_exhaustion_raises():
    spec = HypergeomSpec((1.0, 1.0), (2.0,), max_terms=20)
    with pytest.raises(SeriesDivergence):
        hypergeom(spec, 0.99)


def test_out_of_range_argument_rejected():
    with pytest.raises(ValueError):
        hypergeom(HypergeomSpec((1.0,), (2.0,)), 1.5)


def test_divergent_type_rejected():
    with pytest.raises(SeriesDivergence):
        hypergeom(HypergeomSpec((1.0, 1.0, 1.0), (2.0,)), 0.1)
