import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from geostein import SteinOperatorConfig, VonMisesFisher
from geostein.sphere import normalize

settings.register_profile(
    "geostein",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("geostein")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def vmf2():
    return VonMisesFisher([0.0, 0.0, 2.0])


@pytest.fixture
def cfg2(vmf2):
    return SteinOperatorConfig(vmf2)


def random_pairs(rng, n, u_max=0.95):
    """``n`` pairs of unit vectors with ``|x . y| <= u_max``."""
    xs, ys = [], []
    while len(xs) < n:
        x, y = normalize(rng.standard_normal((2, 3)))
        if abs(x @ y) <= u_max:
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
