import numpy as np
import pytest

from chern_yamabe.grid import GridChart
from chern_yamabe.models import random_perturbed_metric


def smooth_field(chart, rng, terms=3, kmax=2, amplitude=1.0):
    """Random band-limited real field with wavenumbers up to ``kmax`` per axis."""
    u = np.zeros(chart.shape)
    for _ in range(terms):
        k = rng.integers(-kmax, kmax + 1, size=chart.real_dim)
        u += chart.trig(k, amplitude * rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi))
    return u


def c2_norm(chart, f):
    from chern_yamabe.grid import gradient, hessian

    return max(np.abs(f).max(), np.abs(gradient(chart, f)).max(), np.abs(hessian(chart, f)).max())


@pytest.fixture(scope="session")
def chart():
    return GridChart(2, 16)


@pytest.fixture(scope="session")
def small_chart():
    return GridChart(2, 8)


@pytest.fixture(scope="session")
def random_metric(chart):
    return random_perturbed_metric(chart, amplitude=0.5, seed=11)


@pytest.fixture(scope="session")
def projected(random_metric):
    from chern_yamabe.gauduchon import gauduchon_degree

    return gauduchon_degree(random_metric)


# lines recorded by test_acceptance, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
