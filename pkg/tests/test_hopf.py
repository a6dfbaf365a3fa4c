import numpy as np
import pytest
import sympy as sp
from scipy import integrate as si

from chern_yamabe.hopf import (
    ChartPointSample,
    hopf_degree,
    hopf_gauduchon_symbolic,
    hopf_metric,
    hopf_scalar_check,
    hopf_scalar_symbolic,
    sample_annulus,
)


def test_symbolic_scalar_is_two():
    assert sp.simplify(hopf_scalar_symbolic() - 2) == 0


def test_symbolic_check():
    rep = hopf_scalar_check(100, seed=0)
    assert rep["max_deviation"] < 1e-8 and rep["deck_deviation"] < 1e-8
    assert rep["mean"] > 0


@pytest.mark.parametrize("seed", [0, 1])
def test_fd_check(seed):
    rep = hopf_scalar_check(100, seed=seed, method="fd")
    assert rep["max_deviation"] < 1e-5
    assert rep["deck_deviation"] < 1e-5


def test_gauduchon():
    assert hopf_gauduchon_symbolic()


def test_samples_in_annulus():
    r = np.linalg.norm(sample_annulus(500, 3), axis=1)
    assert r.min() >= 1 and r.max() <= 2


def test_sample_validation():
    z = (3.0 + 0j, 0j)
    with pytest.raises(ValueError):
        ChartPointSample(z, hopf_metric(z))


def test_sample_count():
    with pytest.raises(ValueError):
        hopf_scalar_check(5)


def _radial_oracle():
    # S = 2, density 2^2 det h = 4 / r^4, sphere area 2 pi^2 r^3
    vol = si.quad(lambda r: 2 * np.pi ** 2 * r ** 3 * 4 / r ** 4, 1, 2)[0]
    return 2 * vol / np.sqrt(vol), vol


def test_degree_against_radial_quadrature():
    gamma, vol = _radial_oracle()
    rep = hopf_degree()
    assert rep["volume"] == pytest.approx(vol, rel=1e-10)
    assert rep["gamma"] == pytest.approx(gamma, rel=1e-8)
    assert gamma == pytest.approx(2 * np.sqrt(8 * np.pi ** 2 * np.log(2)), rel=1e-12)
