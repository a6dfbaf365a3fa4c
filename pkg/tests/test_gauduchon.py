import numpy as np
import pytest

from chern_yamabe.chern import conformal_rescale
from chern_yamabe.gauduchon import gauduchon_degree, gauduchon_project, synthetic_instance
from chern_yamabe.grid import GridChart, HermitianMetricField
from chern_yamabe.models import random_perturbed_metric


def test_kahler_input_only_rescaled(chart):
    h = HermitianMetricField.identity(chart, 3.0)
    eta, rep = gauduchon_project(h)
    vol = h.volume()
    assert rep.iterations <= 1 and rep.adjoint_residual < 1e-14
    assert np.allclose(eta.h, vol ** (-1 / 2) * h.h, atol=1e-14)


def test_conformally_flat_recovers_flat(chart):
    f0 = chart.trig([1, 0, 0, 0], 0.3) + chart.trig([0, 1, 0, -1], 0.2)
    h = conformal_rescale(HermitianMetricField.identity(chart), f0)
    inst = gauduchon_degree(h)
    assert np.abs(inst.eta.h - 0.5 * np.eye(2)).max() < 1e-10
    # eta = exp(-2g/n) omega, so g - f0 is constant
    assert np.ptp(inst.potential - f0) < 1e-10


def test_random_metric_reduction(projected):
    rep = projected.report
    assert rep.input_residual / rep.residual > 1e6
    assert rep.residual < 1e-8
    assert rep.positivity_margin > 0
    assert rep.balanced_residual > 0
    assert projected.check()


def test_degree_recomputable(projected):
    assert abs(projected.recompute_degree() - projected.gamma) < 1e-10
    assert abs(projected.eta.volume() - 1) < 1e-8


@pytest.mark.parametrize("seed", [21, 22])
def test_torus_degree_vanishes(chart, seed):
    assert abs(gauduchon_degree(random_perturbed_metric(chart, 0.7, seed)).gamma) < 1e-8


def test_degree_scale_invariant(random_metric, projected):
    other = gauduchon_degree(random_metric.scaled(2.5))
    assert abs(other.gamma - projected.gamma) < 1e-8
    assert np.abs(other.eta.h - projected.eta.h).max() < 1e-8


def test_dimension_one_rejected():
    with pytest.raises(ValueError):
        gauduchon_project(HermitianMetricField.identity(GridChart(1, 8)))


def test_synthetic_flagged(chart):
    inst = synthetic_instance(chart, -1.0)
    assert inst.synthetic and inst.gamma == pytest.approx(-1.0)
    assert inst.balanced
