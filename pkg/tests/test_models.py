import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chern_yamabe.chern import chern_scalar
from chern_yamabe.grid import GridChart, HermitianMetricField, integrate
from chern_yamabe.models import (
    AMPLITUDE_BUDGET,
    MetricRecipe,
    RecipeError,
    make_instance,
    make_metric,
    product_degree_sign,
    random_negative_scalar,
    random_perturbed_metric,
    trig_field,
)
from chern_yamabe.solver import ChernYamabeProblem, continuity_solve


def test_flat_recipe():
    inst = make_instance(MetricRecipe("flat", resolution=8))
    assert inst.gamma == 0.0 or abs(inst.gamma) < 1e-14
    assert inst.recipe["kind"] == "flat"


def test_conformal_flat_recipe():
    r = MetricRecipe("conformal-flat", {"potential": [{"k": [1, 0, 0, 0], "amplitude": 0.3}]})
    inst = make_instance(r)
    assert abs(inst.gamma) < 1e-8
    s = chern_scalar(inst.base)
    assert np.abs(s).max() > 0.1
    assert abs(inst.integrate(inst.scalar)) < 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_random_recipe_degree(seed):
    inst = make_instance(MetricRecipe("random-perturbed", {"amplitude": 0.7}, seed=seed))
    assert abs(inst.gamma) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 5.0), st.integers(1, 6))
def test_random_metric_positivity(seed, amp, terms):
    h = random_perturbed_metric(GridChart(2, 8), amp, seed, terms)
    assert h.min_eigenvalue > 1 - AMPLITUDE_BUDGET - 1e-12


def test_recipes_reproducible():
    r = MetricRecipe("random-perturbed", {"amplitude": 0.5}, seed=3)
    assert make_metric(r).h.tobytes() == make_metric(r).h.tobytes()


def test_synthetic_negative_accepted_by_continuity():
    chart = GridChart(2, 16)
    r = MetricRecipe("synthetic-S", {"scalar": random_negative_scalar(chart, 4), "sign": "negative"})
    inst = make_instance(r)
    assert inst.synthetic and np.all(inst.scalar < 0)
    assert continuity_solve(ChernYamabeProblem(inst)).residual < 1e-6


@pytest.mark.parametrize("scalar,sign", [
    (-0.5 + 0, "zero"),
    ({"constant": -0.1, "terms": [{"k": [1, 0, 0, 0], "amplitude": 0.5}]}, "negative"),
    (0.02, "small"),
    (-1.0, "positive"),
])
def test_sign_declarations_enforced(scalar, sign):
    with pytest.raises(RecipeError):
        make_instance(MetricRecipe("synthetic-S", {"scalar": scalar, "sign": sign}, resolution=8))


def test_hopf_chart_has_no_grid():
    with pytest.raises(RecipeError):
        make_instance(MetricRecipe("hopf-chart"))


def test_unknown_kind():
    with pytest.raises(RecipeError):
        MetricRecipe("k3")


def test_trig_field_forms():
    ch = GridChart(2, 8)
    a = trig_field(ch, [{"k": [0, 1, 0, 0], "amplitude": 2.0}])
    assert np.allclose(a, 2 * np.cos(2 * np.pi * ch.coords[1]) * np.ones(ch.shape))
    assert np.all(trig_field(ch, 1.5) == 1.5)
    with pytest.raises(RecipeError):
        trig_field(ch, [{"k": [1, 0]}])


@pytest.mark.parametrize("gamma,genus,delta,sign,threshold", [
    (1.0, 2, 4 * math.pi, 0, 4 * math.pi),
    (1.0, 3, 30.0, 1, 8 * math.pi),
    (1.0, 3, 20.0, -1, 8 * math.pi),
])
def test_product_degree_sign(gamma, genus, delta, sign, threshold):
    assert product_degree_sign(gamma, genus, delta) == (sign, threshold)


def test_product_threshold_hopf_value():
    _, thr = product_degree_sign(7.3985, 2, 1.0)
    assert thr == pytest.approx(1.6985, abs=1e-4)


@given(st.floats(0.01, 100), st.integers(2, 50))
def test_product_threshold_is_root(gamma, genus):
    _, thr = product_degree_sign(gamma, genus, 1.0)
    assert abs(gamma * thr + 4 * math.pi * (1 - genus)) <= 1e-12 * 4 * math.pi * genus


@pytest.mark.parametrize("args", [(0.0, 2, 1.0), (1.0, 1, 1.0), (1.0, 2, -1.0)])
def test_product_hypotheses(args):
    with pytest.raises(ValueError):
        product_degree_sign(*args)
