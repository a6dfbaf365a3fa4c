import warnings

import numpy as np
import pytest

from chern_yamabe.chern import chern_scalar
from chern_yamabe.gauduchon import gauduchon_degree, synthetic_instance
from chern_yamabe.grid import GridChart, HermitianMetricField, integrate
from chern_yamabe.chern import conformal_rescale
from chern_yamabe.solver import (
    ChernYamabeProblem,
    DegreeMismatchError,
    NoConvergence,
    NonBalancedWarning,
    SignError,
    SolverConfig,
    SolverSolution,
    _Path,
    alpha_form_asymmetry,
    apriori_bounds,
    continuity_solve,
    el_gradient,
    functional_F,
    functional_Fstar,
    negativize,
    run_flow,
    small_data_solve,
    solve_zero_degree,
    uniqueness_probe,
)

from conftest import smooth_field


def synth(chart, s):
    return synthetic_instance(chart, s)


@pytest.fixture(scope="module")
def wavy(chart):
    x = chart.coords
    return synth(chart, -1 + 0.3 * np.cos(2 * np.pi * x[0]) * np.cos(2 * np.pi * x[1]))


# --- zero degree -------------------------------------------------------------

def test_zero_degree_trivial(chart):
    sol = solve_zero_degree(ChernYamabeProblem(synth(chart, 0.0)))
    assert np.abs(sol.f).max() < 1e-14 and sol.lam == 0.0


def test_zero_degree_conformal_flat(chart):
    f0 = chart.trig([1, 0, 0, 0], 0.3) + chart.trig([0, 1, 1, 0], 0.2)
    inst = gauduchon_degree(conformal_rescale(HermitianMetricField.identity(chart), f0))
    sol = solve_zero_degree(ChernYamabeProblem(inst))
    h = sol.metric(inst).h
    # the solved metric is the flat one up to a constant factor
    assert np.abs(h - h[(0,) * 4]).max() < 1e-10
    assert np.abs(chern_scalar(sol.metric(inst))).max() < 1e-7


def test_zero_degree_synthetic_cosine(chart):
    inst = synth(chart, chart.trig([1, 0, 0, 0]))
    sol = solve_zero_degree(ChernYamabeProblem(inst))
    assert sol.residual < 1e-9
    assert np.abs(sol.curvature(inst)).max() < 1e-7
    assert sol.constraint_defect < 1e-8


def test_zero_degree_rejects_nonzero_mean(chart):
    with pytest.raises(DegreeMismatchError):
        solve_zero_degree(ChernYamabeProblem(synth(chart, 0.1 + chart.trig([1, 0, 0, 0]))))


def test_zero_degree_geometric_random(projected):
    sol = solve_zero_degree(ChernYamabeProblem(projected))
    assert sol.residual < 1e-6
    s = chern_scalar(sol.metric(projected))
    assert np.abs(s).max() < 1e-7


# --- negativize --------------------------------------------------------------

def test_negativize_constant(chart):
    f = negativize(ChernYamabeProblem(synth(chart, -1.0)))
    assert np.abs(f).max() < 1e-12


def test_negativize_pointwise_negative(chart):
    inst = synth(chart, -1 + 0.5 * chart.trig([1, 0, 0, 0]))
    f = negativize(ChernYamabeProblem(inst))
    s = SolverSolution(f, inst.gamma, 0.0, 0.0).curvature(inst)
    n, sup = inst.n, np.abs(f).max()
    assert np.all(s < 0)
    assert np.all(s >= -np.exp(2 * sup / n) - 1e-12) and np.all(s <= -np.exp(-2 * sup / n) + 1e-12)
    # S' exp(2f/n) is the constant Gamma, so a second pass has nothing to do
    assert np.abs(s * np.exp(2 * f / n) - inst.gamma).max() < 1e-10
    assert np.abs(negativize(ChernYamabeProblem(synth(chart, inst.gamma)))).max() < 1e-8


def test_negativize_sign(chart):
    with pytest.raises(SignError):
        negativize(ChernYamabeProblem(synth(chart, 0.0)))


# --- a priori bounds ---------------------------------------------------------

def test_bounds_constant():
    b = apriori_bounds(np.full(4, -1.0), -1.0)
    assert (b.lower, b.upper) == (1.0, 2.0)


def test_bounds_range():
    b = apriori_bounds(np.array([-2.0, -0.5]), -1.0)
    assert b.upper_literal == 1.5
    assert b.lower == 0.5
    # the max-principle bound uses min S
    assert b.upper == 3.0


def test_bounds_boundary_of_min():
    s = np.array([-3.0, -2.0])
    assert apriori_bounds(s, -2.0).lower == 1.0


@pytest.mark.parametrize("s,lam", [([-1.0], 1.0), ([-1.0, 0.5], -1.0)])
def test_bounds_sign_errors(s, lam):
    with pytest.raises(SignError):
        apriori_bounds(np.array(s), lam)


def test_literal_upper_bound_exceeded(chart):
    # unnormalized solution of Delta F + S = -exp(F) where S varies strongly
    s = -1.6 - 1.5 * chart.trig([1, 0, 0, 0])
    inst = synth(chart, s)
    sol = continuity_solve(ChernYamabeProblem(inst))
    n = inst.n
    big_f = sol.f + 0.5 * n * np.log(sol.lam / -1.0)
    res = inst.laplacian(big_f) + s + np.exp(2 * big_f / n)
    assert np.abs(res).max() < 1e-6
    b = apriori_bounds(s, -1.0)
    e = np.exp(2 * big_f / n)
    assert e.max() > b.upper_literal
    assert e.max() <= b.upper and e.min() >= b.lower


# --- continuity --------------------------------------------------------------

def test_continuity_trivial(chart):
    sol = continuity_solve(ChernYamabeProblem(synth(chart, -1.0), -1.0))
    assert np.abs(sol.f).max() < 1e-12 and sol.residual < 1e-12
    assert sol.lam == pytest.approx(-1.0)
    n = 2
    for row in sol.trace:
        assert row["lower_margin"] >= -1e-8 and row["upper_margin"] >= -1e-8
    assert sol.bounds.lower == 1.0 and sol.bounds.upper == 2.0
    assert 0 <= sol.f.min() and sol.f.max() <= 0.5 * n * np.log(2) + 1e-12


def test_continuity_wavy(wavy):
    sol = continuity_solve(ChernYamabeProblem(wavy))
    s = sol.curvature(wavy)
    assert sol.residual < 1e-6 and sol.constraint_defect < 1e-8
    assert np.ptp(s) < 1e-7
    assert s.mean() == pytest.approx(wavy.gamma, abs=1e-7)
    assert sol.bound_violations == 0
    assert np.linalg.norm(el_gradient(wavy, sol.f, sol.lam)) * np.sqrt(wavy.chart.cell_volume) < 1e-6


def test_continuity_custom_schedule(wavy):
    a = continuity_solve(ChernYamabeProblem(wavy), schedule=[0.0, 0.5, 1.0])
    b = continuity_solve(ChernYamabeProblem(wavy))
    assert np.abs(a.f - b.f).max() < 1e-8


def test_continuity_bad_schedule(wavy):
    with pytest.raises(ValueError):
        continuity_solve(ChernYamabeProblem(wavy), schedule=[0.0, 0.7, 0.5, 1.0])


def test_continuity_sign(chart):
    with pytest.raises(SignError):
        continuity_solve(ChernYamabeProblem(synth(chart, -1.0), 0.5))


# --- uniqueness --------------------------------------------------------------

def test_uniqueness_constant(chart):
    rep = uniqueness_probe(ChernYamabeProblem(synth(chart, -1.0), -1.0), seeds=5)
    assert rep["max_pairwise"] < 1e-8
    assert rep["offset_expected"] == pytest.approx(np.log(2))
    assert rep["offset_error"] < 1e-8 and rep["consistent"]


def test_uniqueness_single_seed(wavy):
    rep = uniqueness_probe(ChernYamabeProblem(wavy), seeds=1)
    assert rep["max_pairwise"] == 0.0 and rep["consistent"]


# --- flow --------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_wavy(small_chart):
    return synth(small_chart, -1 + 0.3 * small_chart.trig([1, 1, 0, 0]))


def test_flow_stationary(small_wavy):
    prob = ChernYamabeProblem(small_wavy, config=SolverConfig(snapshot_every=1, flow_tol=1e-300))
    sol = continuity_solve(prob)
    prob.lam = sol.lam
    tr = run_flow(prob, horizon=0.5, f0=sol.f)
    assert len(tr.snapshots) == 51
    assert max(np.abs(s - sol.f).max() for s in tr.snapshots) < 1e-10


def test_flow_matches_continuity(small_wavy):
    sol = continuity_solve(ChernYamabeProblem(small_wavy))
    tr = run_flow(ChernYamabeProblem(small_wavy, sol.lam))
    assert tr.reason == "converged"
    assert np.abs(tr.f - sol.f).max() < 1e-6
    assert np.all(np.diff(tr.times) > 0)


def test_flow_functional_zero_degree(small_chart):
    inst = synth(small_chart, small_chart.trig([1, 0, 0, 0]) + 0.5 * small_chart.trig([0, 1, 1, 0]))
    tr = run_flow(ChernYamabeProblem(inst, 0.0), horizon=2.0)
    t, fv = np.array(tr.times), np.array(tr.functional)
    assert fv[0] == 0.0
    assert np.all(fv[(t > 0) & (t <= 0.1)] <= 0)
    assert np.all(np.diff(fv) <= 1e-10)


def test_flow_blowup(small_chart):
    tr = run_flow(ChernYamabeProblem(synth(small_chart, -1.0), 1.0), horizon=20.0)
    assert tr.reason == "blow-up"


def test_flow_unbalanced_warns(random_metric):
    inst = gauduchon_degree(random_metric)
    with pytest.warns(NonBalancedWarning):
        run_flow(ChernYamabeProblem(inst), horizon=0.02)


# --- functionals -------------------------------------------------------------

def test_functional_zero(wavy):
    assert functional_F(wavy, np.zeros(wavy.chart.shape)) == 0.0


@pytest.mark.parametrize("c", [-1.0, 0.3, 2.0])
def test_functional_constant(wavy, c):
    assert functional_F(wavy, np.full(wavy.chart.shape, c)) == pytest.approx(c * wavy.gamma, abs=1e-12)


@pytest.mark.parametrize("c", [-1.0, 0.5])
def test_fstar_invariance(wavy, c):
    f = smooth_field(wavy.chart, np.random.default_rng(3))
    assert abs(functional_Fstar(wavy, f + c) - functional_Fstar(wavy, f)) < 1e-10


def test_fstar_not_invariant_off_gamma(wavy):
    f = smooth_field(wavy.chart, np.random.default_rng(3))
    assert abs(functional_Fstar(wavy, f + 1, -3.0) - functional_Fstar(wavy, f, -3.0)) > 1e-3


@pytest.mark.parametrize("seed", range(20))
def test_gradient_finite_difference(wavy, seed):
    rng = np.random.default_rng(seed)
    ch, n = wavy.chart, wavy.n
    f, w = smooth_field(ch, rng, amplitude=0.5), smooth_field(ch, rng)
    v = w + w ** 2  # skewed, so the third cumulant under exp(2f/n) is nonzero
    lam = -3.0  # off Gamma so the log term has curvature in every direction
    exact = wavy.integrate(el_gradient(wavy, f, lam) * v) / n
    errs = []
    for eps in (1e-3, 1e-4):
        fd = (functional_Fstar(wavy, f + eps * v, lam) - functional_Fstar(wavy, f - eps * v, lam)) / (2 * eps)
        errs.append(abs(fd - exact))
    # second order: a decade in eps buys two decades in error
    assert errs[0] > 1e-9
    assert errs[1] < errs[0] / 50


def test_el_gradient_warns_nothing_on_flat(wavy):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        functional_F(wavy, np.zeros(wavy.chart.shape))


def test_functional_warns_unbalanced(projected):
    with pytest.warns(NonBalancedWarning):
        functional_F(projected, np.zeros(projected.chart.shape))


# --- alpha form --------------------------------------------------------------

def _pairs(chart, count, seed):
    rng = np.random.default_rng(seed)
    return [(smooth_field(chart, rng), smooth_field(chart, rng)) for _ in range(count)]


def test_alpha_flat(chart):
    h = HermitianMetricField.unit_volume_flat(chart)
    assert max(abs(alpha_form_asymmetry(h, a, b)) for a, b in _pairs(chart, 50, 0)) < 1e-10


def test_alpha_witness(projected):
    vals = [abs(alpha_form_asymmetry(projected.eta, a, b, projected.theta)) for a, b in _pairs(projected.chart, 50, 1)]
    assert max(vals) > 1e-4


def test_alpha_constant_h(projected):
    ch = projected.chart
    one = np.ones(ch.shape)
    for _, g in _pairs(ch, 10, 2):
        assert abs(alpha_form_asymmetry(projected.eta, one, g, projected.theta)) < 1e-8


def test_alpha_antisymmetric(projected):
    a, b = _pairs(projected.chart, 1, 3)[0]
    x = alpha_form_asymmetry(projected.eta, a, b, projected.theta)
    assert alpha_form_asymmetry(projected.eta, b, a, projected.theta) == pytest.approx(-x, abs=1e-14)


# --- small data --------------------------------------------------------------

def test_small_data_trivial(chart):
    sol = small_data_solve(synth(chart, 0.0))
    assert np.abs(sol.f).max() == 0.0 and sol.lam == 0.0


def test_small_data_positive(chart):
    s = 0.005 + 0.005 * chart.trig([1, 0, 0, 0], phase=0.3) * chart.trig([0, 0, 0, 1])
    inst = synth(chart, s)
    assert np.abs(s).max() <= 0.01 and inst.gamma == pytest.approx(0.005)
    sol = small_data_solve(inst)
    assert sol.converged and sol.residual < 1e-7
    curv = sol.curvature(inst)
    assert np.abs(curv - 0.005).max() < 1e-7
    assert sol.lam == pytest.approx(0.005, abs=1e-12)


def test_small_data_large_is_recorded(chart):
    inst = synth(chart, 5 + 5 * chart.trig([1, 0, 0, 0]))
    out = small_data_solve(inst, max_iter=10)
    assert isinstance(out, (SolverSolution, NoConvergence))
    if not out.converged:
        assert out.reason and out.trace
