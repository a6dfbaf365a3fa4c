import numpy as np
import pytest
import sympy as sp

from chern_yamabe import forms


def test_wedge_anticommutes_on_one_forms():
    a = {(0,): 2.0, (1,): 1.0}
    b = {(1,): 3.0, (2,): -1.0}
    ab, ba = forms.wedge(a, b), forms.wedge(b, a)
    assert set(ab) == set(ba)
    for k in ab:
        assert ab[k] == -ba[k]


def test_power_of_symplectic_form():
    w = {(0, 1): 1.0, (2, 3): 1.0}
    assert forms.power(w, 2) == {(0, 1, 2, 3): 2.0}
    assert forms.power(w, 0) == {(): 1.0}


def test_exterior_derivative_squares_to_zero():
    x = sp.symbols("x0:3")

    def p(c, a):
        return sp.diff(c, x[a])

    f = {(): x[0] * x[1] ** 2 * sp.sin(x[2])}
    dd = forms.exterior_derivative(forms.exterior_derivative(f, p, range(3)), p, range(3))
    assert all(sp.simplify(v) == 0 for v in dd.values())


def test_change_basis_top_form_is_determinant():
    t = np.array([[1.0, 2.0], [3.0, 4.0]])
    top = forms.change_basis({(0, 1): 1.0}, t, 2)
    assert top[(0, 1)] == pytest.approx(-2.0)


def test_wedge_matrix_matches_wedge():
    rng = np.random.default_rng(0)
    alpha = {k: rng.normal() for k in [(0, 1), (0, 2), (1, 3), (2, 3)]}
    theta = rng.normal(size=4)
    mat = forms.wedge_matrix(alpha, 4, ())
    img = forms.wedge({(c,): theta[c] for c in range(4)}, alpha)
    vec = forms.as_vector(img, 4, 3, ())
    assert np.allclose(mat @ theta, vec)
