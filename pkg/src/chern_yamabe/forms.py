"""Exterior algebra with field-valued coefficients.

A k-form on a ``dim``-dimensional cotangent basis is a dict mapping strictly
increasing index tuples to coefficient arrays. Coefficients only need to
support ``+``, ``*`` and broadcasting, so plain ndarrays (real or complex)
work for whole grids at once.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np


def _sort_sign(indices):
    """Sign of the permutation that sorts ``indices`` (0 if any repeat)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


def _add(form, key, value):
    if key in form:
        form[key] = form[key] + value
    else:
        form[key] = value


def degree(form) -> int:
    return len(next(iter(form))) if form else 0


def wedge(a: dict, b: dict) -> dict:
    out = {}
    for i, ci in a.items():
        for j, cj in b.items():
            s = _sort_sign(i + j)
            if s:
                _add(out, tuple(sorted(i + j)), s * (ci * cj))
    return out


def power(a: dict, p: int) -> dict:
    """``a ^ a ^ ... ^ a`` (p factors); ``p = 0`` gives the constant 1."""
    out = {(): 1.0}
    for _ in range(p):
        out = wedge(out, a)
    return out


def exterior_derivative(form: dict, partial, basis) -> dict:
    """``d`` with ``partial(coeff, c)`` the derivative dual to basis index ``c``.

    ``basis`` selects which covectors participate, so the same routine gives
    ``d``, ``del`` or ``del-bar`` on a complex frame.
    """
    out = {}
    for key, coeff in form.items():
        for c in basis:
            if c in key:
                continue
            s = _sort_sign((c,) + key)
            _add(out, tuple(sorted((c,) + key)), s * partial(coeff, c))
    return out


def ddbar(form: dict, n: int, mixed) -> dict:
    """``del del-bar`` on the frame ``(dz^1..dz^n, dzbar^1..dzbar^n)``.

    ``mixed(coeff, k, l)`` must return ``d_k d_{bar l} coeff`` (0-based).
    """
    out = {}
    for key, coeff in form.items():
        for k in range(n):
            for l in range(n):
                new = (k, n + l) + key
                s = _sort_sign(new)
                if s:
                    _add(out, tuple(sorted(new)), s * mixed(coeff, k, l))
    return out


def change_basis(form: dict, transform, dim: int) -> dict:
    """Re-express a form after substituting ``b^p = sum_a T[p, a] e^a``."""
    t = np.asarray(transform)
    out = {}
    for key, coeff in form.items():
        for target in combinations(range(dim), len(key)):
            minor = np.linalg.det(t[np.ix_(key, target)]) if key else 1.0
            if minor != 0:
                _add(out, target, minor * coeff)
    return out


def wedge_matrix(alpha: dict, dim: int, shape) -> np.ndarray:
    """Matrix of ``theta -> theta ^ alpha`` on one-forms.

    Rows index the ``(k+1)``-subsets of ``range(dim)`` in lexicographic order,
    columns the basis one-forms; result has shape ``shape + (rows, dim)``.
    """
    k = degree(alpha)
    rows = list(combinations(range(dim), k + 1))
    pos = {r: i for i, r in enumerate(rows)}
    mat = np.zeros(tuple(shape) + (len(rows), dim), dtype=np.result_type(*alpha.values()))
    for c in range(dim):
        img = wedge({(c,): 1.0}, alpha)
        for key, coeff in img.items():
            mat[..., pos[key], c] += coeff
    return mat


def as_vector(form: dict, dim: int, k: int, shape) -> np.ndarray:
    """Stack coefficients in lexicographic subset order, shape ``shape + (C(dim,k),)``."""
    keys = list(combinations(range(dim), k))
    dtype = np.result_type(*form.values()) if form else float
    out = np.zeros(tuple(shape) + (len(keys),), dtype=dtype)
    for i, key in enumerate(keys):
        if key in form:
            out[..., i] = form[key]
    return out
