"""Chern-geometric operators on gridded Hermitian metrics."""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import forms
from .grid import (
    GridChart,
    HermitianMetricField,
    PositivityError,
    complex_hessian,
    ddbar_from_hessian,
    gradient,
    hessian,
    hodge_laplacian,
    integrate,
    pairing_1forms,
    real_derivative,
)

# imaginary parts above this (relative) mean an operator lost reality
REALITY_TOL = 1e-9


class ConsistencyError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


def spectral_gmres(chart: GridChart, matvec, rhs, symbol, rtol=1e-10, restart=60, maxiter=40):
    """GMRES for ``matvec(x) = rhs`` preconditioned by a Fourier multiplier.

    ``symbol`` approximates the operator in frequency space; zero entries
    (the constant mode of a pure Laplacian) are replaced by 1.
    """
    shape = chart.shape
    sym = np.where(np.abs(symbol) > 1e-14, symbol, 1.0)

    def prec(x):
        return chart.ifft(chart.fft(x.reshape(shape)) / sym).ravel()

    a = LinearOperator((chart.size, chart.size), matvec=lambda x: matvec(x.reshape(shape)).ravel())
    m = LinearOperator((chart.size, chart.size), matvec=prec)
    x, info = gmres(a, np.ravel(rhs), M=m, rtol=rtol, atol=0.0, restart=restart, maxiter=maxiter)
    if info != 0:
        raise ConvergenceError(f"GMRES did not converge (info={info})")
    return x.reshape(shape)


def _as_real(z, what):
    z = np.asarray(z)
    scale = max(1.0, float(np.abs(z).max()))
    imag = float(np.abs(z.imag).max()) if np.iscomplexobj(z) else 0.0
    if imag > REALITY_TOL * scale:
        raise ConsistencyError(f"{what} has imaginary part {imag:.2e}")
    return np.ascontiguousarray(z.real)


def chern_laplacian(metric: HermitianMetricField, f) -> np.ndarray:
    """``-2 h^{i bar j} d_i d_{bar j} f`` evaluated literally."""
    m = complex_hessian(metric.chart, f)
    # h^{i bar j} is the (j, i) entry of the pointwise inverse
    val = -2.0 * np.einsum("...ji,...ij->...", metric.inverse, m)
    return _as_real(val, "Chern Laplacian")


def chern_scalar(metric: HermitianMetricField) -> np.ndarray:
    """Chern scalar curvature ``h^{i bar j}(-d_i d_{bar j} log det h)``."""
    det = metric.det
    if np.any(det <= 0):
        raise PositivityError("det h <= 0: Chern scalar curvature undefined")
    return 0.5 * chern_laplacian(metric, np.log(det))


def conformal_rescale(metric: HermitianMetricField, f) -> HermitianMetricField:
    """The metric ``exp(2f/n) h``."""
    return metric.scaled(np.exp(2.0 * np.asarray(f) / metric.n))


def conformal_curvature(metric: HermitianMetricField, f, scalar=None) -> np.ndarray:
    """Right-hand side of the conformal change law for ``S^Ch(exp(2f/n) omega)``."""
    if scalar is None:
        scalar = chern_scalar(metric)
    return np.exp(-2.0 * f / metric.n) * (scalar + chern_laplacian(metric, f))


class ChernLaplacian:
    """``Delta^Ch`` as a linear operator ``sum_ab C^ab d_a d_b`` for solvers.

    ``C`` is assembled from the complex formula; for Hermitian metrics it
    equals ``-g^{-1}``. Constant-coefficient metrics are applied through a
    single Fourier multiplier.
    """

    def __init__(self, metric: HermitianMetricField):
        self.metric = metric
        self.chart = metric.chart
        n = metric.n
        inv = metric.inverse
        c = np.zeros(self.chart.shape + (2 * n, 2 * n), dtype=complex)
        for i in range(n):
            for j in range(n):
                w = -0.5 * inv[..., j, i]
                xi, yi, xj, yj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
                c[..., xi, xj] += w
                c[..., yi, yj] += w
                c[..., xi, yj] += 1j * w
                c[..., yi, xj] -= 1j * w
        c = 0.5 * (c + np.swapaxes(c, -1, -2))
        self.coeff = _as_real(c, "Chern Laplacian coefficients")
        flat = self.coeff.reshape(-1, 2 * n, 2 * n)
        self.mean_coeff = flat.mean(axis=0)
        self.constant = bool(np.allclose(flat, self.mean_coeff, rtol=0, atol=1e-14))

    @cached_property
    def symbol(self) -> np.ndarray:
        """Fourier symbol of the constant-coefficient part (non-negative)."""
        m = self.chart.real_dim
        out = np.zeros(self.chart.shape)
        for a in range(m):
            for b in range(m):
                out = out + self.mean_coeff[a, b] * self.chart.second_symbol(a, b)
        return out

    def __call__(self, u):
        chart = self.chart
        if self.constant:
            return chart.ifft(self.symbol * chart.fft(u))
        m = chart.real_dim
        u_hat = chart.fft(u)
        out = np.zeros(chart.shape)
        for a in range(m):
            for b in range(a, m):
                w = self.coeff[..., a, b] * (1.0 if a == b else 2.0)
                out += w * chart.ifft(chart.second_symbol(a, b) * u_hat)
        return out

    def adjoint(self, v):
        """Formal adjoint with respect to ``dmu_omega``."""
        chart = self.chart
        rho = self.metric.density
        if self.constant:
            return chart.ifft(self.symbol * chart.fft(v))
        m = chart.real_dim
        rv = rho * v
        out = np.zeros(chart.shape)
        for a in range(m):
            for b in range(a, m):
                w = (1.0 if a == b else 2.0)
                out += w * chart.ifft(chart.second_symbol(a, b) * chart.fft(self.coeff[..., a, b] * rv))
        return out / rho


# --- exterior-algebra quantities ---------------------------------------------

def _real_kahler_form(metric):
    w = metric.kahler_form
    m = metric.chart.real_dim
    return {(a, b): w[..., a, b] for a in range(m) for b in range(a + 1, m)}


def _complex_kahler_form(metric):
    n = metric.n
    return {(i, n + j): 1j * metric.h[..., i, j] for i in range(n) for j in range(n)}


def complex_to_real_transform(n: int) -> np.ndarray:
    """Rows express ``dz^j`` and ``dzbar^j`` in the ``(dx, dy)`` frame."""
    t = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        t[j, 2 * j], t[j, 2 * j + 1] = 1.0, 1j
        t[n + j, 2 * j], t[n + j, 2 * j + 1] = 1.0, -1j
    return t


def _d_omega_power(metric):
    chart = metric.chart
    m = chart.real_dim
    alpha = forms.power(_real_kahler_form(metric), metric.n - 1)

    def partial(coeff, a):
        return real_derivative(chart, np.broadcast_to(coeff, chart.shape), a)

    return alpha, forms.exterior_derivative(alpha, partial, range(m))


def lee_form(metric: HermitianMetricField) -> np.ndarray:
    """Solve ``d omega^{n-1} = theta ^ omega^{n-1}`` pointwise for ``theta``."""
    chart = metric.chart
    n, m = metric.n, chart.real_dim
    if n < 2:
        raise ValueError("the Lee form needs complex dimension >= 2")
    alpha, dalpha = _d_omega_power(metric)
    mat = forms.wedge_matrix(alpha, m, chart.shape)
    rhs = forms.as_vector(dalpha, m, m - 1, chart.shape)
    try:
        theta = np.linalg.solve(mat, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ConsistencyError("wedge with omega^{n-1} is singular") from exc
    return np.moveaxis(theta, -1, 0)


def chern_laplacian_via_lee(metric: HermitianMetricField, f, theta=None) -> np.ndarray:
    """``Delta_d f + (df, theta)``."""
    if theta is None:
        theta = lee_form(metric)
    df = gradient(metric.chart, f)
    return hodge_laplacian(f, metric) + pairing_1forms(df, theta, metric)


def _l2(chart, comps):
    return float(np.sqrt(sum(integrate(chart, np.abs(c) ** 2) for c in comps)))


def gauduchon_residual(metric: HermitianMetricField):
    """``(||i ddbar omega^{n-1}||, ||d omega^{n-1}||)`` after scaling to unit volume.

    Norms are flat L2 norms of the coefficient fields in the real frame.
    """
    chart = metric.chart
    n, m = metric.n, chart.real_dim
    if n < 2:
        return 0.0, 0.0
    unit = metric.scaled(metric.volume() ** (-1.0 / n))

    alpha_c = forms.power(_complex_kahler_form(unit), n - 1)

    def mixed(coeff, k, l):
        coeff = np.broadcast_to(coeff, chart.shape)
        re = ddbar_from_hessian(hessian(chart, coeff.real), k, l, chart)
        im = ddbar_from_hessian(hessian(chart, coeff.imag), k, l, chart)
        return re + 1j * im

    top = forms.ddbar(alpha_c, n, mixed)
    top = {k: 1j * v for k, v in top.items()}
    top_real = forms.change_basis(top, complex_to_real_transform(n), m)
    gaud = _l2(chart, [_as_real(c, "i ddbar omega^{n-1}") for c in top_real.values()])

    _, dalpha = _d_omega_power(unit)
    bal = _l2(chart, dalpha.values())
    return gaud, bal
