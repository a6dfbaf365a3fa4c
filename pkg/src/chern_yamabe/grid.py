"""Periodic complex tori and Fourier pseudospectral calculus.

A chart of complex dimension ``n`` is sampled on ``resolution**(2n)`` points.
Array axes are interleaved as ``(x1, y1, x2, y2, ...)`` where
``z^j = x^j + i y^j``; every scalar field is an ndarray of that shape and
every one-form is an ndarray of shape ``(2n,) + grid_shape`` holding the
components along ``(dx1, dy1, ..., dxn, dyn)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

# relative size of the highest resolved modes above which a field is
# considered under-resolved
BAND_LIMIT_WARN = 1e-10


class PositivityError(ValueError):
    """A metric failed to be positive definite somewhere on the grid."""


class BandLimitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GridChart:
    """Regular periodic grid on the real torus underlying ``C^n / lattice``."""

    complex_dim: int
    resolution: int = 16
    periods: tuple = field(default=None)

    def __post_init__(self):
        if self.complex_dim < 1:
            raise ValueError("complex_dim must be >= 1")
        if self.resolution < 8 or self.resolution % 2:
            raise ValueError("resolution must be even and >= 8")
        if self.periods is None:
            object.__setattr__(self, "periods", (1.0,) * self.real_dim)
        if len(self.periods) != self.real_dim:
            raise ValueError("need one period per real axis")
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    @property
    def shape(self) -> tuple:
        return (self.resolution,) * self.real_dim

    @property
    def size(self) -> int:
        return self.resolution ** self.real_dim

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.periods)) / self.size

    def _axis_shape(self, a):
        s = [1] * self.real_dim
        s[a] = self.resolution
        return tuple(s)

    @cached_property
    def coords(self) -> tuple:
        """Broadcastable coordinate arrays, one per real axis."""
        out = []
        for a, p in enumerate(self.periods):
            x = np.arange(self.resolution) * (p / self.resolution)
            out.append(x.reshape(self._axis_shape(a)))
        return tuple(out)

    def mesh(self) -> np.ndarray:
        """Dense coordinates of shape ``(2n,) + shape``."""
        return np.stack(np.broadcast_arrays(*self.coords))

    @cached_property
    def wavenumbers(self) -> tuple:
        ks = []
        for a, p in enumerate(self.periods):
            k = 2 * np.pi * sfft.fftfreq(self.resolution, d=p / self.resolution)
            ks.append(k.reshape(self._axis_shape(a)))
        return tuple(ks)

    @cached_property
    def _odd_wavenumbers(self) -> tuple:
        # the Nyquist mode has no real odd derivative
        out = []
        for k in self.wavenumbers:
            k = k.copy()
            k.flat[self.resolution // 2] = 0.0
            out.append(k)
        return tuple(out)

    def first_symbol(self, a: int) -> np.ndarray:
        return 1j * self._odd_wavenumbers[a]

    def second_symbol(self, a: int, b: int) -> np.ndarray:
        """Fourier symbol of ``d^2 / dx_a dx_b`` (Nyquist kept on the diagonal)."""
        if a == b:
            return -self.wavenumbers[a] ** 2
        return -self._odd_wavenumbers[a] * self._odd_wavenumbers[b]

    @cached_property
    def flat_laplacian_symbol(self) -> np.ndarray:
        """Symbol of ``-sum_a d^2/dx_a^2`` broadcast to the full grid."""
        out = np.zeros(self.shape)
        for k in self.wavenumbers:
            out = out + k ** 2
        return out

    def fft(self, u):
        return sfft.fftn(u, axes=self._axes)

    def ifft(self, u_hat, real=True):
        out = sfft.ifftn(u_hat, axes=self._axes)
        return out.real if real else out

    @property
    def _axes(self):
        return tuple(range(-self.real_dim, 0))

    def axis(self, j: int, imaginary: bool) -> int:
        """Array axis of ``x^j`` (or ``y^j``) for a 1-based complex index."""
        if not 1 <= j <= self.complex_dim:
            raise IndexError(f"complex index {j} out of range")
        return 2 * (j - 1) + int(imaginary)

    def trig(self, k, amplitude=1.0, phase=0.0) -> np.ndarray:
        """``amplitude * cos(2 pi k.x / L + phase)`` for an integer wavevector."""
        arg = phase
        for kk, x, p in zip(k, self.coords, self.periods):
            arg = arg + 2 * np.pi * kk * x / p
        return amplitude * np.cos(arg) * np.ones(self.shape)

    def check_band_limit(self, u, name="field"):
        """Warn when the outermost resolved shell carries significant energy."""
        u_hat = np.abs(self.fft(u))
        scale = u_hat.max()
        if scale == 0.0:
            return 0.0
        edge = np.zeros(self.shape, dtype=bool)
        for k in self.wavenumbers:
            kmax = np.abs(k).max()
            edge = edge | np.isclose(np.abs(k), kmax)
        tail = float(u_hat[edge].max() / scale)
        if tail > BAND_LIMIT_WARN:
            warnings.warn(
                f"{name} is not resolved at resolution {self.resolution} "
                f"(edge/peak Fourier ratio {tail:.2e})",
                BandLimitWarning,
                stacklevel=2,
            )
        return tail


# --- differentiation ---------------------------------------------------------

def real_derivative(chart: GridChart, u, a: int, u_hat=None):
    """Spectral ``du/dx_a`` for a real field (``a`` is an array axis)."""
    if u_hat is None:
        u_hat = chart.fft(u)
    return chart.ifft(chart.first_symbol(a) * u_hat, real=np.isrealobj(u))


def gradient(chart: GridChart, u) -> np.ndarray:
    """Exterior derivative of a scalar field as a one-form array."""
    u_hat = chart.fft(u)
    return np.stack([real_derivative(chart, u, a, u_hat) for a in range(chart.real_dim)])


def hessian(chart: GridChart, u) -> np.ndarray:
    """Real Hessian, shape ``(2n, 2n) + grid``."""
    m = chart.real_dim
    u_hat = chart.fft(u)
    real = np.isrealobj(u)
    out = np.empty((m, m) + chart.shape, dtype=float if real else complex)
    for a in range(m):
        for b in range(a, m):
            out[a, b] = chart.ifft(chart.second_symbol(a, b) * u_hat, real=real)
            out[b, a] = out[a, b]
    return out


def spectral_derivative(chart: GridChart, u, index: int, conjugate: bool = False):
    """Wirtinger derivative ``d_j u`` or ``d_{bar j} u`` via the FFT.

    ``d_j = (d/dx_j - i d/dy_j) / 2`` and ``d_{bar j} = (d/dx_j + i d/dy_j) / 2``.
    The result is complex even for a real input.
    """
    ax, ay = chart.axis(index, False), chart.axis(index, True)
    u_hat = chart.fft(u)
    sign = 1j if conjugate else -1j
    symbol = 0.5 * (chart.first_symbol(ax) + sign * chart.first_symbol(ay))
    return chart.ifft(symbol * u_hat, real=False)


def ddbar_from_hessian(hess, i: int, j: int, chart: GridChart):
    """``d_i d_{bar j}`` assembled from a real Hessian (0-based ``i, j``)."""
    xi, yi = 2 * i, 2 * i + 1
    xj, yj = 2 * j, 2 * j + 1
    return 0.25 * (hess[xi, xj] + hess[yi, yj] + 1j * (hess[xi, yj] - hess[yi, xj]))


def complex_hessian(chart: GridChart, u) -> np.ndarray:
    """Matrix ``M[i, j] = d_i d_{bar j} u`` with shape ``grid + (n, n)``."""
    n = chart.complex_dim
    hess = hessian(chart, u)
    out = np.empty(chart.shape + (n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[..., i, j] = ddbar_from_hessian(hess, i, j, chart)
    return out


# --- metrics -----------------------------------------------------------------

class HermitianMetricField:
    """Positive Hermitian matrix ``h_{i bar j}`` at every grid point.

    ``omega = i h_{i bar j} dz^i ^ dz-bar^j``. The associated Riemannian
    metric in the interleaved real frame is ``g(u, v) = 2 Re(U^T h conj(V))``
    and the volume density with respect to Lebesgue measure is
    ``2^n det h``.
    """

    def __init__(self, chart: GridChart, h, check=True):
        n = chart.complex_dim
        h = np.asarray(h, dtype=complex)
        if h.shape == (n, n):
            h = np.broadcast_to(h, chart.shape + (n, n))
        if h.shape != chart.shape + (n, n):
            raise ValueError(f"metric has shape {h.shape}, expected {chart.shape + (n, n)}")
        # store the upper triangle once and mirror it
        upper = np.triu(np.ones((n, n), dtype=bool))
        diag = np.eye(n, dtype=bool)
        hs = np.where(upper, h, np.conj(np.swapaxes(h, -1, -2)))
        hs = np.where(diag, hs.real + 0j, hs)
        self.chart = chart
        self.h = np.ascontiguousarray(hs)
        self.h.setflags(write=False)
        if check:
            lam = self.min_eigenvalue
            if not np.all(np.isfinite(self.h)) or lam <= 0:
                raise PositivityError(f"metric not positive definite (min eigenvalue {lam:.3e})")

    @classmethod
    def identity(cls, chart: GridChart, scale=1.0):
        return cls(chart, scale * np.eye(chart.complex_dim))

    @classmethod
    def unit_volume_flat(cls, chart: GridChart):
        """The flat metric ``h = c I`` with total volume one."""
        vol = float(np.prod(chart.periods))
        return cls.identity(chart, 0.5 * vol ** (-1.0 / chart.complex_dim))

    @property
    def n(self) -> int:
        return self.chart.complex_dim

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.h).min())

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.h).real

    @cached_property
    def inverse(self) -> np.ndarray:
        """Pointwise ``h^{-1}``; note ``h^{i bar j} = inverse[..., j, i]``."""
        return np.linalg.inv(self.h)

    @cached_property
    def density(self) -> np.ndarray:
        """``2^n det h``: volume density of ``omega^n / n!``."""
        return (2.0 ** self.n) * self.det

    @cached_property
    def _hermitian_frame(self) -> np.ndarray:
        # M_ab = E_a^T h conj(E_b) with E_{2j} = e_j and E_{2j+1} = i e_j
        n = self.n
        c = np.tile(np.array([1.0, 1j]), n)
        idx = np.repeat(np.arange(n), 2)
        m = self.h[..., idx[:, None], idx[None, :]]
        return m * (c[:, None] * np.conj(c)[None, :])

    @cached_property
    def real_metric(self) -> np.ndarray:
        """Riemannian metric ``g_ab``, shape ``grid + (2n, 2n)``."""
        return 2.0 * self._hermitian_frame.real

    @cached_property
    def real_metric_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.real_metric)

    @cached_property
    def kahler_form(self) -> np.ndarray:
        """Components ``omega_ab = omega(e_a, e_b)`` of the fundamental 2-form."""
        return -2.0 * self._hermitian_frame.imag

    def scaled(self, factor):
        """Pointwise product ``factor * h`` for a positive scalar or field."""
        factor = np.asarray(factor, dtype=float)
        return HermitianMetricField(self.chart, factor[..., None, None] * self.h)

    def volume(self) -> float:
        return integrate(self.chart, np.ones(self.chart.shape), self)


# --- integration and pairings ------------------------------------------------

def integrate(chart: GridChart, u, metric: HermitianMetricField | None = None) -> float:
    """``int u dmu`` by the rectangle rule (spectrally accurate on tori).

    The reduction is numpy's pairwise summation over the flattened C-ordered
    array, which is deterministic for a fixed grid.
    """
    u = np.asarray(u)
    w = u if metric is None else u * metric.density
    total = np.sum(np.ascontiguousarray(w).ravel())
    return float(np.real(total)) * chart.cell_volume


def pairing_1forms(a, b, metric: HermitianMetricField) -> np.ndarray:
    """Pointwise Riemannian pairing ``g^{ab} a_a b_b``."""
    ginv = metric.real_metric_inverse
    a = np.moveaxis(np.asarray(a), 0, -1)
    b = np.moveaxis(np.asarray(b), 0, -1)
    return np.einsum("...a,...ab,...b->...", a, ginv, b)


def hodge_laplacian(u, metric: HermitianMetricField) -> np.ndarray:
    """``Delta_d u = d* du``, non-negative at maxima: ``-(1/rho) d_a(rho g^ab d_b u)``."""
    chart = metric.chart
    du = gradient(chart, u)
    ginv = metric.real_metric_inverse
    rho = metric.density
    flux = np.einsum("...ab,b...->a...", ginv, du) * rho
    div = sum(real_derivative(chart, flux[a], a) for a in range(chart.real_dim))
    return -div / rho
