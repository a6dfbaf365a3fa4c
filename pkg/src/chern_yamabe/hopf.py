"""Pointwise checks on the standard Hopf surface chart.

The chart is ``C^2 \\ {0}`` with fundamental annulus ``1 <= |z| <= 2`` for the
deck map ``z -> z/2`` and metric ``h = |z|^{-2} I``. There is no global grid;
everything is evaluated at sample points.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

INNER, OUTER = 1.0, 2.0
FD_SPACING = 1e-2
# 8th-order central stencil on offsets -4..4
SECOND_STENCIL = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
OFFSETS = np.arange(-4, 5)


@dataclass(frozen=True)
class ChartPointSample:
    z: tuple
    metric: np.ndarray
    spacing: float = FD_SPACING

    def __post_init__(self):
        r = float(np.sqrt(sum(abs(c) ** 2 for c in self.z)))
        if not INNER - 1e-12 <= r <= OUTER + 1e-12:
            raise ValueError(f"|z| = {r} outside the fundamental annulus")


def hopf_metric(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.eye(2) / float(np.sum(np.abs(z) ** 2))


def sample_annulus(count, seed=0) -> np.ndarray:
    """Uniform directions and radii in ``[1, 2]``; shape ``(count, 2)`` complex."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= rng.uniform(INNER, OUTER, size=(count, 1))
    return v[:, 0::2] + 1j * v[:, 1::2]


# --- symbolic ----------------------------------------------------------------

@lru_cache(maxsize=None)
def _symbolic():
    """Wirtinger calculus with ``z`` and ``zbar`` as independent symbols."""
    z = sp.symbols("z1 z2")
    zb = sp.symbols("zb1 zb2")
    r2 = z[0] * zb[0] + z[1] * zb[1]
    h = sp.eye(2) / r2
    logdet = sp.log(sp.simplify(h.det()))
    hinv = h.inv()
    s = 0
    for i in range(2):
        for j in range(2):
            # h^{i bar j} is the (j, i) entry of the inverse
            s += hinv[j, i] * (-sp.diff(logdet, z[i], zb[j]))
    s = sp.simplify(s)
    return z, zb, s, r2


def hopf_scalar_symbolic():
    """Closed form of ``S^Ch`` as a sympy expression."""
    return _symbolic()[2]


def _scalar_symbolic_at(points):
    z, zb, s, _ = _symbolic()
    fn = sp.lambdify((*z, *zb), s, "numpy")
    out = fn(points[:, 0], points[:, 1], points[:, 0].conj(), points[:, 1].conj())
    return np.real(np.broadcast_to(out, (len(points),))).astype(float)


def hopf_gauduchon_symbolic() -> bool:
    """``i ddbar omega = 0`` for ``omega = |z|^{-2} omega_0`` in dimension 2.

    The coefficient of ``omega_0 ^ omega_0`` in ``ddbar`` is the Euclidean
    Laplacian of ``|z|^{-2}`` on ``R^4``, which vanishes.
    """
    z, zb, _, r2 = _symbolic()
    phi = 1 / r2
    lap = sum(sp.diff(phi, z[i], zb[i]) for i in range(2))
    return sp.simplify(lap) == 0


# --- finite differences ------------------------------------------------------

def _logdet_real(x):
    """``log det h`` in real coordinates ``(x1, y1, x2, y2)``, vectorised."""
    return -2.0 * np.log(np.sum(x ** 2, axis=-1))


def _fd_pure_second(fun, x, a, spacing):
    e = np.zeros(4)
    e[a] = spacing
    vals = np.stack([fun(x + k * e) for k in OFFSETS])
    return np.tensordot(SECOND_STENCIL, vals, axes=1) / spacing ** 2


def _scalar_fd_at(points, spacing=FD_SPACING):
    x = np.stack([points[:, 0].real, points[:, 0].imag, points[:, 1].real, points[:, 1].imag], axis=-1)
    # h^{i bar j} = |z|^2 delta_ij, so only d_i d_{bar i} = (d_xx + d_yy)/4 enters
    r2 = np.sum(x ** 2, axis=-1)
    s = np.zeros(len(points))
    for a in range(4):
        s -= 0.25 * r2 * _fd_pure_second(_logdet_real, x, a, spacing)
    return s


def hopf_scalar_check(samples=100, seed=0, method="symbolic", spacing=FD_SPACING) -> dict:
    """Evaluate ``S^Ch`` on random annulus points and at their deck images."""
    if samples < 10:
        raise ValueError("need at least 10 samples")
    pts = sample_annulus(samples, seed)
    for p in pts[:3]:
        ChartPointSample(tuple(p), hopf_metric(p), spacing)
    if method == "symbolic":
        vals = _scalar_symbolic_at(pts)
        deck = _scalar_symbolic_at(pts / 2)
    elif method == "fd":
        vals = _scalar_fd_at(pts, spacing)
        deck = _scalar_fd_at(pts / 2, spacing)
    else:
        raise ValueError(f"unknown method {method!r}")
    return dict(
        method=method,
        samples=samples,
        seed=seed,
        mean=float(vals.mean()),
        max_deviation=float(np.abs(vals - 2.0).max()),
        deck_deviation=float(np.abs(vals - deck).max()),
        values=vals,
    )


# --- degree by quadrature ----------------------------------------------------

def hopf_degree(order=24, method="symbolic") -> dict:
    """``Gamma = Vol^{-1/2} int S dmu`` over the fundamental annulus.

    Uses ``dmu = 2^n det h dLeb`` and hyperspherical coordinates
    ``z1 = r cos(chi) e^{i a}``, ``z2 = r sin(chi) e^{i b}`` with Jacobian
    ``r^3 sin(chi) cos(chi)``; Gauss-Legendre in ``r`` and ``chi``, uniform
    nodes in the two angles. The metric is Gauduchon (see
    :func:`hopf_gauduchon_symbolic`), so no projection is needed.
    """
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = INNER + (OUTER - INNER) * (xr + 1) / 2
    wr = wr * (OUTER - INNER) / 2
    xc, wc = np.polynomial.legendre.leggauss(order)
    chi = np.pi / 4 * (xc + 1)
    wc = wc * np.pi / 4
    m = 8
    ang = 2 * np.pi * np.arange(m) / m
    wa = 2 * np.pi / m
    R, C, A, B = np.meshgrid(r, chi, ang, ang, indexing="ij")
    W = (wr[:, None, None, None] * wc[None, :, None, None] * wa * wa
         * R ** 3 * np.sin(C) * np.cos(C))
    pts = np.stack([(R * np.cos(C) * np.exp(1j * A)).ravel(), (R * np.sin(C) * np.exp(1j * B)).ravel()], axis=-1)
    det = 1.0 / np.sum(np.abs(pts) ** 2, axis=-1) ** 2
    rho = 4.0 * det
    s = _scalar_symbolic_at(pts) if method == "symbolic" else _scalar_fd_at(pts)
    vol = float(np.sum(W.ravel() * rho))
    total = float(np.sum(W.ravel() * rho * s))
    return dict(volume=vol, integral=total, gamma=total / np.sqrt(vol), order=order)
