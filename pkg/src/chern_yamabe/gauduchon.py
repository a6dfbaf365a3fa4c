"""Gauduchon representatives, the Gauduchon degree and conformal instances."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .chern import (
    ChernLaplacian,
    ConvergenceError,
    chern_scalar,
    gauduchon_residual,
    lee_form,
    spectral_gmres,
)
from .grid import HermitianMetricField, integrate

SHIFT = 1.0
KERNEL_TOL = 1e-10
MAX_ITER = 500
GAUDUCHON_TOL = 1e-8


class KernelPositivityError(RuntimeError):
    """The computed adjoint kernel changes sign (grid too coarse)."""


@dataclass
class GauduchonReport:
    iterations: int
    residual: float
    balanced_residual: float
    kernel_eigenvalue: float
    positivity_margin: float
    adjoint_residual: float = 0.0
    input_residual: float = float("nan")

    def as_dict(self):
        return dict(self.__dict__)


def _weighted_mean(op, v):
    rho = op.metric.density
    return float(np.sum(v * rho) / np.sum(rho))


def adjoint_kernel(metric: HermitianMetricField, tol=KERNEL_TOL, max_iter=MAX_ITER, shift=SHIFT):
    """Positive ``v`` spanning ``ker (Delta^Ch)^*``, normalised to weighted mean 1.

    Inverse iteration on ``B = (Delta^Ch)^* + shift * P`` where ``P`` is the
    weighted mean projector. Each sweep solves ``B delta = (Delta^Ch)^* v``
    and updates ``v -= delta``; the weighted mean of ``v`` is invariant
    because the adjoint has range orthogonal to the constants.
    """
    op = ChernLaplacian(metric)

    def b(x):
        return op.adjoint(x) + shift * _weighted_mean(op, x)

    v = np.ones(metric.chart.shape)
    if op.constant:
        return v, 0, 0.0, op
    it, res = 0, np.inf
    for it in range(1, max_iter + 1):
        r = op.adjoint(v)
        res = float(np.abs(r).max() / np.abs(v).max())
        if res < tol:
            break
        sym = op.symbol.copy()
        sym.flat[0] = shift
        v = v - spectral_gmres(op.chart, b, r, sym, rtol=1e-13)
    else:
        raise ConvergenceError(f"adjoint kernel residual {res:.2e} after {max_iter} sweeps")
    return v, it, res, op


def gauduchon_project(metric: HermitianMetricField, tol=KERNEL_TOL, max_iter=MAX_ITER):
    """Unit-volume Gauduchon metric ``eta`` conformal to ``metric``.

    With ``v > 0`` in the adjoint kernel, ``eta^{n-1} = c v omega^{n-1}``.
    """
    n = metric.n
    if n < 2:
        raise ValueError("Gauduchon metrics need complex dimension >= 2")
    v, iters, res, op = adjoint_kernel(metric, tol, max_iter)
    vmin, vmax = float(v.min()), float(v.max())
    if vmin <= 0:
        raise KernelPositivityError(f"adjoint kernel changes sign (min {vmin:.3e})")
    factor = v ** (1.0 / (n - 1))
    eta = metric.scaled(factor)
    eta = eta.scaled(eta.volume() ** (-1.0 / n))
    av = op.adjoint(v)
    eig = float(integrate(metric.chart, av * v, metric) / integrate(metric.chart, v * v, metric))
    gaud, bal = gauduchon_residual(eta)
    report = GauduchonReport(
        iterations=iters,
        residual=gaud,
        balanced_residual=bal,
        kernel_eigenvalue=eig,
        positivity_margin=vmin / vmax,
        adjoint_residual=res,
    )
    return eta, report


@dataclass
class ConformalInstance:
    """Everything a Chern-Yamabe solver needs about one conformal class.

    ``eta = exp(-2 g / n) * base`` is the unit-volume Gauduchon representative;
    ``scalar`` is ``S^Ch(eta)`` (or a prescribed field when ``synthetic``).
    """

    base: HermitianMetricField
    eta: HermitianMetricField
    potential: np.ndarray
    scalar: np.ndarray
    theta: np.ndarray
    gamma: float
    report: GauduchonReport | None = None
    synthetic: bool = False
    recipe: dict | None = field(default=None, repr=False)

    @property
    def chart(self):
        return self.eta.chart

    @property
    def n(self):
        return self.eta.n

    @property
    def measure(self) -> np.ndarray:
        return self.eta.density

    @cached_property
    def laplacian(self) -> ChernLaplacian:
        return ChernLaplacian(self.eta)

    @cached_property
    def balanced(self) -> bool:
        return float(np.abs(self.theta).max()) < 1e-10

    def integrate(self, u) -> float:
        return integrate(self.chart, u, self.eta)

    def recompute_degree(self) -> float:
        return self.integrate(self.scalar)

    def check(self, vol_tol=1e-8, residual_tol=GAUDUCHON_TOL):
        vol = self.eta.volume()
        if abs(vol - 1.0) > vol_tol:
            raise ValueError(f"Gauduchon representative has volume {vol}")
        if self.report is not None and self.report.residual > residual_tol:
            raise ValueError(f"Gauduchon residual {self.report.residual:.2e} above tolerance")
        return True


def gauduchon_degree(metric: HermitianMetricField, tol=KERNEL_TOL) -> ConformalInstance:
    """Project to the Gauduchon representative and assemble the instance."""
    input_res, _ = gauduchon_residual(metric)
    eta, report = gauduchon_project(metric, tol=tol)
    report.input_residual = input_res
    # eta = exp(-2g/n) omega pointwise
    ratio = eta.h[..., 0, 0].real / metric.h[..., 0, 0].real
    g = -0.5 * metric.n * np.log(ratio)
    scalar = chern_scalar(eta)
    gamma = integrate(metric.chart, scalar, eta)
    return ConformalInstance(
        base=metric,
        eta=eta,
        potential=g,
        scalar=scalar,
        theta=lee_form(eta),
        gamma=gamma,
        report=report,
    )


def synthetic_instance(chart, scalar) -> ConformalInstance:
    """Flat unit-volume base with a prescribed ``S`` (no geometric meaning)."""
    eta = HermitianMetricField.unit_volume_flat(chart)
    scalar = np.broadcast_to(np.asarray(scalar, dtype=float), chart.shape).copy()
    return ConformalInstance(
        base=eta,
        eta=eta,
        potential=np.zeros(chart.shape),
        scalar=scalar,
        theta=np.zeros((chart.real_dim,) + chart.shape),
        gamma=integrate(chart, scalar, eta),
        report=None,
        synthetic=True,
    )
