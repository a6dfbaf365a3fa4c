"""Solvers for the Chern-Yamabe equation ``Delta f + S = lambda exp(2f/n)``.

All procedures work on a :class:`ConformalInstance`: a unit-volume Gauduchon
metric ``eta``, its Chern Laplacian, the curvature ``S`` and the measure
``dmu_eta``. Potentials returned are relative to ``eta`` and normalised by
``int exp(2f/n) dmu_eta = 1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .chern import (
    ConvergenceError,
    conformal_curvature,
    conformal_rescale,
    lee_form,
    spectral_gmres,
)
from .gauduchon import ConformalInstance
from .grid import gradient, hodge_laplacian, integrate, pairing_1forms


class DegreeMismatchError(ValueError):
    """Right-hand side not in the range of the Chern Laplacian."""


class SignError(ValueError):
    pass


class ContinuationError(RuntimeError):
    def __init__(self, msg, last_t):
        super().__init__(msg)
        self.last_t = last_t


class NonBalancedWarning(UserWarning):
    pass


@dataclass
class SolverConfig:
    linear_tol: float = 1e-10
    newton_tol: float = 1e-9
    newton_max: int = 50
    steps: int = 20
    max_halvings: int = 8
    residual_tol: float = 1e-6
    degree_tol: float = 1e-8
    bound_slack: float = 1e-8
    time_step: float = 0.01
    horizon: float = 100.0
    flow_tol: float = 1e-10
    blowup_cap: float = 50.0
    snapshot_every: int = 100

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ChernYamabeProblem:
    instance: ConformalInstance
    lam: float | None = None
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.lam is None:
            self.lam = float(self.instance.gamma)

    @property
    def n(self):
        return self.instance.n

    @property
    def synthetic(self):
        return self.instance.synthetic


@dataclass
class SolverSolution:
    f: np.ndarray
    lam: float
    residual: float
    constraint_defect: float
    trace: list = field(default_factory=list)
    bound_violations: int = 0
    method: str = ""
    synthetic: bool = False

    @property
    def converged(self):
        return True

    def metric(self, instance: ConformalInstance):
        return conformal_rescale(instance.eta, self.f)

    def curvature(self, instance: ConformalInstance) -> np.ndarray:
        """``S^Ch`` of the solved metric via the conformal change law.

        Uses the instance's ``S`` so prescribed-curvature instances work too.
        """
        return conformal_curvature(instance.eta, self.f, instance.scalar)


@dataclass
class NoConvergence:
    reason: str
    iterations: int
    residual: float
    trace: list = field(default_factory=list)

    @property
    def converged(self):
        return False


@dataclass
class FlowTrace:
    times: list
    snapshots: list
    functional: list
    residuals: list
    reason: str
    f: np.ndarray
    snapshot_times: list = field(default_factory=list)


@dataclass
class AprioriBounds:
    """Envelope ``lower <= exp(2f/n) <= upper`` along the continuity path.

    ``upper_literal`` is the variant that uses ``max S``; it is not a valid
    bound for strongly varying ``S`` and is kept for comparison only.
    """

    lower: float
    upper: float
    upper_literal: float

    def margins(self, u, n):
        e = np.exp(2.0 * u / n)
        return float(e.min() - self.lower), float(self.upper - e.max())


# --- helpers -----------------------------------------------------------------

def residual(instance: ConformalInstance, f, lam) -> np.ndarray:
    return instance.laplacian(f) + instance.scalar - lam * np.exp(2.0 * f / instance.n)


def normalization_constant(instance: ConformalInstance, f) -> float:
    """The constant ``c`` with ``int exp(2(f+c)/n) dmu = 1``."""
    n = instance.n
    return -0.5 * n * np.log(instance.integrate(np.exp(2.0 * f / n)))


def constraint_defect(instance: ConformalInstance, f) -> float:
    return abs(instance.integrate(np.exp(2.0 * f / instance.n)) - 1.0)


def _mean_projector(instance):
    rho = instance.measure
    total = float(np.sum(rho))
    return lambda x: float(np.sum(x * rho)) / total


def _poisson(instance, rhs, rtol):
    """Solve ``Delta f = rhs`` for ``rhs`` with zero ``dmu``-mean; mean(f) = 0."""
    op = instance.laplacian
    chart = instance.chart
    if op.constant:
        sym = op.symbol
        f_hat = np.where(sym > 0, chart.fft(rhs) / np.where(sym > 0, sym, 1.0), 0.0)
        return chart.ifft(f_hat)
    mean = _mean_projector(instance)
    sym = op.symbol.copy()
    sym.flat[0] = 1.0
    f = spectral_gmres(chart, lambda x: op(x) + mean(x), rhs, sym, rtol=rtol)
    return f - mean(f)


def _solution(instance, f, lam, method, trace=None, violations=0):
    c = normalization_constant(instance, f)
    f = f + c
    lam = lam * np.exp(-2.0 * c / instance.n)
    res = float(np.abs(residual(instance, f, lam)).max())
    return SolverSolution(
        f=f,
        lam=float(lam),
        residual=res,
        constraint_defect=constraint_defect(instance, f),
        trace=trace or [],
        bound_violations=violations,
        method=method,
        synthetic=instance.synthetic,
    )


# --- zero degree -------------------------------------------------------------

def solve_zero_degree(problem: ChernYamabeProblem) -> SolverSolution:
    """Linear solve ``Delta f = -S`` followed by the normalising shift."""
    inst, cfg = problem.instance, problem.config
    s = inst.scalar
    deg = inst.integrate(s)
    if abs(deg) > cfg.degree_tol * max(1.0, float(np.abs(s).max())):
        raise DegreeMismatchError(f"int S dmu = {deg:.3e} is not zero")
    f = _poisson(inst, -s, cfg.linear_tol * 1e-2)
    sol = _solution(inst, f, 0.0, "zero-degree")
    if sol.residual > cfg.residual_tol:
        raise ConvergenceError(f"zero-degree residual {sol.residual:.2e}")
    return sol


# --- negative degree ---------------------------------------------------------

def negativize(problem: ChernYamabeProblem) -> np.ndarray:
    """Potential ``f`` with ``S^Ch(exp(2f/n) eta) = Gamma exp(-2f/n) < 0``."""
    inst = problem.instance
    gamma = inst.gamma
    if not gamma < 0:
        raise SignError(f"negativize needs Gamma < 0, got {gamma}")
    f = _poisson(inst, gamma - inst.scalar, problem.config.linear_tol * 1e-2)
    return f + normalization_constant(inst, f)


def apriori_bounds(s, lam) -> AprioriBounds:
    """Uniform envelope for ``exp(2f/n)`` along the continuity path.

    At a maximum point ``-lam e <= -t S - lam (1 - t) <= max(-S) - lam``;
    at a minimum point ``-lam e >= min{min(-S), -lam}``.
    """
    s = np.asarray(s, dtype=float)
    if not lam < 0:
        raise SignError("a priori bounds need lambda < 0")
    if not np.all(s < 0):
        raise SignError("a priori bounds need S < 0 pointwise")
    upper = (float(s.min()) + lam) / lam
    upper_literal = (float(s.max()) + lam) / lam
    lower = min(float((-s).min()), -lam) / (-lam)
    return AprioriBounds(lower=lower, upper=upper, upper_literal=upper_literal)


class _Path:
    """``ChYa(t, u) = w Delta u + t S' - lam exp(2u/n) + lam (1 - t)``.

    The base is ``exp(2 f0/n) eta`` whose Chern Laplacian is ``w Delta_eta``
    with ``w = exp(-2 f0/n)``.
    """

    def __init__(self, inst, f0, lam, cfg):
        self.inst, self.lam, self.cfg = inst, lam, cfg
        self.n = inst.n
        self.w = np.exp(-2.0 * f0 / self.n)
        self.sp = self.w * (inst.scalar + inst.laplacian(f0))
        self.op = inst.laplacian

    def residual(self, t, u):
        return self.w * self.op(u) + t * self.sp - self.lam * np.exp(2.0 * u / self.n) + self.lam * (1.0 - t)

    def newton_step(self, u, r):
        # D v = w Delta v - lam (2/n) e^{2u/n} v, divided through by w
        q = -self.lam * (2.0 / self.n) * np.exp(2.0 * u / self.n) / self.w
        sym = self.op.symbol + float(q.mean())
        rhs = -r / self.w
        chart = self.inst.chart
        if self.op.constant and np.ptp(q) < 1e-14:
            return chart.ifft(chart.fft(rhs) / sym)
        return spectral_gmres(chart, lambda v: self.op(v) + q * v, rhs, sym, rtol=self.cfg.linear_tol)

    def newton(self, t, u, backtrack=False):
        """Returns ``(u, iterations)`` or raises ConvergenceError."""
        r = self.residual(t, u)
        norm = float(np.abs(r).max())
        for it in range(self.cfg.newton_max + 1):
            if norm < self.cfg.newton_tol:
                return u, it
            if it == self.cfg.newton_max or not np.isfinite(norm):
                break
            du = self.newton_step(u, r)
            step = 1.0
            while True:
                cand = u + step * du
                rc = self.residual(t, cand)
                nc = float(np.abs(rc).max())
                if np.isfinite(nc) and (nc < norm or not backtrack):
                    break
                step *= 0.5
                if step < 1e-6:
                    raise ConvergenceError("Newton line search failed")
            if not backtrack and not nc < 2.0 * norm:
                break
            u, r, norm = cand, rc, nc
        raise ConvergenceError(f"Newton stalled at residual {norm:.2e}")


def _path_for(problem):
    f0 = negativize(problem)
    return _Path(problem.instance, f0, problem.lam, problem.config), f0


def continuity_solve(problem: ChernYamabeProblem, schedule=None) -> SolverSolution:
    """Continuity method from ``t = 0`` (``u = 0``) to ``t = 1``.

    Each schedule interval is subdivided by halving when Newton fails.
    The trace records one row per accepted ``t``.
    """
    cfg, lam = problem.config, problem.lam
    if not lam < 0:
        raise SignError(f"continuity method needs lambda < 0, got {lam}")
    path, f0 = _path_for(problem)
    bounds = apriori_bounds(path.sp, lam)
    if schedule is None:
        schedule = np.linspace(0.0, 1.0, cfg.steps + 1)
    schedule = np.asarray(schedule, dtype=float)
    if schedule[0] != 0.0 or schedule[-1] != 1.0 or np.any(np.diff(schedule) <= 0):
        raise ValueError("schedule must increase strictly from 0 to 1")

    n = problem.n
    u = np.zeros(problem.instance.chart.shape)
    trace, violations = [], 0
    t = 0.0
    for target in schedule[1:]:
        halvings = 0
        while t < target:
            dt = (target - t) / 2 ** halvings
            try:
                u_new, its = path.newton(t + dt, u)
            except ConvergenceError:
                halvings += 1
                if halvings > cfg.max_halvings:
                    raise ContinuationError(f"continuation failed beyond t = {t}", t) from None
                continue
            t, u = (target if halvings == 0 else t + dt), u_new
            lo, up = bounds.margins(u, n)
            up_lit = bounds.upper_literal - float(np.exp(2 * u / n).max())
            bad = lo < -cfg.bound_slack or up < -cfg.bound_slack
            violations += int(bad)
            trace.append(dict(
                t=t,
                residual=float(np.abs(path.residual(t, u)).max()),
                sup_norm=float(np.abs(u).max()),
                newton_iterations=its,
                lower_margin=lo,
                upper_margin=up,
                literal_upper_margin=up_lit,
            ))
            halvings = max(halvings - 1, 0)
    sol = _solution(problem.instance, f0 + u, lam, "continuity", trace, violations)
    sol.bounds = bounds
    if sol.residual > cfg.residual_tol:
        raise ConvergenceError(f"continuity residual {sol.residual:.2e}")
    return sol


def _smooth_guess(chart, rng, amplitude):
    u = np.zeros(chart.shape)
    for _ in range(3):
        k = rng.integers(-2, 3, size=chart.real_dim)
        u += chart.trig(k, amplitude * rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi))
    return u


def uniqueness_probe(problem: ChernYamabeProblem, seeds=5, seed=0, amplitude=0.5) -> dict:
    """Newton at ``t = 1`` from random starts, plus the ``2 lambda`` offset check."""
    lam = problem.lam
    if not lam < 0:
        raise SignError("uniqueness probe needs lambda < 0")
    inst, n = problem.instance, problem.n
    rng = np.random.default_rng(seed)
    path, f0 = _path_for(problem)
    raw = []
    for _ in range(seeds):
        u0 = _smooth_guess(inst.chart, rng, amplitude)
        u, _ = path.newton(1.0, u0, backtrack=True)
        raw.append(f0 + u)
    normed = [f + normalization_constant(inst, f) for f in raw]
    spread = max((float(np.abs(a - b).max()) for a in normed for b in normed), default=0.0)

    path2 = _Path(inst, f0, 2.0 * lam, problem.config)
    u2, _ = path2.newton(1.0, np.zeros(inst.chart.shape), backtrack=True)
    offset = raw[0] - (f0 + u2)
    expected = 0.5 * n * np.log(2.0)
    offset_error = float(np.abs(offset - expected).max())
    return dict(
        seeds=seeds,
        max_pairwise=spread,
        offset_expected=expected,
        offset_mean=float(offset.mean()),
        offset_error=offset_error,
        consistent=bool(spread < 1e-6 and offset_error < 1e-8),
    )


# --- flow --------------------------------------------------------------------

def run_flow(problem: ChernYamabeProblem, time_step=None, horizon=None, f0=None) -> FlowTrace:
    """Integrate ``df/dt = -Delta f - S + lam exp(2f/n)``.

    Constant-coefficient bases use first-order exponential time differencing
    on ``L = Delta + ell`` with ``ell = max(0, -2 lam / n)``; the remainder is
    explicit. Otherwise ``Delta`` is taken backward-Euler via GMRES.
    """
    inst, cfg, lam = problem.instance, problem.config, problem.lam
    dt = cfg.time_step if time_step is None else time_step
    horizon = cfg.horizon if horizon is None else horizon
    chart, op, n = inst.chart, inst.laplacian, inst.n
    f = np.zeros(chart.shape) if f0 is None else np.array(f0, dtype=float)
    record_f = inst.balanced
    if not record_f:
        warnings.warn("base is not balanced: the flow is not a gradient flow", NonBalancedWarning)

    ell = max(0.0, -2.0 * lam / n)
    if op.constant:
        big_l = op.symbol + ell
        decay = np.exp(-dt * big_l)
        phi = np.where(big_l > 0, -np.expm1(-dt * big_l) / np.where(big_l > 0, big_l, 1.0), dt)

        def step(f):
            nl = ell * f - inst.scalar + lam * np.exp(2.0 * f / n)
            return chart.ifft(decay * chart.fft(f) + phi * chart.fft(nl))
    else:
        sym = dt * op.symbol + 1.0

        def step(f):
            rhs = f + dt * (-inst.scalar + lam * np.exp(2.0 * f / n))
            return spectral_gmres(chart, lambda x: x + dt * op(x), rhs, sym, rtol=1e-13)

    times, fvals, res_hist, snaps, snap_t = [], [], [], [], []
    steps = int(round(horizon / dt))
    reason = "horizon"
    for k in range(steps + 1):
        t = k * dt
        with np.errstate(over="ignore"):  # blow-up is detected below
            r = float(np.abs(residual(inst, f, lam)).max())
        times.append(t)
        res_hist.append(r)
        fvals.append(functional_F(inst, f, check=False) if record_f else float("nan"))
        if k % cfg.snapshot_every == 0:
            snaps.append(f.copy())
            snap_t.append(t)
        if not np.isfinite(r) or np.abs(f).max() > cfg.blowup_cap:
            reason = "blow-up"
            break
        if r < cfg.flow_tol:
            reason = "converged"
            break
        if k == steps:
            break
        f = step(f)
    return FlowTrace(times, snaps, fvals, res_hist, reason, f, snap_t)


# --- functionals -------------------------------------------------------------

def _warn_unbalanced(instance, check):
    if check and not instance.balanced:
        warnings.warn("Euler-Lagrange interpretation needs a balanced base", NonBalancedWarning)


def functional_F(instance: ConformalInstance, f, check=True) -> float:
    """``1/2 int |df|^2 dmu + int S f dmu``."""
    _warn_unbalanced(instance, check)
    df = gradient(instance.chart, f)
    energy = pairing_1forms(df, df, instance.eta)
    return 0.5 * instance.integrate(energy) + instance.integrate(instance.scalar * f)


def functional_gradient(instance: ConformalInstance, f) -> np.ndarray:
    """``L^2(dmu)`` gradient of :func:`functional_F`: ``Delta_d f + S``."""
    return hodge_laplacian(f, instance.eta) + instance.scalar


def functional_Fstar(instance: ConformalInstance, f, lam=None, check=True) -> float:
    """Scale-invariant functional ``F/n - (lam/2) log int exp(2f/n) dmu``.

    Invariant under ``f -> f + c`` exactly when ``lam = Gamma``.
    """
    lam = instance.gamma if lam is None else lam
    n = instance.n
    return functional_F(instance, f, check) / n - 0.5 * lam * np.log(instance.integrate(np.exp(2.0 * f / n)))


def el_gradient(instance: ConformalInstance, f, lam=None) -> np.ndarray:
    """``Delta f + S - lam exp(2f/n) / int exp(2f/n)``; ``n`` times the gradient of F*."""
    lam = instance.gamma if lam is None else lam
    e = np.exp(2.0 * f / instance.n)
    return hodge_laplacian(f, instance.eta) + instance.scalar - lam * e / instance.integrate(e)


def alpha_form_asymmetry(metric, h, g, theta=None) -> float:
    """``int h (dg, theta) dmu - int g (dh, theta) dmu``."""
    chart = metric.chart
    if theta is None:
        theta = lee_form(metric)
    a = h * pairing_1forms(gradient(chart, g), theta, metric)
    b = g * pairing_1forms(gradient(chart, h), theta, metric)
    return integrate(chart, a - b, metric)


# --- small data --------------------------------------------------------------

def small_data_solve(instance: ConformalInstance, max_iter=30, tol=1e-9, config=None):
    """Bordered Newton on ``(u, lam)`` from ``(0, Gamma)``.

    Unknowns satisfy ``Delta u + S = lam exp(2u/n)`` and
    ``int exp(2u/n) dmu = 1``. Returns :class:`NoConvergence` on failure.
    """
    cfg = config or SolverConfig()
    chart, op, n = instance.chart, instance.laplacian, instance.n
    size = chart.size
    rho = instance.measure * chart.cell_volume
    sym = op.symbol.copy()
    sym.flat[0] = 1.0
    u = np.zeros(chart.shape)
    lam = float(instance.gamma)
    trace = []

    def prec(x):
        # exact inverse of the Jacobian at (0, 0) for a flat unit-volume base
        r, c = x[:size].reshape(chart.shape), x[size]
        r_hat = chart.fft(r)
        dlam = -r_hat.flat[0].real / size
        r_hat.flat[0] = 0.0
        v = chart.ifft(r_hat / sym) + 0.5 * n * c
        return np.concatenate([v.ravel(), [dlam]])

    norm = np.inf
    for it in range(max_iter + 1):
        e = np.exp(2.0 * u / n)
        g = op(u) + instance.scalar - lam * e
        c = float(np.sum(e * rho)) - 1.0
        norm = max(float(np.abs(g).max()), abs(c))
        trace.append(dict(iteration=it, residual=norm, lam=lam))
        if not np.isfinite(norm) or norm > 1e8:
            return NoConvergence("diverged", it, norm, trace)
        if norm < tol:
            break
        if it == max_iter:
            return NoConvergence("max iterations", it, norm, trace)

        def jac(x, e=e, lam=lam):
            v, dl = x[:size].reshape(chart.shape), x[size]
            top = op(v) - lam * (2.0 / n) * e * v - dl * e
            bot = (2.0 / n) * float(np.sum(e * v * rho))
            return np.concatenate([top.ravel(), [bot]])

        a = LinearOperator((size + 1, size + 1), matvec=jac)
        m = LinearOperator((size + 1, size + 1), matvec=prec)
        rhs = -np.concatenate([g.ravel(), [c]])
        x, info = gmres(a, rhs, M=m, rtol=cfg.linear_tol, atol=0.0, restart=60, maxiter=20)
        if info != 0:
            return NoConvergence("linear solve failed", it, norm, trace)
        u = u + x[:size].reshape(chart.shape)
        lam = lam + float(x[size])
    res = float(np.abs(residual(instance, u, lam)).max())
    return SolverSolution(
        f=u,
        lam=lam,
        residual=res,
        constraint_defect=constraint_defect(instance, u),
        trace=trace,
        method="small-data",
        synthetic=instance.synthetic,
    )


def with_lambda(problem: ChernYamabeProblem, lam) -> ChernYamabeProblem:
    return replace(problem, lam=lam)
