"""Metric recipes, synthetic instances and the product degree-sign formula."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chern import conformal_rescale
from .gauduchon import ConformalInstance, gauduchon_degree, synthetic_instance
from .grid import GridChart, HermitianMetricField, integrate

KINDS = ("flat", "conformal-flat", "random-perturbed", "hopf-chart", "synthetic-S")
# keeps min eigenvalue of I + A P above 1 - 0.79 > 0.2
AMPLITUDE_BUDGET = 0.79
SMALL_DATA = 0.01


class RecipeError(ValueError):
    pass


@dataclass
class MetricRecipe:
    """Reproducible description of a metric or prescribed-curvature instance.

    ``params`` by kind:

    - ``conformal-flat``: ``potential`` (trig spec)
    - ``random-perturbed``: ``amplitude``, ``terms``
    - ``synthetic-S``: ``scalar`` (trig spec), ``sign`` in
      ``negative | zero | small | positive``
    """

    kind: str
    params: dict = field(default_factory=dict)
    complex_dim: int = 2
    resolution: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RecipeError(f"unknown recipe kind {self.kind!r}")

    def chart(self) -> GridChart:
        return GridChart(self.complex_dim, self.resolution)

    def as_dict(self):
        return dict(kind=self.kind, params=self.params, complex_dim=self.complex_dim,
                    resolution=self.resolution, seed=self.seed)


def trig_field(chart: GridChart, spec) -> np.ndarray:
    """Field from ``{"constant": c, "terms": [{"k": [...], "amplitude": a, "phase": p}]}``.

    A bare list is read as the ``terms`` entry.
    """
    if isinstance(spec, (int, float)):
        return np.full(chart.shape, float(spec))
    if isinstance(spec, list):
        spec = {"terms": spec}
    out = np.full(chart.shape, float(spec.get("constant", 0.0)))
    for term in spec.get("terms", []):
        k = term["k"]
        if len(k) != chart.real_dim:
            raise RecipeError(f"wavevector {k} needs {chart.real_dim} entries")
        out += chart.trig(k, term.get("amplitude", 1.0), term.get("phase", 0.0))
    return out


def _random_hermitian(rng, n):
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (b + b.conj().T)


def random_perturbed_metric(chart: GridChart, amplitude=0.5, seed=0, terms=4) -> HermitianMetricField:
    """``h = I + A P`` with ``P`` a seeded Hermitian trigonometric polynomial.

    ``P`` has ``terms`` wavevectors with entries in {-1, 0, 1} and total
    degree at most 2; each carries independent cosine and sine coefficients.
    ``A`` is capped so that ``|A P| <= 0.79`` pointwise in operator norm.
    """
    n = chart.complex_dim
    rng = np.random.default_rng(seed)
    p = np.zeros(chart.shape + (n, n), dtype=complex)
    bound = 0.0
    for _ in range(terms):
        while True:
            k = rng.integers(-1, 2, size=chart.real_dim)
            if 0 < np.abs(k).sum() <= 2:
                break
        for phase in (0.0, -np.pi / 2):
            b = _random_hermitian(rng, n)
            bound += float(np.abs(np.linalg.eigvalsh(b)).max())
            p += chart.trig(k, 1.0, phase)[..., None, None] * b
    a = min(amplitude, AMPLITUDE_BUDGET / bound)
    return HermitianMetricField(chart, np.eye(n) + a * p)


def _check_sign(s, sign, chart):
    eta = HermitianMetricField.unit_volume_flat(chart)
    mean = integrate(chart, s, eta)
    ok = {
        "negative": bool(np.all(s < 0)),
        "zero": abs(mean) < 1e-8,
        "small": float(np.abs(s).max()) <= SMALL_DATA,
        "positive": mean > 0,
        None: True,
    }
    if sign not in ok:
        raise RecipeError(f"unknown sign declaration {sign!r}")
    if not ok[sign]:
        raise RecipeError(f"prescribed S violates its sign declaration {sign!r}")


def make_metric(recipe: MetricRecipe) -> HermitianMetricField:
    chart = recipe.chart()
    p = recipe.params
    if recipe.kind == "flat":
        return HermitianMetricField.identity(chart, p.get("scale", 1.0))
    if recipe.kind == "conformal-flat":
        f = trig_field(chart, p.get("potential", []))
        return conformal_rescale(HermitianMetricField.identity(chart), f)
    if recipe.kind == "random-perturbed":
        return random_perturbed_metric(chart, p.get("amplitude", 0.5), recipe.seed, p.get("terms", 4))
    raise RecipeError(f"{recipe.kind} recipes have no grid metric")


def make_instance(recipe: MetricRecipe) -> ConformalInstance:
    """Build the :class:`ConformalInstance` described by ``recipe``."""
    if recipe.kind == "hopf-chart":
        raise RecipeError("the Hopf chart has no grid model; use the hopf module checks")
    if recipe.kind == "synthetic-S":
        chart = recipe.chart()
        s = trig_field(chart, recipe.params.get("scalar", 0.0))
        _check_sign(s, recipe.params.get("sign"), chart)
        inst = synthetic_instance(chart, s)
    else:
        inst = gauduchon_degree(make_metric(recipe))
    inst.recipe = recipe.as_dict()
    return inst


def random_negative_scalar(chart: GridChart, seed=0, amplitude=0.3, terms=3) -> dict:
    """Trig spec for a pointwise-negative ``S = -1 + small oscillation``."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(0.2, 1.0, size=terms)
    amps *= amplitude / amps.sum()
    out = []
    for a in amps:
        while True:
            k = rng.integers(-2, 3, size=chart.real_dim)
            if np.any(k):
                break
        out.append({"k": [int(v) for v in k], "amplitude": float(a), "phase": float(rng.uniform(0, 2 * np.pi))})
    return {"constant": -1.0, "terms": out}


def product_degree_sign(gamma: float, genus: int, delta: float) -> tuple[int, float]:
    """Sign of the degree of ``X x Sigma_g`` with fibre weight ``delta``.

    Returns ``(sign(gamma * delta + 4 pi (1 - genus)), 4 pi (genus - 1) / gamma)``.
    """
    if not gamma > 0:
        raise ValueError("the degree-sign formula assumes gamma > 0")
    if genus < 2:
        raise ValueError("genus must be at least 2")
    if not delta > 0:
        raise ValueError("delta must be positive")
    value = gamma * delta + 4 * math.pi * (1 - genus)
    return int(np.sign(value)), 4 * math.pi * (genus - 1) / gamma
