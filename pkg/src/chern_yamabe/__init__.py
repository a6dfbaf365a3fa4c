"""Chern scalar curvature, Gauduchon degree and Chern-Yamabe solvers on model manifolds."""
from .bifurcation import bifurcation_instants, cp1_levels, kernel_families, required_jmax, transversality_multipliers
from .chern import (
    ChernLaplacian,
    chern_laplacian,
    chern_laplacian_via_lee,
    chern_scalar,
    conformal_curvature,
    conformal_rescale,
    gauduchon_residual,
    lee_form,
)
from .gauduchon import ConformalInstance, GauduchonReport, gauduchon_degree, gauduchon_project, synthetic_instance
from .grid import (
    GridChart,
    HermitianMetricField,
    hodge_laplacian,
    integrate,
    pairing_1forms,
    spectral_derivative,
)
from .hopf import hopf_degree, hopf_scalar_check
from .models import MetricRecipe, make_instance, product_degree_sign, random_negative_scalar, random_perturbed_metric
from .solver import (
    ChernYamabeProblem,
    SolverConfig,
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

__version__ = "0.1.0"
