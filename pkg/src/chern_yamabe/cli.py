"""``chern-yamabe <command> --config path [--out dir] [--seed n]``.

Exit codes: 0 success, 2 numerical tolerance failure, 3 configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from .chern import (
    ConsistencyError,
    ConvergenceError,
    chern_laplacian,
    chern_laplacian_via_lee,
    chern_scalar,
    conformal_curvature,
    conformal_rescale,
    gauduchon_residual,
    lee_form,
)
from .config import COMMANDS, ConfigError, load_config, solver_config
from .gauduchon import KernelPositivityError
from .grid import GridChart, HermitianMetricField, PositivityError
from .hopf import hopf_degree, hopf_scalar_check
from .io import entry, load_instance, save_instance, write_report, write_trace
from .models import MetricRecipe, RecipeError, make_instance, make_metric, random_perturbed_metric
from .solver import (
    ChernYamabeProblem,
    ContinuationError,
    DegreeMismatchError,
    SignError,
    continuity_solve,
    run_flow,
    small_data_solve,
    solve_zero_degree,
)

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 2, 3


class ToleranceFailure(RuntimeError):
    pass


def _recipe(cfg) -> MetricRecipe:
    r = cfg["recipe"]
    return MetricRecipe(r["kind"], r.get("params", {}), r.get("complex_dim", 2), r.get("resolution", 16), r["seed"])


def _instance(cfg):
    if cfg.get("instance"):
        return load_instance(cfg["instance"])
    return make_instance(_recipe(cfg))


def _stats(x):
    return dict(min=float(x.min()), max=float(x.max()), mean=float(x.mean()))


# --- commands ----------------------------------------------------------------

def cmd_curvature(cfg, out):
    recipe = _recipe(cfg)
    if recipe.kind == "hopf-chart":
        rep = hopf_scalar_check(cfg["verify"]["hopf_samples"], recipe.seed)
        rep.pop("values")
        return dict(hopf=dict(
            mean=entry(rep["mean"], "models"),
            max_deviation=entry(rep["max_deviation"], "models", 1e-8, rep["max_deviation"] < 1e-8),
            deck_deviation=entry(rep["deck_deviation"], "models", 1e-8, rep["deck_deviation"] < 1e-8),
        ))
    if recipe.kind == "synthetic-S":
        inst = make_instance(recipe)
        return dict(synthetic=True, scalar={k: entry(v, "models") for k, v in _stats(inst.scalar).items()})
    metric = make_metric(recipe)
    s = chern_scalar(metric)
    theta = lee_form(metric)
    gaud, bal = gauduchon_residual(metric)
    return dict(
        synthetic=False,
        scalar={k: entry(v, "chern_ops") for k, v in _stats(s).items()},
        lee_form_sup=entry(float(np.abs(theta).max()), "chern_ops"),
        gauduchon_residual=entry(gaud, "chern_ops"),
        balanced_residual=entry(bal, "chern_ops"),
        min_eigenvalue=entry(metric.min_eigenvalue, "geometry_core"),
    )


def cmd_degree(cfg, out):
    recipe = _recipe(cfg)
    if recipe.kind == "hopf-chart":
        d = hopf_degree()
        return dict(gamma=entry(d["gamma"], "models"), volume=entry(d["volume"], "models"))
    inst = make_instance(recipe)
    result = dict(
        synthetic=inst.synthetic,
        gamma=entry(inst.gamma, "chern_ops"),
        volume=entry(inst.eta.volume(), "chern_ops", 1e-8, abs(inst.eta.volume() - 1) < 1e-8),
    )
    if inst.report is not None:
        r = inst.report
        result["gauduchon"] = dict(
            residual=entry(r.residual, "chern_ops", 1e-8, r.residual < 1e-8),
            balanced_residual=entry(r.balanced_residual, "chern_ops"),
            input_residual=entry(r.input_residual, "chern_ops"),
            iterations=r.iterations,
            positivity_margin=entry(r.positivity_margin, "chern_ops"),
        )
    path = out / cfg["output"].get("instance", "instance.json")
    save_instance(path, inst)
    result["instance_path"] = path.name
    return result


def _pick_method(cfg, inst):
    method = cfg["solver"]["method"]
    if method != "auto":
        return method
    tol = cfg["solver"]["degree_tol"]
    if abs(inst.gamma) <= tol:
        return "zero-degree"
    return "continuity" if inst.gamma < 0 else "small-data"


def cmd_solve(cfg, out):
    inst = _instance(cfg)
    scfg = solver_config(cfg)
    method = _pick_method(cfg, inst)
    problem = ChernYamabeProblem(inst, cfg["solver"].get("lambda"), scfg)
    if method == "zero-degree":
        sol = solve_zero_degree(problem)
    elif method == "continuity":
        sol = continuity_solve(problem)
    else:
        sol = small_data_solve(inst, config=scfg)
        if not sol.converged:
            return dict(method=method, synthetic=inst.synthetic, converged=False, reason=sol.reason,
                        residual=entry(sol.residual, "solver"))
    curv = sol.curvature(inst)
    spread = float(np.abs(curv - sol.lam).max())
    result = dict(
        method=method,
        synthetic=inst.synthetic,
        converged=True,
        gamma=entry(inst.gamma, "chern_ops"),
        lam=entry(sol.lam, "solver"),
        residual=entry(sol.residual, "solver", scfg.residual_tol, sol.residual < scfg.residual_tol),
        constraint_defect=entry(sol.constraint_defect, "solver", 1e-8, sol.constraint_defect < 1e-8),
        curvature_deviation=entry(spread, "solver", 1e-6, spread < 1e-6),
        potential_sup=entry(float(np.abs(sol.f).max()), "solver"),
        bound_violations=sol.bound_violations,
    )
    if sol.trace:
        cols = list(sol.trace[0].keys())
        write_trace(out / cfg["output"].get("trace", "solve_trace.csv"), sol.trace, cols)
        result["trace_columns"] = cols
    return result


def cmd_flow(cfg, out):
    inst = _instance(cfg)
    scfg = solver_config(cfg)
    problem = ChernYamabeProblem(inst, cfg["solver"].get("lambda"), scfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = run_flow(problem)
    rows = [dict(time=t, residual=r, functional=fv) for t, r, fv in zip(tr.times, tr.residuals, tr.functional)]
    write_trace(out / cfg["output"].get("trace", "flow_trace.csv"), rows, ["time", "residual", "functional"])
    return dict(
        synthetic=inst.synthetic,
        lam=entry(problem.lam, "solver"),
        reason=tr.reason,
        final_time=entry(tr.times[-1], "solver"),
        final_residual=entry(tr.residuals[-1], "solver", scfg.flow_tol, tr.reason == "converged"),
        potential_sup=entry(float(np.abs(tr.f).max()), "solver", scfg.blowup_cap, tr.reason != "blow-up"),
        trace_columns=["time", "residual", "functional"],
    )


def _families(fams):
    return [f.as_dict() for f in fams]


def cmd_bifurcate(cfg, out):
    b = cfg["bifurcate"]
    jmax = b["jmax"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lam = bif.as_fraction(b["lambda"])
        interval = [bif.as_fraction(x) for x in b["interval"]]
    fams = bif.kernel_families(lam, jmax)
    instants = bif.bifurcation_instants(interval, jmax)
    rows = [dict(lam=float(i["lam"]), dimension=i["dimension"], odd=int(i["odd"])) for i in instants]
    write_trace(out / cfg["output"].get("trace", "kernel_dimension.csv"), rows, ["lam", "dimension", "odd"])
    return dict(
        warnings=[str(w.message) for w in caught],
        lam=str(lam),
        jmax=jmax,
        truncation_complete=bif.truncation_complete((lam, lam), jmax),
        families=_families(fams),
        dimension=sum(f.dimension for f in fams),
        odd=sum(f.dimension for f in fams) % 2 == 1,
        interval=[str(x) for x in interval],
        interval_truncation_complete=bif.truncation_complete(interval, jmax),
        instants=[dict(lam=str(i["lam"]), dimension=i["dimension"], odd=i["odd"],
                       transversal=i["transversal"], bifurcation=i["bifurcation"],
                       families=_families(i["families"])) for i in instants],
    )


def cmd_verify(cfg, out):
    """Analytic example suite; every entry carries pass/fail."""
    v = cfg["verify"]
    chart = GridChart(2, v["resolution"])
    res = {}

    flat = HermitianMetricField.identity(chart)
    s = float(np.abs(chern_scalar(flat)).max())
    res["flat_scalar"] = entry(s, "chern_ops", 1e-12, s < 1e-12)

    hop = hopf_scalar_check(v["hopf_samples"], cfg["seed"])
    res["hopf_constant"] = entry(hop["max_deviation"], "models", 1e-8, hop["max_deviation"] < 1e-8, value_expected=2.0)
    hd = hopf_degree()
    oracle = 2.0 * math.sqrt(8 * math.pi ** 2 * math.log(2))
    err = abs(hd["gamma"] - oracle) / oracle
    res["hopf_degree"] = entry(hd["gamma"], "models", 1e-6, err < 1e-6, oracle=oracle)

    fams = bif.kernel_families(bif.QUARTER, 5)
    dim = sum(f.dimension for f in fams)
    res["kernel_dimension_quarter"] = entry(dim, "bifurcation", 0, dim == 33)

    worst = 0.0
    for k in range(v["metrics"]):
        h = random_perturbed_metric(chart, 0.5, seed=cfg["seed"] + k)
        f = chart.trig([1, 0, 1, 0], 0.5, 0.3) + chart.trig([0, 1, -1, 1], 0.3)
        a, b = chern_laplacian(h, f), chern_laplacian_via_lee(h, f)
        worst = max(worst, float(np.abs(a - b).max()))
    res["lee_identity"] = entry(worst, "chern_ops", 1e-6, worst < 1e-6)

    f0 = chart.trig([1, 0, 0, 0], 0.3) * chart.trig([0, 0, 0, 1], 1.0)
    lhs = chern_scalar(conformal_rescale(flat, f0))
    rhs = conformal_curvature(flat, f0)
    rel = float(np.abs(lhs - rhs).max() / np.abs(rhs).max())
    res["conformal_law"] = entry(rel, "chern_ops", 1e-8, rel < 1e-8)

    inst = make_instance(MetricRecipe("random-perturbed", {"amplitude": 0.5}, 2, v["resolution"], cfg["seed"]))
    res["torus_degree"] = entry(abs(inst.gamma), "chern_ops", 1e-8, abs(inst.gamma) < 1e-8)
    return res


HANDLERS = dict(
    curvature=cmd_curvature,
    degree=cmd_degree,
    solve=cmd_solve,
    flow=cmd_flow,
    bifurcate=cmd_bifurcate,
    verify=cmd_verify,
)


def _failures(obj, path=""):
    if isinstance(obj, dict):
        if obj.get("pass") is False:
            yield path
        for k, v in obj.items():
            yield from _failures(v, f"{path}/{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _failures(v, f"{path}/{i}")


def build_parser():
    p = argparse.ArgumentParser(prog="chern-yamabe", description="Chern-Yamabe computations on model manifolds.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=None)
    b = p.add_argument_group("bifurcate")
    b.add_argument("--lambda", dest="lam", default=None, help="rational, e.g. 1/4")
    b.add_argument("--interval", nargs=2, default=None, metavar=("A", "B"))
    b.add_argument("--jmax", type=int, default=None)
    return p


def run(argv=None, timestamp=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    report = dict(command=args.command, status="ok")
    try:
        cfg = load_config(args.config, args.command, args.seed)
        if args.lam is not None:
            cfg["bifurcate"]["lambda"] = args.lam
        if args.interval is not None:
            cfg["bifurcate"]["interval"] = list(args.interval)
        if args.jmax is not None:
            cfg["bifurcate"]["jmax"] = args.jmax
        report["config"] = cfg
        out.mkdir(parents=True, exist_ok=True)
        report["results"] = HANDLERS[args.command](cfg, out)
        failed = list(_failures(report["results"]))
        if failed:
            report.update(status="tolerance-failure", reason="numerics.tolerance", failed=failed)
            code = EXIT_TOLERANCE
        else:
            code = EXIT_OK
    except (ConfigError, RecipeError, FileNotFoundError) as exc:
        pointer = getattr(exc, "pointer", "/recipe" if isinstance(exc, RecipeError) else "/")
        report.update(status="config-error", reason="config.invalid", message=str(exc), pointer=pointer)
        code = EXIT_CONFIG
    except (ConvergenceError, ContinuationError, KernelPositivityError, PositivityError,
            ConsistencyError, DegreeMismatchError, SignError, ValueError) as exc:
        report.update(status="tolerance-failure", reason=f"numerics.{type(exc).__name__}", message=str(exc))
        code = EXIT_TOLERANCE
    try:
        out.mkdir(parents=True, exist_ok=True)
        name = report.get("config", {}).get("output", {}).get("report", f"{args.command}_report.json")
        write_report(out / name, report, timestamp)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
    line = f"{args.command}: {report['status']}"
    if code == EXIT_CONFIG:
        line += f" at {report['pointer']}: {report['message']}"
    print(line)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
