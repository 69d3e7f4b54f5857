"""Command line entry points: ``subdiff run|study|props``.

``run`` solves one configured problem, writes norms.tsv / snapshots /
report.json into the output directory, prints one line per certificate, and
exits 0 exactly when every enabled certificate passed.  ``study`` performs a
mesh-refinement study along the axis chosen in the [study] section and
reports observed convergence orders.  ``props`` sweeps randomized property
checks (discrete convexity, comparison with relaxation supersolutions,
Mittag-Leffler bounds) that need no PDE run at all.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.special import erfcx

from .config import ConfigError, RunConfig, parse_config, render_config
from .diagnostics import (
    boundedness_report,
    convexity_report,
    decay_report,
    hoelder_seminorm,
    l2_norm,
    norm_series,
    weakform_residual,
)
from .kernels import TimeGrid, check_discrete_convexity, default_grading
from .mittag_leffler import ml_tail_bound, ml_values
from .presets import build_preset, eigenmode_exact
from .relaxation import random_subsolution, solve_relaxation_l1
from .reporting import RunReport, jsonable, snapshot_path, write_norms_tsv, write_report, write_snapshot
from .solver import SolverOptions, StepFailure, run_trajectory

__all__ = ["main", "build_problem"]


def build_problem(cfg: RunConfig):
    """Materialize (ProblemSpec, SolverOptions) from a parsed configuration."""
    spec = build_preset(
        cfg.problem.preset,
        alpha=cfg.problem.alpha,
        dimension=cfg.problem.dimension,
        extents=cfg.problem.extents,
        resolution=cfg.problem.resolution,
        horizon=cfg.time.horizon,
        steps=cfg.time.steps,
        grading=cfg.time.grading,
    )
    options = SolverOptions(
        mode=cfg.solver.mode,
        tol=cfg.solver.tol,
        max_iter=cfg.solver.max_iter,
        history=cfg.solver.history,
        eps_compress=cfg.solver.eps_compress,
    )
    return spec, options


def _collect_certificates(traj, cc):
    """Run the enabled certificates; returns (dict, envelope-or-None)."""
    certs = {}
    envelope = None
    if cc.convexity:
        rep = convexity_report(traj)
        certs["convexity"] = {
            "passed": rep.passed,
            "min_margin": rep.min_margin,
            "min_strong_margin": rep.min_strong_margin,
        }
    if cc.boundedness:
        try:
            rep = boundedness_report(traj)
            certs["boundedness"] = {
                "passed": rep.passed,
                "bound": rep.bound,
                "max_sup": rep.max_sup,
                "arg_step": rep.arg_step,
            }
        except ValueError as exc:
            certs["boundedness"] = {"passed": None, "skipped": str(exc)}
    if cc.decay:
        try:
            rep = decay_report(traj, slack=cc.slack)
            envelope = rep.envelope
            certs["decay"] = {
                "passed": rep.passed,
                "mu": rep.mu,
                "slack": rep.slack,
                "min_margin": float(rep.margins.min()),
                "tail_exponent": rep.tail_exponent,
            }
        except ValueError as exc:
            certs["decay"] = {"passed": None, "skipped": str(exc)}
    if cc.weakform:
        rep = weakform_residual(traj, threshold=cc.weakform_threshold)
        certs["weakform"] = {
            "passed": rep.passed,
            "max_scaled_residual": rep.max_scaled_residual,
            "threshold": rep.threshold,
        }
    if cc.hoelder:
        est = hoelder_seminorm(traj, cc.hoelder_beta_time, cc.hoelder_beta_space)
        certs["hoelder"] = {
            "passed": None,
            "value": est.value,
            "beta_time": est.beta_time,
            "beta_space": est.beta_space,
            "note": "observable, no acceptance threshold",
        }
    return certs, envelope


def _print_certificates(certs) -> bool:
    all_passed = True
    for name, info in certs.items():
        if info.get("passed") is None:
            detail = info.get("skipped", "no threshold")
            print(f"certificate {name}: SKIPPED ({detail})")
            continue
        verdict = "PASS" if info["passed"] else "FAIL"
        detail = ", ".join(
            f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in info.items()
            if k != "passed" and not isinstance(v, str)
        )
        print(f"certificate {name}: {verdict} ({detail})")
        all_passed = all_passed and info["passed"]
    return all_passed


def _load_config(path: str) -> RunConfig:
    return parse_config(Path(path).read_text())


def _apply_overrides(cfg: RunConfig, args) -> None:
    if getattr(args, "out", None):
        cfg.output.dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.output.seed = args.seed
    if getattr(args, "history", None):
        cfg.solver.history = args.history
    if getattr(args, "levels", None):
        cfg.study.levels = args.levels


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args)
    spec, options = build_problem(cfg)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj = run_trajectory(spec, options)
    except StepFailure as exc:
        report = RunReport(
            label=spec.label,
            passed=False,
            certificates={},
            solver={"mode": options.mode, "history": options.history},
            timings={},
            config_text=render_config(cfg),
            failure={
                "step": exc.step,
                "t": exc.t,
                "residual": exc.residual,
                "iterations": exc.iterations,
                "message": str(exc),
                "last_iterate": exc.last_iterate,
            },
        )
        write_report(out / "report.json", report)
        print(f"run failed: {exc}", file=sys.stderr)
        return 2

    series = norm_series(traj)
    certs, envelope = _collect_certificates(traj, cfg.certificates)
    write_norms_tsv(out / "norms.tsv", series, envelope)
    for i, t_req in enumerate(cfg.output.snapshot_times):
        n = int(np.argmin(np.abs(traj.times - t_req)))
        write_snapshot(snapshot_path(out, i), spec.grid, float(traj.times[n]), traj.fields[n])
    passed = _print_certificates(certs)
    report = RunReport(
        label=spec.label,
        passed=passed,
        certificates=certs,
        solver={
            "mode": options.mode,
            "history": options.history,
            "max_iterations": int(traj.iterations[1:].max()),
            "mean_iterations": float(traj.iterations[1:].mean()),
            "max_residual": float(traj.residuals[1:].max()),
            "seed": cfg.output.seed,
        },
        timings=traj.timings,
        config_text=render_config(cfg),
    )
    write_report(out / "report.json", report)
    print(f"artifacts in {out}")
    return 0 if passed else 1


def _restrict(values: np.ndarray, shape, stride: int) -> np.ndarray:
    field = values.reshape(shape)
    sl = tuple(slice(None, None, stride) for _ in shape)
    return field[sl].ravel()


def cmd_study(args) -> int:
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args)
    levels = cfg.study.levels
    if levels < 2:
        print("a study needs at least 2 levels", file=sys.stderr)
        return 2
    axis = cfg.study.axis
    base_spec, options = build_problem(cfg)
    base_res = base_spec.grid.shape[0]
    base_steps = base_spec.time_grid.steps
    exact = None
    if cfg.problem.preset == "eigenmode":
        exact = eigenmode_exact(base_spec)

    def level_spec(l: int):
        if axis == "space":
            res = (base_res - 1) * 2**l + 1
            return build_preset(
                cfg.problem.preset,
                alpha=cfg.problem.alpha,
                dimension=cfg.problem.dimension,
                extents=cfg.problem.extents,
                resolution=res,
                horizon=cfg.time.horizon,
                steps=base_steps,
                grading=cfg.time.grading,
            ), res
        steps = base_steps * 2**l
        return build_preset(
            cfg.problem.preset,
            alpha=cfg.problem.alpha,
            dimension=cfg.problem.dimension,
            extents=cfg.problem.extents,
            resolution=base_res,
            horizon=cfg.time.horizon,
            steps=steps,
            grading=cfg.time.grading,
        ), steps

    try:
        finals = []
        sizes = []
        specs = []
        for l in range(levels):
            spec_l, size = level_spec(l)
            traj = run_trajectory(spec_l, options)
            finals.append(traj.fields[-1])
            sizes.append(size)
            specs.append(spec_l)
        if exact is not None:
            refs = [eigenmode_exact(s)(s.time_grid.horizon) for s in specs]
        else:
            ref_spec, _ = level_spec(levels)
            ref_traj = run_trajectory(ref_spec, options)
            refs = []
            for l, s in enumerate(specs):
                if axis == "space":
                    refs.append(_restrict(ref_traj.fields[-1], ref_spec.grid.shape, 2 ** (levels - l)))
                else:
                    refs.append(ref_traj.fields[-1])
    except StepFailure as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return 2

    errors = [
        l2_norm(s.grid, u - r) / max(l2_norm(s.grid, r), 1e-300)
        for s, u, r in zip(specs, finals, refs)
    ]
    orders = [float("nan")] + [
        float(np.log2(errors[l - 1] / errors[l])) if errors[l] > 0 else float("nan")
        for l in range(1, levels)
    ]
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    label = "resolution" if axis == "space" else "steps"
    with open(out / "study.tsv", "w") as fh:
        fh.write(f"level\t{label}\trel_l2_error\torder\n")
        for l in range(levels):
            fh.write("%d\t%d\t%.17g\t%.17g\n" % (l, sizes[l], errors[l], orders[l]))
    reference = "exact eigenmode solution" if exact is not None else "one-level-finer run"
    print(f"refinement study along {axis} (reference: {reference})")
    print(f"{'level':>5} {label:>10} {'rel_l2_error':>14} {'order':>7}")
    for l in range(levels):
        print(f"{l:>5} {sizes[l]:>10} {errors[l]:>14.6e} {orders[l]:>7.3f}")
    print(f"artifacts in {out}")
    return 0


def _props_convexity(rng, count: int):
    worst = np.inf
    violations = 0
    total = 0
    for alpha in (0.3, 0.5, 0.8):
        for kind in ("uniform", "graded"):
            if kind == "uniform":
                grid = TimeGrid.uniform(2.0, 48)
            else:
                grid = TimeGrid.graded(2.0, 48, default_grading(alpha))
            for _ in range(count):
                scale = 10.0 ** rng.uniform(-2.0, 2.0)
                hist = scale * np.cumsum(rng.standard_normal(grid.steps + 1))
                rep = check_discrete_convexity(alpha, grid, hist)
                total += 1
                worst = min(worst, float(np.min(rep.margins + rep.roundoff)))
                if not rep.passed:
                    violations += 1
    return {
        "passed": violations == 0,
        "histories": total,
        "violations": violations,
        "worst_allowed_margin": worst,
    }


def _props_comparison(rng, count: int):
    eps = np.finfo(float).eps
    violations = 0
    total = 0
    worst = np.inf
    for alpha in (0.3, 0.5, 0.8):
        for kind in ("uniform", "graded"):
            if kind == "uniform":
                grid = TimeGrid.uniform(3.0, 48)
            else:
                grid = TimeGrid.graded(3.0, 48, default_grading(alpha))
            for _ in range(count):
                mu = 10.0 ** rng.uniform(-1.0, 1.5)
                w0 = 10.0 ** rng.uniform(-1.0, 1.0)
                W = random_subsolution(alpha, mu, grid, rng, w0=w0)
                V = solve_relaxation_l1(alpha, mu, w0, grid)
                tol = 64.0 * (grid.steps + 4.0) * eps * max(float(np.max(np.abs(V))), float(np.max(np.abs(W))))
                gap = float(np.min(V - W))
                total += 1
                worst = min(worst, gap + tol)
                if gap < -tol:
                    violations += 1
    return {"passed": violations == 0, "subsolutions": total, "violations": violations, "worst_gap": worst}


def _props_mittag_leffler():
    xs = np.linspace(0.0, 30.0, 1000)
    half = ml_values(0.5, -xs)
    err_half = float(np.max(np.abs(half - erfcx(xs))))
    ys = np.linspace(-50.0, 0.0, 400)
    err_exp = float(np.max(np.abs(ml_values(1.0, ys) - np.exp(ys))))
    grid = np.concatenate(([0.0], np.geomspace(1e-8, 1e4, 600)))
    tail = ml_tail_bound(0.5, grid)
    return {
        "passed": bool(err_half <= 1e-10 and err_exp <= 1e-12 and tail.sup_weighted <= 1.2 and tail.decreasing and tail.convex),
        "max_err_vs_erfcx": err_half,
        "max_err_vs_exp": err_exp,
        "sup_weighted_tail": tail.sup_weighted,
        "decreasing": tail.decreasing,
        "convex": tail.convex,
    }


def cmd_props(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    per_combo = max(1, args.count // 6)
    results = {
        "convexity": _props_convexity(rng, per_combo),
        "comparison": _props_comparison(rng, per_combo),
        "mittag_leffler": _props_mittag_leffler(),
    }
    all_passed = True
    for name, info in results.items():
        verdict = "PASS" if info["passed"] else "FAIL"
        detail = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items() if k != "passed")
        print(f"property {name}: {verdict} ({detail})")
        all_passed = all_passed and info["passed"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "props.json").write_text(json.dumps(jsonable(results), indent=2, sort_keys=True) + "\n")
        print(f"artifacts in {out}")
    return 0 if all_passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="subdiff",
        description="L1 subdiffusion solver with decay, convexity, and boundedness certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one configured problem and certify it")
    p_run.add_argument("config", help="path to a run configuration file")
    p_run.add_argument("--out", help="output directory (overrides [output] dir)")
    p_run.add_argument("--seed", type=int, help="seed recorded in the report")
    p_run.add_argument("--history", choices=("direct", "compressed"), help="memory accumulation mode")
    p_run.set_defaults(func=cmd_run)

    p_study = sub.add_parser("study", help="mesh refinement study along the [study] axis")
    p_study.add_argument("config", help="path to a run configuration file")
    p_study.add_argument("--levels", type=int, help="number of refinement levels (overrides [study] levels)")
    p_study.add_argument("--out", help="output directory")
    p_study.add_argument("--seed", type=int, help="unused by the deterministic study; accepted for symmetry")
    p_study.set_defaults(func=cmd_study)

    p_props = sub.add_parser("props", help="randomized property sweeps (no PDE run)")
    p_props.add_argument("--count", type=int, default=1002, help="total histories per property family")
    p_props.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p_props.add_argument("--out", help="directory for props.json")
    p_props.set_defaults(func=cmd_props)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
