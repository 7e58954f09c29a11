"""Command-line interface.

Subcommands
-----------
solve        one continuation run on the deblurring problem
pareto       reference trade-off curve on a lambda grid
demo-deblur  the full study (curve, four schedules, comparison)
check        re-run the inequality monitors on saved traces or curves

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 monitor violation.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .errors import ConfigurationError, FPCError, MonitorViolation
from .experiment import ExperimentConfig, build_instance, run_demo_deblur
from .pareto import lcurve_corner, log_grid, reference_curve, slope_check
from .schedules import parse_schedule
from .solver import SolverConfig, rate_bound_check, solve_continuation, solve_fixed

logger = logging.getLogger("fpcontinuation")

EPS_SLACK = 1e-12
RATE_SLACK = 1e-9

# flag name -> ExperimentConfig field
_OVERRIDES = {
    "size": "image_size",
    "seed": "seed",
    "alpha_frac": "alpha_frac",
    "noise": "noise_sigma",
    "levels": "wavelet_levels",
    "out": "out",
}


def _config(args, **extra):
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
        base = base.get("config", base)
    for flag, name in _OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[name] = v
    base.update({k: v for k, v in extra.items() if v is not None})
    return ExperimentConfig.from_dict(base)


def parse_grid(text):
    """``lo:hi:num`` (log-spaced) or an explicit comma-separated list."""
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            grid = log_grid(float(lo), float(hi), int(num))
        else:
            grid = sorted((float(v) for v in text.split(",") if v.strip()), reverse=True)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse grid {text!r}: {exc}") from exc
    if len(grid) < 1 or any(not v > 0 for v in grid):
        raise ConfigurationError("grid values must be positive")
    return grid


def _emit(doc):
    print(json.dumps(io.to_jsonable(doc), indent=2, sort_keys=True))


# ---------------------------------------------------------------- solve

def cmd_solve(args):
    cfg = _config(args, iters=args.iters, tol=args.tol, target_lambda=args.lam)
    sched = parse_schedule(args.schedule, default_target=cfg.target_lambda)
    inst = build_instance(cfg)
    scfg = SolverConfig(alpha=inst.alpha, max_iter=cfg.iters, step_tol=cfg.tol,
                        record_every=cfg.record_every, monitor_rate=args.monitor,
                        monitor_eps=args.monitor)
    p = inst.problem(sched.target)
    r = solve_continuation(p, sched, inst.u0, scfg)

    extra = {"experiment": cfg.as_dict()}
    rate = None
    if r.rate_monitor:
        ref = solve_fixed(p, r.u_hat, SolverConfig(alpha=inst.alpha, max_iter=args.ref_iters,
                                                   step_tol=1e-12, record_every=args.ref_iters))
        M = r.sup_g_deviation(ref.u_hat, p.g)
        d0 = inst.u0 - ref.u_hat
        extra["rate_reference"] = {"F_ref": p.value(ref.u_hat), "dist0_sq": float(d0 @ d0),
                                   "M": M, "converged": ref.converged}
        rate = rate_bound_check(p, r.trace, inst.u0, ref.u_hat, inst.alpha,
                                sched.summability(), M, slack=RATE_SLACK)

    os.makedirs(cfg.out, exist_ok=True)
    io.write_trace_csv(r.trace, os.path.join(cfg.out, "trace.csv"))
    io.write_trace_json(r, os.path.join(cfg.out, "trace.json"), extra=extra)
    io.write_pgm(inst.image(r.u_hat), os.path.join(cfg.out, "restored.pgm"))
    summary = {
        "schedule": sched.as_dict(),
        "lambda_bar": sched.summability(),
        "iterations": r.iterations,
        "converged": r.converged,
        "final_f": p.f.value(r.u_hat),
        "final_g": p.g.value(r.u_hat),
        "final_F_lambda": p.value(r.u_hat),
        "eps_worst_excess": r.eps_worst_excess,
        "rate": rate.as_dict() if rate else None,
    }
    io.write_json(dict(summary, config=cfg.as_dict()), os.path.join(cfg.out, "summary.json"))
    _emit(summary)
    if args.monitor:
        if r.eps_worst_excess > EPS_SLACK:
            raise MonitorViolation(f"epsilon certificate exceeded by {r.eps_worst_excess:.3g}")
        if rate is not None and not rate.passed:
            raise MonitorViolation(f"rate bound violated, worst margin {rate.worst_margin:.3g}")
    return 0


# ---------------------------------------------------------------- pareto

def cmd_pareto(args):
    cfg = _config(args, grid_iters=args.iters, grid_tol=args.tol)
    grid = parse_grid(args.grid) if args.grid else log_grid(cfg.grid_min, cfg.grid_max,
                                                             cfg.grid_points)
    inst = build_instance(cfg)
    scfg = SolverConfig(alpha=inst.alpha, max_iter=cfg.grid_iters, step_tol=cfg.grid_tol,
                        record_every=cfg.grid_iters)
    # parallel solves must not depend on each other, so they start cold
    warm = args.workers <= 1
    curve = reference_curve(inst.problem(grid[0]), grid, scfg, warm_start=warm, u0=inst.u0,
                            workers=args.workers)
    os.makedirs(cfg.out, exist_ok=True)
    io.write_curve_csv(curve, os.path.join(cfg.out, "curve.csv"))
    doc = {
        "points": len(curve),
        "monotone_violation": curve.monotone_violation(),
        "convexity_violation": curve.convexity_violation(),
        "slopes": slope_check(curve).as_dict() if len(curve) >= 3 else None,
        "corner_lambda": lcurve_corner(curve),
        "warm_start": warm,
    }
    io.write_json(dict(doc, config=cfg.as_dict()), os.path.join(cfg.out, "pareto.json"))
    _emit(doc)
    return 0


# ---------------------------------------------------------------- demo

def cmd_demo(args):
    cfg = _config(args, iters=args.iters, tol=args.tol, grid_iters=args.grid_iters,
                  target_lambda=args.lam)
    if args.grid:
        grid = parse_grid(args.grid)
        cfg = ExperimentConfig.from_dict(dict(cfg.as_dict(), grid_min=min(grid),
                                              grid_max=max(grid), grid_points=len(grid)))
    summary = run_demo_deblur(cfg)
    _emit({k: v for k, v in summary.items() if k != "config"})
    return 0


# ---------------------------------------------------------------- check

def check_trace(path):
    """Re-evaluate the stored monitors of a trace JSON; returns a list of findings."""
    doc, t = io.read_trace_json(path)
    issues = []
    lam = float(doc["lambda"])
    if len(t):
        dev = np.abs(t.F_lambda - (t.f + lam * t.g))
        tol = 1e-9 * np.maximum(1.0, np.abs(t.F_lambda))
        if np.any(dev > tol):
            issues.append(f"F_lambda != f + lambda g at {int((dev > tol).sum())} points")
        if np.any(t.lambda_n <= 0):
            issues.append("non-positive lambda_n")
    recorded = ~np.isnan(t.gap_n)
    if recorded.any():
        excess = t.gap_n[recorded] - t.eps_n[recorded]
        if excess.max() > EPS_SLACK:
            k = int(t.n[recorded][np.argmax(excess)])
            issues.append(f"epsilon certificate exceeded by {excess.max():.3g} at n={k}")
    ref = doc.get("rate_reference")
    avg = ~np.isnan(t.F_avg)
    if ref and avg.any():
        ns = t.n[avg]
        lhs = t.F_avg[avg] - float(ref["F_ref"])
        bound = (float(ref["dist0_sq"]) + float(ref["M"]) * doc["lambda_bar"]) / (
            2.0 * float(doc["alpha"]) * (ns + 1.0))
        bad = lhs > bound + RATE_SLACK
        if bad.any():
            issues.append(f"rate bound violated at {int(bad.sum())} recorded points")
    sched = doc.get("schedule")
    if sched is not None and len(t):
        want = sched.eval_many(t.n.astype(int))
        if np.any(np.abs(want - t.lambda_n) > 1e-12 * np.abs(want)):
            issues.append("lambda_n does not match the stored schedule")
    return issues


def check_curve(path):
    curve = io.read_curve_csv(path)
    issues = []
    if not curve.is_monotone(1e-10):
        issues.append(f"curve increases by {curve.monotone_violation():.3g}")
    if not curve.is_convex(1e-8):
        issues.append(f"curve slopes decrease by {curve.convexity_violation():.3g}")
    return issues


def cmd_check(args):
    failed = False
    for path in args.paths:
        if not os.path.exists(path):
            raise ConfigurationError(f"no such file: {path}")
        issues = check_curve(path) if path.endswith(".csv") else check_trace(path)
        status = "FAIL" if issues else "ok"
        print(f"{status}  {path}")
        for msg in issues:
            print(f"      {msg}")
        failed |= bool(issues)
    if failed:
        raise MonitorViolation("one or more checks failed")
    return 0


# ---------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields (flags override)")
    p.add_argument("--size", type=int, help="image side length")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha-frac", type=float, help="step as a fraction of 1/L")
    p.add_argument("--noise", type=float, help="noise standard deviation")
    p.add_argument("--levels", type=int, help="wavelet levels")
    p.add_argument("--iters", type=int)
    p.add_argument("--tol", type=float, help="step-norm stopping tolerance")
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="fpc", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one continuation run on the deblurring problem")
    _common(p)
    p.add_argument("--schedule", default="geometric-offset",
                   help="kind:key=value,... e.g. power:lam=0.03,beta=9,theta=1.01")
    p.add_argument("--lambda", dest="lam", type=float, help="target lambda if the schedule omits it")
    p.add_argument("--monitor", action="store_true", help="record the rate and epsilon monitors")
    p.add_argument("--ref-iters", type=int, default=100_000,
                   help="iterations for the rate-bound reference solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pareto", help="reference trade-off curve")
    _common(p)
    p.add_argument("--grid", help="lo:hi:num (log-spaced) or a comma-separated list")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("demo-deblur", help="full deblurring study")
    _common(p)
    p.add_argument("--grid", help="lo:hi:num for the reference curve")
    p.add_argument("--grid-iters", type=int)
    p.add_argument("--lambda", dest="lam", type=float,
                   help="target lambda (default: L-curve corner)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("check", help="verify saved trace JSON or curve CSV files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FPCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
