"""Command-line entry point.

Subcommands: constants | simulate | bounds | verify | reproduce | oracle.
Exit codes: 0 success / all checks pass, 1 check failure or divergence,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import backends
from .bounds import (BoundsError, EnvelopeSeries, InapplicableError,
                     TheoremConstants, closed_form_envelopes, constants_from_dict,
                     derive_constants, one_step_bounds, propagated_envelopes,
                     theorem32_ledger)
from .constants import problem_constants
from .engine import (DivergenceError, ErrorSeries, RunConfig, exact_error,
                     exact_error_quadratic, simulate)
from .problems import ProblemError, load_problem, solve_optimum
from .svgchart import Chart
from .verify import (VerifyUsageError, check_asymptotics, check_bracketing,
                     check_recursion, report)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
ANCHORED_FLAKY_BUDGET = 0.01


def _fmt(v: float) -> str:
    """Shortest round-trip decimal; +inf serialized as empty field."""
    if v is None or (isinstance(v, float) and math.isinf(v)):
        return ""
    return repr(float(v))


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ProblemError(f"bad vector {text!r}: {exc}") from exc


def write_series_csv(path, series: ErrorSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "r_hat", "std_err"])
        for k in range(len(series)):
            w.writerow([k, _fmt(series.r_hat[k]), _fmt(series.std_err[k])])
    meta = dict(series.meta)
    meta["exact"] = series.exact
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_series_csv(path) -> ErrorSeries:
    r_hat, std_err = [], []
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        if rows.fieldnames is None or "r_hat" not in rows.fieldnames:
            raise VerifyUsageError(f"{path}: expected header with r_hat column")
        for row in rows:
            r_hat.append(float(row["r_hat"]))
            std_err.append(float(row.get("std_err") or 0.0))
    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return ErrorSeries(r_hat=np.array(r_hat), std_err=np.array(std_err),
                       exact=bool(meta.get("exact", False)), meta=meta)


BOUND_COLUMNS = ["lower_prop", "upper_prop", "lower_cf", "upper_cf",
                 "lower_anch", "upper_anch"]


def write_bounds_csv(path, n: int, envs: dict[str, EnvelopeSeries]) -> None:
    """envs maps 'prop' | 'cf' | 'anch' to a series of length n."""
    cols = BOUND_COLUMNS[:4] + (BOUND_COLUMNS[4:] if "anch" in envs else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + cols)
        for k in range(n):
            row = [k]
            for col in cols:
                tag = col.split("_")[1]
                env = envs.get(tag)
                if env is None:
                    row.append("")
                else:
                    arr = env.lower if col.startswith("lower") else env.upper
                    row.append(_fmt(arr[k]))
            w.writerow(row)


def read_bounds_csv(path) -> dict[str, EnvelopeSeries]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise VerifyUsageError(f"{path}: empty bounds file")
    envs = {}
    for tag, mode in (("prop", "recursive-propagated"), ("cf", "closed-form"),
                      ("anch", "one-step-anchored")):
        lo_col, hi_col = f"lower_{tag}", f"upper_{tag}"
        if lo_col not in rows[0]:
            continue
        if all((row[lo_col] or "") == "" for row in rows):
            continue
        lower = np.array([float(row[lo_col]) if row[lo_col] else 0.0 for row in rows])
        upper = np.array([float(row[hi_col]) if row[hi_col] else math.inf for row in rows])
        envs[tag] = EnvelopeSeries(lower=lower, upper=upper, mode=mode)
    if not envs:
        raise VerifyUsageError(f"{path}: no envelope columns found")
    return envs


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(args) -> int:
    pc = problem_constants(load_problem(args.spec))
    json.dump(pc.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _run_config(args, problem) -> RunConfig:
    theta0 = (_parse_vector(args.theta0) if args.theta0
              else np.zeros(problem.d))
    if theta0.size != problem.d:
        raise ProblemError(f"theta0 has dimension {theta0.size}, expected {problem.d}")
    return RunConfig(eta=args.eta, iters=args.iters, trials=args.trials,
                     theta0=theta0, seed=args.seed)


def cmd_simulate(args) -> int:
    problem = load_problem(args.spec)
    config = _run_config(args, problem)
    snaps = sorted({int(t) for t in args.dump_theta.split(",")}) if args.dump_theta else []
    result = simulate(problem, config, threads=args.threads, snapshot_iters=snaps)
    write_series_csv(args.out, result.series)
    if snaps:
        snap_path = str(args.out) + ".theta.csv"
        with open(snap_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "k"] + [f"theta_{i + 1}" for i in range(problem.d)])
            for k in snaps:
                Theta = result.snapshots[k]
                for m in range(Theta.shape[1]):
                    w.writerow([m, k] + [_fmt(Theta[i, m]) for i in range(problem.d)])
    if result.series.meta.get("single_trial_warning"):
        print("warning: single trial, std_err column is zero", file=sys.stderr)
    return EXIT_OK


def _theorem_constants(problem, eta: float, r0) -> TheoremConstants:
    c = derive_constants(problem_constants(problem), eta)
    if r0 is not None and c.lambda_min is not None and c.flags.strongly_convex:
        c = theorem32_ledger(c, r0)
    return c


def cmd_bounds(args) -> int:
    problem = load_problem(args.spec)
    c = derive_constants(problem_constants(problem), args.eta)
    envs: dict[str, EnvelopeSeries] = {}
    n = args.iters + 1
    if args.mode == "prop":
        if not c.flags.one_step:
            raise BoundsError(
                f"inadmissible step size: eta = {args.eta} violates "
                f"eta < 1/lambda_max_0 = {1.0 / c.lambda_max_0}")
        envs["prop"] = propagated_envelopes(c, args.r0, args.iters)
    elif args.mode == "cf":
        if c.lambda_min is None or not c.flags.strongly_convex:
            raise BoundsError(
                "inadmissible: closed-form envelopes need strong convexity and "
                "eta < lambda_min / (Lambda^2 + lambda_max_0^2)")
        c = theorem32_ledger(c, args.r0)
        envs["cf"] = closed_form_envelopes(c, args.iters)
    elif args.mode == "anchored":
        if not args.anchored:
            raise VerifyUsageError("--mode anchored requires --anchored <series.csv>")
        series = read_series_csv(args.anchored)
        if not c.flags.one_step:
            raise BoundsError(
                f"inadmissible step size: eta = {args.eta} violates "
                f"eta < 1/lambda_max_0 = {1.0 / c.lambda_max_0}")
        envs["anch"] = one_step_bounds(series.r_hat, c)
        n = len(series)
    if c.lambda_min is not None and c.flags.strongly_convex and c.K0 is None:
        c = theorem32_ledger(c, args.r0)
    write_bounds_csv(args.out, n, envs)
    with open(str(args.out) + ".constants.json", "w") as fh:
        json.dump(c.to_dict(), fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    series = read_series_csv(args.series)
    envs = read_bounds_csv(args.bounds)
    with open(args.constants) as fh:
        c = constants_from_dict(json.load(fh))
    checks = []
    budget = 0.0 if series.exact else ANCHORED_FLAKY_BUDGET
    for tag, env in envs.items():
        if len(env) != len(series):
            raise VerifyUsageError(
                f"length mismatch: series {len(series)} vs {tag} bounds {len(env)}")
        checks.append(check_bracketing(series, env, se_mult=args.se_mult,
                                       max_violation_fraction=budget,
                                       name=f"bracketing-{tag}"))
    checks.append(check_asymptotics(series, c, tail_fraction=args.tail,
                                    se_mult=args.se_mult))
    if series.exact:
        checks.append(check_recursion(series, c))
    rep = report(checks)
    sys.stdout.write(rep.to_json())
    return rep.exit_code


def cmd_oracle(args) -> int:
    problem = load_problem(args.spec)
    theta0 = (_parse_vector(args.theta0) if args.theta0 else np.zeros(problem.d))
    if args.method == "enumerate":
        series = exact_error(problem, args.eta, theta0, args.kmax)
    else:
        series = exact_error_quadratic(problem, args.eta, theta0, args.kmax)
    write_series_csv(args.out, series)
    return EXIT_OK


# ---------------------------------------------------------------------------
# built-in experiment recipes

LINREG_RECIPE = {
    "J": 30, "d": 2, "theta_star": [-1.27, -0.49], "noise_std": 0.1,
    "eta": 0.01, "iters": 50000, "trials": 1000,
    "snapshots": [25, 50, 100, 250, 1000, 5000, 10000, 50000],
}
QUARTIC_RECIPE = {
    "eta": 1.0 / 216.0, "eta_override": 0.069, "iters": 500, "trials": 500,
    "theta0s": [2.0, -2.0], "local_min": 0.5,
}


def _verify_sim(series, c, envs, tail) -> list:
    checks = []
    for tag, env in envs.items():
        checks.append(check_bracketing(series, env,
                                       max_violation_fraction=ANCHORED_FLAKY_BUDGET,
                                       name=f"bracketing-{tag}"))
    try:
        checks.append(check_asymptotics(series, c, tail_fraction=tail))
    except VerifyUsageError:
        pass
    return checks


def cmd_reproduce(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "linreg":
        return _reproduce_linreg(args, out_dir)
    if args.name == "quartic":
        return _reproduce_quartic(args, out_dir)
    raise ProblemError(f"unknown recipe {args.name!r} (expected linreg or quartic)")


def _reproduce_linreg(args, out_dir: Path) -> int:
    rc = LINREG_RECIPE
    problem = load_problem_dict({
        "type": "synthetic_linreg", "J": rc["J"], "d": rc["d"],
        "theta_star": rc["theta_star"], "noise_std": rc["noise_std"],
        "seed": args.seed,
    })
    theta0 = np.zeros(rc["d"])
    config = RunConfig(eta=rc["eta"], iters=args.iters or rc["iters"],
                       trials=args.trials or rc["trials"], theta0=theta0,
                       seed=args.seed)
    snaps = rc["snapshots"] if args.svg else []
    snaps = [s for s in snaps if s <= config.iters]
    result = simulate(problem, config, threads=args.threads,
                      snapshot_iters=snaps)
    series = result.series
    write_series_csv(out_dir / "linreg_error.csv", series)

    theta_dag = solve_optimum(problem)
    r0 = float(np.sum((theta0 - theta_dag) ** 2))
    c = _theorem_constants(problem, config.eta, r0)
    envs = {"anch": one_step_bounds(series.r_hat, c)}
    if c.K0 is not None:
        envs["cf"] = closed_form_envelopes(c, config.iters)
    write_bounds_csv(out_dir / "linreg_bounds.csv", len(series), envs)
    with open(out_dir / "linreg_bounds.csv.constants.json", "w") as fh:
        json.dump(c.to_dict(), fh, indent=2)
        fh.write("\n")

    checks = _verify_sim(series, c, envs, args.tail)
    rep = report(checks)
    (out_dir / "linreg_report.json").write_text(rep.to_json())
    if args.svg:
        chart = Chart("SGD error vs. certified bounds (regression)",
                      y_label="mean squared error", log_y=True)
        ks = series.k
        chart.add_line("estimated error", ks, series.r_hat)
        chart.add_line("one-step lower", ks, envs["anch"].lower, dashed=True)
        chart.add_line("one-step upper", ks, envs["anch"].upper, dashed=True)
        chart.add_hline("asymptotic floor z0^2", c.z0 ** 2)
        chart.write(out_dir / "linreg_error.svg")
        if result.snapshots:
            sc = Chart("Iterate clouds at selected iterations",
                       x_label="theta_1", y_label="theta_2")
            for k, Theta in sorted(result.snapshots.items()):
                sc.add_points(f"k={k}", Theta[0], Theta[1])
            sc.write(out_dir / "linreg_clouds.svg")
    print(rep.to_json(), end="")
    return rep.exit_code


def _reproduce_quartic(args, out_dir: Path) -> int:
    rc = QUARTIC_RECIPE
    problem = load_problem_dict({"type": "quartic"})
    eta = args.eta or rc["eta"]
    checks = []
    extras = {}
    for theta0 in rc["theta0s"]:
        tag = "m2" if theta0 < 0 else "p2"
        config = RunConfig(eta=eta, iters=args.iters or rc["iters"],
                           trials=args.trials or rc["trials"],
                           theta0=np.array([theta0]), seed=args.seed)
        result = simulate(problem, config, threads=args.threads)
        series = result.series
        write_series_csv(out_dir / f"quartic_{tag}_error.csv", series)
        c = derive_constants(problem_constants(problem), eta)
        envs = {}
        if c.flags.one_step:
            r0 = float((theta0 + 1.0) ** 2)
            envs["prop"] = propagated_envelopes(c, r0, config.iters)
            envs["anch"] = one_step_bounds(series.r_hat, c)
        write_bounds_csv(out_dir / f"quartic_{tag}_bounds.csv", len(series), envs)
        with open(out_dir / f"quartic_{tag}_bounds.csv.constants.json", "w") as fh:
            json.dump(c.to_dict(), fh, indent=2)
            fh.write("\n")
        for check in _verify_sim(series, c, envs, args.tail):
            check.name = f"{tag}-{check.name}"
            checks.append(check)
        final = result.final_theta[0]
        extras[f"theta0_{tag}"] = {
            "median_final_theta": float(np.median(final)),
            "fraction_near_local_min": float(
                np.mean(np.abs(final - rc["local_min"]) <= 0.1)),
            "fraction_near_global_min": float(
                np.mean(np.abs(final + 1.0) <= 0.1)),
        }
        if args.svg:
            chart = Chart(f"SGD error, quartic objective, theta0 = {theta0}",
                          y_label="mean squared error", log_y=True)
            chart.add_line("estimated error", series.k, series.r_hat)
            if "prop" in envs:
                chart.add_line("propagated lower", series.k, envs["prop"].lower,
                               dashed=True)
            chart.add_hline("asymptotic floor z0^2", c.z0 ** 2)
            chart.write(out_dir / f"quartic_{tag}_error.svg")
    rep = report(checks)
    payload = json.loads(rep.to_json())
    payload["extras"] = extras
    text = json.dumps(payload, indent=2) + "\n"
    (out_dir / "quartic_report.json").write_text(text)
    print(text, end="")
    return rep.exit_code


def load_problem_dict(spec: dict):
    from .problems import problem_from_spec
    return problem_from_spec(spec)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="noiseball",
        description="Constant step-size SGD error bounds: simulate, bound, verify.")
    p.add_argument("--backend", choices=["pure", "compiled"],
                   help="force a simulation backend (default: compiled if built)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--seed", type=int, default=20240501)
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads (scheduling only, never results)")
        if out:
            sp.add_argument("--out", required=True)

    sp = sub.add_parser("constants", help="print problem constants as JSON")
    sp.add_argument("spec")
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("simulate", help="Monte-Carlo SGD error series to CSV")
    sp.add_argument("spec")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--iters", type=int, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--theta0", help="comma-separated initial point (default 0)")
    sp.add_argument("--dump-theta", help="comma-separated iterations to snapshot")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bounds", help="bound envelopes to CSV")
    sp.add_argument("spec")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--r0", type=float, default=0.0,
                    help="initial squared error R_0")
    sp.add_argument("--iters", type=int, default=500)
    sp.add_argument("--mode", choices=["prop", "cf", "anchored"], default="prop")
    sp.add_argument("--anchored", help="series CSV for one-step anchoring")
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="check a series against bounds")
    sp.add_argument("--series", required=True)
    sp.add_argument("--bounds", required=True)
    sp.add_argument("--constants", required=True)
    sp.add_argument("--se-mult", type=float, default=4.0)
    sp.add_argument("--tail", type=float, default=0.2)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("oracle", help="exact error series (no sampling)")
    sp.add_argument("spec")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--theta0")
    sp.add_argument("--kmax", type=int, required=True)
    sp.add_argument("--method", choices=["enumerate", "quadratic"],
                    default="enumerate")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("reproduce", help="run a built-in experiment recipe")
    sp.add_argument("name", choices=["linreg", "quartic"])
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--svg", action="store_true")
    sp.add_argument("--eta", type=float, help="step-size override")
    sp.add_argument("--iters", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--tail", type=float, default=0.2)
    sp.add_argument("--seed", type=int, default=20240501)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if getattr(args, "backend", None):
        import os
        os.environ["NOISEBALL_BACKEND"] = args.backend
        # late import paths pick this up; already-imported backends need a reload
        import importlib
        importlib.reload(backends)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ProblemError, BoundsError, InapplicableError, VerifyUsageError,
            OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
