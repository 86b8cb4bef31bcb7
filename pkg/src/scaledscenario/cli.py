"""Command-line entry point: ``scaledscenario <command> ...``.

Exit codes: 0 on success, 2 on a configuration error, 3 when a solve does
not reach optimality (outside ``experiment``).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import distributions as dists
from . import experiment as exp
from .problem import ProblemError, assemble, pole_assignment, problem_from_json
from .samplesize import classical_size, scaled_epsilon, scaled_size
from .solver import SolverOptions, solve
from .validate import estimate_violation, exact_tail_ratio, tail_ratio

EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load_json(ref: str) -> dict:
    """Parse a JSON file path or an inline JSON document."""
    try:
        if ref.lstrip().startswith("{"):
            return json.loads(ref)
        with open(ref) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {ref!r}: {exc}") from None


def _load_problem(ref: str):
    return problem_from_json(_load_json(ref))


def _solver_options(args) -> SolverOptions:
    return SolverOptions(args.tol_feas, args.tol_gap, args.max_iters,
                         getattr(args, "time_limit", None))


def _add_solver_flags(p):
    p.add_argument("--tol-feas", type=float, default=1e-8)
    p.add_argument("--tol-gap", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=200)


def cmd_samplesize(args, out):
    if args.scale == 1:
        n = classical_size(args.epsilon, args.beta, args.n_dims)
    else:
        n = scaled_size(args.epsilon, args.beta, args.n_dims, args.scale, args.alpha)
    print(n, file=out)
    if args.explain:
        print(f"scaled epsilon: {scaled_epsilon(args.epsilon, args.scale, args.alpha)!r}", file=out)
    return 0


def cmd_solve(args, out):
    problem = _load_problem(args.config)
    eps = problem.epsilon if args.epsilon is None else args.epsilon
    alpha = dists.tail_index(problem.distribution) if args.alpha is None else args.alpha
    N = scaled_size(eps, args.beta, problem.n_free, args.scale, alpha)
    xi = dists.sample(problem.distribution, N, args.seed)
    rep = solve(assemble(problem, xi, args.scale, args.seed), _solver_options(args))
    result = {
        "status": rep.status, "N": N, "scale": args.scale, "alpha": alpha, "epsilon": eps,
        "beta": args.beta, "seed": args.seed, "n_free": problem.n_free,
        "x_hat": None if rep.x_hat is None else rep.x_hat.tolist(),
        "objective": rep.objective_value if rep.optimal else None,
        "max_row_violation": rep.max_row_violation if rep.optimal else None,
        "iterations": rep.iterations, "solve_time_ms": rep.solve_time,
        "certificate": None if rep.certificate is None else rep.certificate.tolist(),
    }
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text, file=out)
    return 0 if rep.optimal else EXIT_SOLVER


def cmd_validate(args, out):
    problem = _load_problem(args.config)
    sol = _load_json(args.solution)
    x = sol.get("x_hat", sol.get("x")) if isinstance(sol, dict) else sol
    if x is None:
        raise ConfigError("solution file has neither 'x_hat' nor 'x'")
    try:
        est = estimate_violation(problem, x, args.samples, args.seed, args.confidence, args.workers)
    except ProblemError as exc:
        raise ConfigError(str(exc)) from None
    print(json.dumps(est.to_json(), indent=2), file=out)
    return 0


def cmd_ldp_check(args, out):
    dist = dists.from_json(_load_json(args.distribution))
    A_list = [np.atleast_2d(a) for a in (args.a or [[1.0] * dist.dim])]
    rows = tail_ratio([1.0], A_list, dist, args.u_list, args.samples, args.seed,
                             args.confidence, args.workers)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["u", "ratio", "hits", "reliable", "p_hat", "ci_high", "exact_ratio"])
    for r in rows:
        exact = ""
        if dist.dim == 1 and len(A_list) == 1:
            try:
                exact = repr(exact_tail_ratio(dist, r.u, float(A_list[0][0, 0])))
            except (TypeError, ValueError):
                pass
        w.writerow([repr(r.u), repr(r.ratio), r.hits, int(r.reliable), repr(r.p_hat),
                    repr(r.ci_high), exact])
    return 0


def cmd_experiment(args, out):
    if args.target == "pole-assignment":
        problem = pole_assignment(args.cov_diag, args.epsilon_list[0], lead=args.lead)
    else:
        problem = _load_problem(args.target)
    cfg = exp.ExperimentConfig(
        epsilon_list=args.epsilon_list, scale_list=args.scales, trials=args.trials,
        seed=args.seed, beta=args.beta, alpha=args.alpha, time_limit=args.time_limit,
        mc_samples=args.samples, confidence=args.confidence, workers=args.workers,
        tol_feas=args.tol_feas, tol_gap=args.tol_gap, max_iters=args.max_iters)
    exp.run_experiment(problem, cfg, args.out_dir)
    with open(Path(args.out_dir) / "summary.json") as fh:
        print(fh.read(), file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaledscenario",
                                     description="Classical and scaled scenario programs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("samplesize", help="number of scenarios to draw")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n-dims", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--explain", action="store_true")
    p.set_defaults(func=cmd_samplesize)

    p = sub.add_parser("solve", help="draw scenarios and solve the scaled sampled program")
    p.add_argument("--config", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--alpha", type=float)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="Monte Carlo violation estimate of a solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ldp-check", help="tail-ratio diagnostic as CSV")
    p.add_argument("--distribution", required=True, help="JSON file or inline JSON")
    p.add_argument("--a", type=_floats, action="append",
                   help="constraint direction (repeatable); default all ones")
    p.add_argument("--u-list", type=_floats, required=True)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ldp_check)

    p = sub.add_parser("experiment", help="repeated trials over epsilon and scale grids")
    p.add_argument("target", help="'pole-assignment' or a problem config file")
    p.add_argument("--epsilon-list", type=_floats, default=[1e-3])
    p.add_argument("--scales", type=_floats, default=[1.0, 1.1, 1.2])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--alpha", type=float)
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--samples", type=int, help="validation draws (default 1e4/epsilon)")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cov-diag", type=_floats, default=[0.0278, 0.0069, 0.0069, 0.0069])
    p.add_argument("--lead", action="store_true", help="add the x2 <= x1 side constraint")
    p.add_argument("--out-dir", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (ConfigError, ProblemError, dists.DistributionError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
