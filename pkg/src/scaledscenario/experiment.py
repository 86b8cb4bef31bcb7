"""Repeated-trial experiments comparing classical and scaled scenario programs."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import distributions as dists
from .problem import ChanceProblem, assemble
from .samplesize import scaled_size
from .solver import OPTIMAL, INFEASIBLE, TIMEOUT, SolverOptions, solve
from .validate import estimate_violation

log = logging.getLogger(__name__)

CSV_HEADER = ("trial", "method", "s", "alpha", "N", "status", "objective",
              "solve_time_ms", "violation", "ci_low", "ci_high", "seed")
METRICS = ("solve_time_ms", "objective", "violation")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    s: float
    alpha: float
    N: int
    status: str
    objective: float
    solve_time_ms: float
    violation: float
    ci_low: float
    ci_high: float
    seed: int

    def row(self) -> list[str]:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))
    return str(v)


def method_label(s: float) -> str:
    return "classical" if s == 1 else f"scaled-{s:g}"


def default_mc_samples(epsilon: float) -> int:
    """``1e4 / epsilon`` draws: 1e6 at 1e-2, 1e7 at 1e-3, 1e8 at 1e-4."""
    return int(round(1e4 / epsilon))


@dataclass
class ExperimentConfig:
    epsilon_list: Sequence[float] = (1e-3,)
    scale_list: Sequence[float] = (1.0, 1.1, 1.2)
    trials: int = 20
    seed: int = 1
    beta: float = 0.05
    alpha: float | None = None
    time_limit: float = 3600.0
    mc_samples: int | None = None
    confidence: float = 0.95
    workers: int = 1
    tol_feas: float = 1e-8
    tol_gap: float = 1e-6
    max_iters: int = 200


def run_trial(problem: ChanceProblem, cfg: ExperimentConfig, eps_index: int,
              scale_index: int, trial: int) -> TrialRecord:
    eps = cfg.epsilon_list[eps_index]
    s = cfg.scale_list[scale_index]
    alpha = dists.tail_index(problem.distribution) if cfg.alpha is None else cfg.alpha
    seed = dists.derive_seed(cfg.seed, eps_index, scale_index, trial)
    N = scaled_size(eps, cfg.beta, problem.n_free, s, alpha)
    xi = dists.sample(problem.distribution, N, seed)
    opts = SolverOptions(cfg.tol_feas, cfg.tol_gap, cfg.max_iters, cfg.time_limit)
    rep = solve(assemble(problem, xi, s, seed), opts)
    nan = math.nan
    viol = lo = hi = nan
    if rep.status == OPTIMAL:
        M = cfg.mc_samples or default_mc_samples(eps)
        est = estimate_violation(problem, rep.x_hat, M, dists.derive_seed(seed, "mc"),
                                 cfg.confidence)
        viol, lo, hi = est.p_hat, est.ci_low, est.ci_high
    obj = rep.objective_value if rep.status == OPTIMAL else nan
    return TrialRecord(trial, method_label(s), float(s), float(alpha), N, rep.status,
                       obj, rep.solve_time, viol, lo, hi, seed)


def _check_writable(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write-probe"
    probe.write_text("")
    probe.unlink()


def csv_name(epsilon: float) -> str:
    return f"trials_eps{epsilon:g}.csv"


def run_experiment(problem: ChanceProblem, cfg: ExperimentConfig, out_dir) -> dict[float, list[TrialRecord]]:
    """Run every (epsilon, s, trial) cell; write one CSV per epsilon and ``summary.json``.

    Rows are written in (s, trial) order regardless of worker completion order.
    """
    out_dir = Path(out_dir)
    _check_writable(out_dir)
    if cfg.trials < 1:
        raise ValueError("trials must be at least 1")
    results: dict[float, list[TrialRecord]] = {}
    summaries = {}
    for ei, eps in enumerate(cfg.epsilon_list):
        cells = [(si, t) for si in range(len(cfg.scale_list)) for t in range(cfg.trials)]

        def job(cell):
            si, t = cell
            rec = run_trial(problem, cfg, ei, si, t)
            log.info("eps=%g %s trial %d: %s N=%d %.1f ms", eps, rec.method, t,
                     rec.status, rec.N, rec.solve_time_ms)
            return rec

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                records = list(pool.map(job, cells))
        else:
            records = [job(c) for c in cells]
        path = out_dir / csv_name(eps)
        write_csv(records, path)
        results[eps] = records
        summaries[f"{eps:g}"] = summarize(path)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summaries, fh, indent=2, sort_keys=True)
    return results


def write_csv(records: Iterable[TrialRecord], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.row())


def read_csv(path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"line 1: unexpected header {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                out.append(TrialRecord(int(row[0]), row[1], float(row[2]), float(row[3]),
                                       int(row[4]), row[5], float(row[6]), float(row[7]),
                                       float(row[8]), float(row[9]), float(row[10]), int(row[11])))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    return out


def quartiles(values) -> dict[str, float] | None:
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return None
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return dict(zip(("min", "q1", "median", "q3", "max"), map(float, q)))


def summarize(source) -> dict:
    """Per-method quartiles of solve time, objective and violation.

    ``source`` is a CSV path or a list of records.  Objective and violation
    quartiles use optimal trials only.
    """
    records = read_csv(source) if isinstance(source, (str, Path)) else list(source)
    by_method: dict[str, list[TrialRecord]] = {}
    for rec in records:
        by_method.setdefault(rec.method, []).append(rec)
    out = {}
    for method in sorted(by_method, key=lambda m: (by_method[m][0].s, m)):
        recs = by_method[method]
        ok = [r for r in recs if r.status == OPTIMAL]
        out[method] = {
            "s": recs[0].s,
            "N": sorted({r.N for r in recs}),
            "trials": len(recs),
            "optimal": len(ok),
            "infeasible": sum(r.status == INFEASIBLE for r in recs),
            "timeout": sum(r.status == TIMEOUT for r in recs),
            "solve_time_ms": quartiles(r.solve_time_ms for r in recs),
            "objective": quartiles(r.objective for r in ok),
            "violation": quartiles(r.violation for r in ok),
        }
    return out


def record_dict(rec: TrialRecord) -> dict:
    return asdict(rec)
