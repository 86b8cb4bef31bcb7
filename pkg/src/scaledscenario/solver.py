"""Primal-dual interior-point solver for tall, skinny convex QPs.

Problems have the form ``min 0.5 x'Px + q'x  s.t.  Gx <= h,  lb <= x <= ub``
with few variables and possibly ~1e5 rows.  Each Mehrotra iteration forms
the ``n x n`` normal matrix ``P + G' diag(z/s) G``, so the cost per
iteration is linear in the row count.

Infeasibility is settled by a phase-1 program ``min t  s.t.  Gx - t <= h``
whose optimal duals give a Farkas certificate ``y >= 0, G'y = 0, h'y < 0``
whenever ``t* > 0``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .problem import Linear, Quadratic, SampledProgram

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"
NUMERICAL_FAILURE = "NumericalFailure"
TIMEOUT = "Timeout"


@dataclass
class SolverOptions:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-6
    max_iters: int = 200
    time_limit: float | None = None


@dataclass
class SolveReport:
    status: str
    x_hat: np.ndarray | None
    objective_value: float
    max_row_violation: float
    solve_time: float  # milliseconds
    iterations: int
    kkt_residual: float = float("nan")
    certificate: np.ndarray | None = None
    duals: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _Result:
    status: str
    x: np.ndarray
    z: np.ndarray
    iterations: int
    kkt: float


class _Timeout(Exception):
    pass


def _ipm(P, q, G, h, x0, opts: SolverOptions, deadline, strict_start=False) -> _Result:
    """Mehrotra predictor-corrector on ``min 0.5x'Px + q'x, Gx <= h``.

    Rows of ``G`` are assumed to have unit norm.
    """
    m, n = G.shape
    x = x0.copy()
    s = h - G @ x
    if not strict_start or np.any(s <= 0):
        s = np.maximum(s, 1.0)
    z = np.ones(m)
    scale_d = 1.0 + np.abs(q).max(initial=0.0) + np.abs(P).max(initial=0.0)
    reg = 1e-13 * (1.0 + np.abs(P).max(initial=0.0))

    def direction(rd, rp, rc, chol):
        rhs = -rd + G.T @ ((rc - z * rp) / s)
        dx = cho_solve(chol, rhs)
        ds = -rp - G @ dx
        dz = (-rc - z * ds) / s
        return dx, ds, dz

    def step_to_boundary(v, dv):
        neg = dv < 0
        if not np.any(neg):
            return 1.0
        return min(1.0, float(np.min(-v[neg] / dv[neg])))

    kkt = np.inf
    for it in range(opts.max_iters + 1):
        if deadline is not None and time.perf_counter() > deadline:
            raise _Timeout
        Px = P @ x
        rd = Px + q + G.T @ z
        rp = G @ x + s - h
        gap = float(s @ z)
        mu = gap / m
        pobj = 0.5 * x @ Px + q @ x
        kkt = float(np.abs(rd).max(initial=0.0)) / scale_d
        viol = float(np.max(G @ x - h, initial=-np.inf))
        if (viol <= opts.tol_feas and np.abs(rp).max(initial=0.0) <= opts.tol_feas
                and kkt <= opts.tol_gap and gap <= opts.tol_gap * max(1.0, abs(pobj))):
            return _Result(OPTIMAL, x, z, it, kkt)
        if it == opts.max_iters:
            break
        if not np.all(np.isfinite(z)) or z.max() > 1e12:
            # duals diverging: the primal is (nearly) infeasible
            return _Result(NUMERICAL_FAILURE, x, z, it, kkt)

        K = P + (G.T * (z / s)) @ G
        chol = None
        # degenerate vertices leave K nearly singular; escalate the ridge
        for ridge in (reg, 1e-10 * np.trace(K), 1e-7 * np.trace(K)):
            try:
                chol = cho_factor(K + ridge * np.eye(n))
                break
            except LinAlgError:
                continue
        if chol is None:
            return _Result(NUMERICAL_FAILURE, x, z, it, kkt)

        dx, ds, dz = direction(rd, rp, s * z, chol)
        a_aff = min(step_to_boundary(s, ds), step_to_boundary(z, dz))
        mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        rc = s * z + ds * dz - sigma * mu
        dx, ds, dz = direction(rd, rp, rc, chol)
        a = 0.99 * min(step_to_boundary(s, ds), step_to_boundary(z, dz))
        a = min(a, 1.0)
        if not np.all(np.isfinite(dx)):
            return _Result(NUMERICAL_FAILURE, x, z, it, kkt)
        x = x + a * dx
        s = s + a * ds
        z = z + a * dz
        s = np.maximum(s, 1e-300)
        z = np.maximum(z, 1e-300)
    return _Result(ITERATION_LIMIT, x, z, opts.max_iters, kkt)


def _phase1(G, h, x0, opts, deadline):
    """Minimize the largest row excess ``t``; returns ``(t*, x, y)``."""
    m, n = G.shape
    G1 = np.zeros((m + 1, n + 1))
    G1[:m, :n] = G
    G1[:m, n] = -1.0
    G1[m, n] = -1.0
    h1 = np.append(h, 1.0)
    row_norm = np.linalg.norm(G1, axis=1)
    G1 /= row_norm[:, None]
    h1 = h1 / row_norm
    t0 = max(float(np.max(G @ x0 - h)) + 1.0, 0.0)
    q1 = np.zeros(n + 1)
    q1[n] = 1.0
    res = _ipm(np.zeros((n + 1, n + 1)), q1, G1, h1, np.append(x0, t0),
               SolverOptions(1e-10, 1e-10, opts.max_iters), deadline, strict_start=True)
    y = res.z[:m] / row_norm[:m]
    return float(res.x[n]), res.x[:n], y, res


def solve_qp(P, q, G, h, lower, upper, options: SolverOptions | None = None) -> SolveReport:
    """Solve ``min 0.5x'Px + q'x`` over ``Gx <= h`` and the box ``[lower, upper]``.

    The certificate on an infeasible report is indexed over the rows of
    ``G`` followed by the upper then lower box rows.
    """
    opts = options or SolverOptions()
    start = time.perf_counter()
    deadline = None if opts.time_limit is None else start + opts.time_limit
    P = np.atleast_2d(np.asarray(P, dtype=float))
    q = np.asarray(q, dtype=float).reshape(-1)
    n = q.shape[0]
    if P.shape != (n, n):
        raise ValueError("P and q dimensions differ")
    if np.linalg.eigvalsh(0.5 * (P + P.T)).min() < -1e-10 * (1 + np.abs(P).max()):
        raise ValueError("objective matrix is not positive semidefinite")
    G = np.asarray(G, dtype=float).reshape(-1, n)
    h = np.asarray(h, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)

    G_all = np.vstack([G, np.eye(n), -np.eye(n)])
    h_all = np.concatenate([h, upper, -lower])
    norms = np.linalg.norm(G_all, axis=1)

    def report(status, x=None, z=None, it=0, kkt=np.nan, cert=None):
        elapsed = 1e3 * (time.perf_counter() - start)
        if x is None:
            return SolveReport(status, None, float("nan"), float("nan"), elapsed, it, kkt, cert)
        viol = float(np.max(G_all @ x - h_all))
        obj = float(0.5 * x @ P @ x + q @ x)
        return SolveReport(status, x, obj, viol, elapsed, it, kkt, cert, z)

    zero = norms <= 1e-14 * max(1.0, norms.max(initial=0.0))
    if np.any(zero & (h_all < 0)):
        cert = np.zeros(h_all.shape[0])
        cert[np.flatnonzero(zero & (h_all < 0))[0]] = 1.0
        return report(INFEASIBLE, cert=cert)
    keep = ~zero
    Gn = G_all[keep] / norms[keep, None]
    hn = h_all[keep] / norms[keep]

    def full_duals(zk):
        out = np.zeros(h_all.shape[0])
        out[keep] = zk / norms[keep]
        return out

    x0 = 0.5 * (lower + upper)
    try:
        res = _ipm(P, q, Gn, hn, x0, opts, deadline)
        if res.status == OPTIMAL:
            return report(OPTIMAL, res.x, full_duals(res.z), res.iterations, res.kkt)
        iters = res.iterations
        t_star, x1, y, ph = _phase1(Gn, hn, x0, opts, deadline)
        iters += ph.iterations
        if t_star > 1e-7:
            y_full = full_duals(np.maximum(y, 0.0))
            y_full /= y_full.sum()
            if verify_certificate(G, h, lower, upper, y_full):
                return report(INFEASIBLE, it=iters, cert=y_full)
        if ph.status == OPTIMAL and t_star < -1e-9:
            res2 = _ipm(P, q, Gn, hn, x1, opts, deadline, strict_start=True)
            iters += res2.iterations
            if res2.status == OPTIMAL:
                return report(OPTIMAL, res2.x, full_duals(res2.z), iters, res2.kkt)
            res = res2
        status = ITERATION_LIMIT if res.status == ITERATION_LIMIT else NUMERICAL_FAILURE
        return report(status, res.x, full_duals(res.z), iters, res.kkt)
    except _Timeout:
        return report(TIMEOUT)


def solve(program: SampledProgram, options: SolverOptions | None = None) -> SolveReport:
    obj = program.objective
    n = program.n_free
    if isinstance(obj, Quadratic):
        P, q = obj.H, obj.c
    elif isinstance(obj, Linear):
        P, q = np.zeros((n, n)), obj.c
    else:
        raise TypeError(f"unsupported objective {type(obj).__name__}")
    G, h = program.inequalities()
    rep = solve_qp(P, q, G, h, program.lower, program.upper, options)
    if rep.x_hat is not None:
        rep.objective_value += program.const
        rep.max_row_violation = feasibility_check(program, rep.x_hat)
    return rep


def feasibility_check(program: SampledProgram, x) -> float:
    """Largest violation over sampled rows, side rows and the box; ``<= 0`` is feasible."""
    x = np.asarray(x, dtype=float).reshape(-1)
    G, h = program.inequalities()
    parts = [program.lower - x, x - program.upper]
    if G.shape[0]:
        parts.append(G @ x - h)
    return float(max(np.max(p) for p in parts))


def verify_certificate(G, h, lower, upper, y, tol: float = 1e-9) -> bool:
    """Check a Farkas certificate for ``Gx <= h, lower <= x <= upper``.

    ``y`` spans the rows of ``G`` then the upper and lower box rows.  Any
    feasible ``x`` gives ``0 <= y'(h - Gx) = h'y - r'x`` with ``r = G'y``,
    so ``h'y < -|r|_1 max|x|`` proves infeasibility despite rounding in ``r``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[1]
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    G_all = np.vstack([G, np.eye(n), -np.eye(n)])
    h_all = np.concatenate([np.asarray(h, float).reshape(-1), upper, -lower])
    y = np.asarray(y, dtype=float)
    if y.shape != h_all.shape or np.any(y < 0):
        return False
    r = G_all.T @ y
    radius = float(np.max(np.maximum(np.abs(lower), np.abs(upper)), initial=0.0))
    return float(h_all @ y) + float(np.abs(r).sum()) * radius < -tol * float(y.sum())
