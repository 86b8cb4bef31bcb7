"""Out-of-sample certification and large-deviation diagnostics.

* :func:`estimate_violation` -- Monte Carlo estimate of the probability that
  a decision violates any canonical constraint, with an exact binomial
  (Clopper-Pearson) interval.
* :func:`rate_function` -- ``I(a) = inf { lambda(z) : z >= 0, a'z >= 1 }``
  for ``a = A_i' y``.
* :func:`tail_ratio` -- ``log P(max_i y'A_i xi > u) / (-q(u) min_i I_i)``,
  which tends to 1 as ``u`` grows.
* :func:`feasibility_ratio` -- ``log V(x_eps) / log eps`` for solutions of the
  scaled sampled program.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import distributions as dists
from .problem import ChanceProblem, assemble
from .samplesize import scaled_size
from .solver import SolverOptions, solve

RELIABLE_HITS = 50


# -- violation probability --------------------------------------------------

def clopper_pearson(hits: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval.

    At ``hits == 0`` (``hits == trials``) one bound is pinned at 0 (1), and
    the whole miss probability goes to the other side, e.g. the zero-hit
    upper bound is ``1 - (1 - confidence)**(1/trials)``.
    """
    if not 0 <= hits <= trials or trials < 1:
        raise ValueError(f"need 0 <= hits <= trials, trials >= 1; got {hits}/{trials}")
    a = 1.0 - confidence
    if hits == 0:
        return 0.0, 1.0 - a ** (1.0 / trials)
    if hits == trials:
        return a ** (1.0 / trials), 1.0
    lo = stats.beta.ppf(a / 2, hits, trials - hits + 1)
    hi = stats.beta.ppf(1 - a / 2, hits + 1, trials - hits)
    return float(lo), float(hi)


@dataclass(frozen=True)
class ViolationEstimate:
    p_hat: float
    hits: int
    trials: int
    ci_low: float
    ci_high: float
    confidence: float
    seed: int

    def to_json(self) -> dict:
        return {"p_hat": self.p_hat, "hits": self.hits, "trials": self.trials,
                "ci_low": self.ci_low, "ci_high": self.ci_high,
                "confidence": self.confidence, "seed": self.seed}


def count_exceedances(dist, W: np.ndarray, thresholds, M: int, seed: int, workers: int = 1) -> np.ndarray:
    """Count draws with ``max_i (xi @ W)_i > threshold`` for each threshold."""
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))

    def chunk_counts(xi):
        worst = np.max(xi @ W, axis=1)
        return np.array([np.count_nonzero(worst > t) for t in thresholds], dtype=np.int64)

    parts = dists.map_chunks(dist, M, seed, chunk_counts, workers)
    return np.sum(parts, axis=0) if parts else np.zeros(thresholds.shape[0], dtype=np.int64)


def estimate_violation(problem: ChanceProblem, x, M: int, seed: int,
                       confidence: float = 0.95, workers: int = 1) -> ViolationEstimate:
    """Monte Carlo estimate of ``P(max_i x'A_i xi > 1)``; the threshold is always 1."""
    if M < 1:
        raise ValueError("M must be at least 1")
    x = problem.expand(x)
    W = np.stack([a.T @ x for a in problem.A], axis=1)
    hits = int(count_exceedances(problem.distribution, W, 1.0, M, seed, workers)[0])
    lo, hi = clopper_pearson(hits, M, confidence)
    return ViolationEstimate(hits / M, hits, M, lo, hi, confidence, seed)


# -- rate function ----------------------------------------------------------

@dataclass(frozen=True)
class RateValue:
    value: float
    z_star: np.ndarray | None
    per_constraint: tuple[float, ...]
    argmin: int | None = None


def project_halfspace_orthant(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{z >= 0, a'z >= 1}`` (assumes some ``a_j > 0``)."""
    z = np.maximum(v, 0.0)
    if a @ z >= 1.0:
        return z

    def phi(tau):
        return float(a @ np.maximum(v + tau * a, 0.0))

    lo, hi = 0.0, 1.0
    while phi(hi) < 1.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    # phi is piecewise linear: finish exactly on the active set at hi
    act = (v + hi * a) > 0
    denom = float(a[act] @ a[act])
    if denom > 0:
        tau = (1.0 - float(a[act] @ v[act])) / denom
        cand = np.maximum(v + tau * a, 0.0)
        if abs(a @ cand - 1.0) <= 1e-12 and np.array_equal(cand > 0, act):
            return cand
    return np.maximum(v + hi * a, 0.0)


def _pgd(f, grad, a, z0, max_iter=10_000, tol=1e-13):
    """Accelerated projected gradient with backtracking and adaptive restart."""
    z = project_halfspace_orthant(z0, a)
    y, t, L = z.copy(), 1.0, 1.0
    fz = f(z)
    for _ in range(max_iter):
        g = grad(y)
        fy = f(y)
        while True:
            z_new = project_halfspace_orthant(y - g / L, a)
            diff = z_new - y
            if f(z_new) <= fy + g @ diff + 0.5 * L * diff @ diff + 1e-15 * abs(fy):
                break
            L *= 2.0
        f_new = f(z_new)
        if f_new > fz:  # restart momentum
            y, t = z.copy(), 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = z_new + ((t - 1) / t_new) * (z_new - z)
        step = np.linalg.norm(z_new - z)
        z, fz, t = z_new, f_new, t_new
        L *= 0.9
        if step <= tol * max(1.0, np.linalg.norm(z)):
            break
    return z


def _polish_support(P: np.ndarray, a: np.ndarray, z: np.ndarray) -> np.ndarray | None:
    """Exact minimizer on the support of ``z`` if it satisfies the KKT conditions."""
    F = z > 1e-9 * max(1.0, z.max())
    if not np.any(F & (a > 0)):
        return None
    w = np.linalg.solve(P[np.ix_(F, F)], a[F])
    denom = float(a[F] @ w)
    if denom <= 0:
        return None
    cand = np.zeros_like(z)
    cand[F] = w / denom
    nu = 1.0 / denom
    slack = P @ cand - nu * a
    if np.all(cand >= 0) and np.all(slack[~F] >= -1e-10 * max(1.0, nu)):
        return cand
    return None


def _quadratic_rate(P: np.ndarray, cov: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Minimizer of ``0.5 z'Pz`` over ``{z >= 0, a'z >= 1}``."""
    z = cov @ a / float(a @ cov @ a) if a @ cov @ a > 0 else np.maximum(a, 0)
    if np.all(z >= 0):
        return z
    # short gradient bursts until the support is identified
    for _ in range(200):
        z = _pgd(lambda v: 0.5 * v @ P @ v, lambda v: P @ v, a, z, max_iter=50)
        cand = _polish_support(P, a, z)
        if cand is not None:
            return cand
    return z


def _weibull_rate(k: float, scales: np.ndarray, a: np.ndarray) -> np.ndarray:
    pos = a > 0
    z = np.zeros_like(a)
    if k <= 1.0:
        # concave or linear objective: the optimum is a vertex e_j / a_j
        cost = np.full(a.shape, np.inf)
        cost[pos] = (1.0 / (a[pos] * scales[pos])) ** k
        j = int(np.argmin(cost))
        z[j] = 1.0 / a[j]
        return z
    z[pos] = (a[pos] * scales[pos] ** k) ** (1.0 / (k - 1.0))
    return z / float(a @ z)


def _single_rate(dist, lam, a: np.ndarray) -> tuple[float, np.ndarray | None]:
    if not np.any(a > 0):
        return math.inf, None
    if isinstance(dist, (dists.MultivariateNormal, dists.Elliptical)):
        z = _quadratic_rate(np.linalg.inv(dist.cov), dist.cov, a)
    elif isinstance(dist, dists.WeibullIndependent):
        z = _weibull_rate(dist.shape, dist.scales, a)
    elif isinstance(dist, dists.GaussianMixture):
        precs = [np.linalg.inv(c) for c in dist.covs]
        z0 = _quadratic_rate(precs[0], dist.covs[0], a)
        z = _pgd(lambda z: lam(z),
                 lambda z: sum(2.0 * (z @ Pk @ z) * (Pk @ z) for Pk in precs), a, z0)
    else:
        raise TypeError(f"unsupported distribution {type(dist).__name__}")
    return float(lam(z)), z


def rate_function(y, A_list: Sequence[np.ndarray], dist) -> RateValue:
    """``min_i inf { lambda(z) : z >= 0, (A_i' y)'z >= 1 }`` with per-constraint values."""
    if isinstance(dist, dists.AffinePushforward):
        raise NotImplementedError("rate function needs a base family with tail data")
    lam = dists.ldp_data(dist).lam
    y = np.asarray(y, dtype=float).reshape(-1)
    values, minimizers = [], []
    for A in A_list:
        a = np.atleast_2d(np.asarray(A, dtype=float)).T @ y
        v, z = _single_rate(dist, lam, a)
        values.append(v)
        minimizers.append(z)
    i = int(np.argmin(values))
    if math.isinf(values[i]):
        return RateValue(math.inf, None, tuple(values), None)
    return RateValue(values[i], minimizers[i], tuple(values), i)


# -- tail-ratio diagnostics -------------------------------------------------

@dataclass(frozen=True)
class TailRatio:
    u: float
    ratio: float
    hits: int
    reliable: bool
    p_hat: float
    ci_high: float


def tail_ratio(y, A_list, dist, u_list, M: int, seed: int,
                      confidence: float = 0.95, workers: int = 1) -> list[TailRatio]:
    """Monte Carlo ``log P_hat(u) / (-q(u) I)`` for increasing thresholds ``u``.

    Entries with fewer than 50 exceedances are flagged unreliable; with no
    exceedances the exact binomial upper bound replaces ``P_hat``.
    """
    u_list = np.asarray(u_list, dtype=float)
    if np.any(np.diff(u_list) <= 0):
        raise ValueError("u_list must be increasing")
    rate = rate_function(y, A_list, dist)
    if not math.isfinite(rate.value):
        raise ValueError("rate function is infinite; the tail event has no mass")
    q = dists.ldp_data(dist).q
    y = np.asarray(y, dtype=float).reshape(-1)
    W = np.stack([np.atleast_2d(np.asarray(A, float)).T @ y for A in A_list], axis=1)
    counts = count_exceedances(dist, W, u_list, M, seed, workers)
    out = []
    for u, hits in zip(u_list, counts):
        hits = int(hits)
        _, hi = clopper_pearson(hits, M, confidence)
        p = hits / M if hits else hi
        out.append(TailRatio(float(u), math.log(p) / (-q(u) * rate.value), hits,
                             hits >= RELIABLE_HITS, hits / M, hi))
    return out


def exact_tail_ratio(dist, u: float, a: float = 1.0) -> float:
    """Closed-form ratio for a scalar constraint ``a * xi > u`` on a one-dimensional law."""
    if dist.dim != 1 or a <= 0:
        raise ValueError("exact tail ratio needs a one-dimensional law and a > 0")
    rate = rate_function([1.0], [np.array([[a]])], dist).value
    q = dists.ldp_data(dist).q
    if isinstance(dist, dists.MultivariateNormal):
        sd = math.sqrt(float(dist.cov[0, 0]))
        log_p = stats.norm.logsf(u / a, loc=float(dist.mean[0]), scale=sd)
    elif isinstance(dist, dists.WeibullIndependent):
        log_p = -((u / a) / float(dist.scales[0])) ** dist.shape
    else:
        raise TypeError(f"no closed-form tail for {type(dist).__name__}")
    return float(log_p) / (-q(u) * rate)


# -- asymptotic feasibility -------------------------------------------------

@dataclass(frozen=True)
class FeasibilityRow:
    epsilon: float
    N: int
    status: str
    v_hat: float
    hits: int
    ci_high: float
    ratio: float
    objective: float


def feasibility_ratio(problem: ChanceProblem, s: float, beta: float, epsilon_list, M,
                   seed: int, alpha: float | None = None, confidence: float = 0.95,
                   options: SolverOptions | None = None, workers: int = 1) -> list[FeasibilityRow]:
    """``log V(x_eps) / log eps`` for scaled-program solutions at each ``eps``.

    Uses the Clopper-Pearson upper bound in place of a zero estimate.  An
    infeasible or failed solve is recorded in its row with a NaN ratio.
    """
    eps = [float(e) for e in epsilon_list]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon_list must be decreasing")
    Ms = [int(M)] * len(eps) if np.ndim(M) == 0 else [int(m) for m in M]
    alpha = dists.tail_index(problem.distribution) if alpha is None else alpha
    rows = []
    for i, (e, m) in enumerate(zip(eps, Ms)):
        N = scaled_size(e, beta, problem.n_free, s, alpha)
        sample_seed = dists.derive_seed(seed, "samples", i)
        xi = dists.sample(problem.distribution, N, sample_seed, workers)
        rep = solve(assemble(problem, xi, s, sample_seed), options)
        if not rep.optimal:
            rows.append(FeasibilityRow(e, N, rep.status, math.nan, 0, math.nan, math.nan, math.nan))
            continue
        est = estimate_violation(problem, rep.x_hat, m, dists.derive_seed(seed, "mc", i),
                                 confidence, workers)
        p = est.p_hat if est.hits else est.ci_high
        rows.append(FeasibilityRow(e, N, rep.status, est.p_hat, est.hits, est.ci_high,
                                math.log(p) / math.log(e), rep.objective_value))
    return rows
