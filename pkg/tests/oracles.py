"""Independent reference computations used by several test modules."""
import itertools

import numpy as np


def enumerate_qp_2d(P, q, G, h, lower, upper, tol=1e-9):
    """Exact optimum of a 2-variable convex QP/LP by active-set enumeration.

    Candidates are the unconstrained minimizer, the minimizer on every
    constraint line and every pairwise line intersection; the best feasible
    candidate is optimal because some active set of size <= 2 is.
    """
    P, q = np.asarray(P, float), np.asarray(q, float)
    G_all = np.vstack([np.asarray(G, float).reshape(-1, 2), np.eye(2), -np.eye(2)])
    h_all = np.concatenate([np.asarray(h, float).reshape(-1), upper, -np.asarray(lower, float)])
    cands = []
    pd = np.linalg.eigvalsh(P).min() > 1e-12
    if pd:
        Pinv = np.linalg.inv(P)
        xu = -Pinv @ q
        cands.append(xu)
        for g, b in zip(G_all, h_all):
            w = Pinv @ g
            cands.append(xu + w * (b - g @ xu) / (g @ w))
    for i, j in itertools.combinations(range(len(h_all)), 2):
        M = G_all[[i, j]]
        if abs(np.linalg.det(M)) > 1e-12:
            cands.append(np.linalg.solve(M, h_all[[i, j]]))
    best, best_x = np.inf, None
    for x in cands:
        if np.all(G_all @ x - h_all <= tol * (1 + np.abs(h_all))):
            val = 0.5 * x @ P @ x + q @ x
            if val < best:
                best, best_x = val, x
    return best, best_x


def grid_upper_bound(P, q, G, h, lower, upper, points=401):
    """Best objective over feasible points of a uniform grid on the box."""
    g1 = np.linspace(lower[0], upper[0], points)
    g2 = np.linspace(lower[1], upper[1], points)
    X = np.stack(np.meshgrid(g1, g2), axis=-1).reshape(-1, 2)
    G = np.asarray(G, float).reshape(-1, 2)
    feas = np.all(X @ G.T <= np.asarray(h, float) + 1e-12, axis=1) if G.shape[0] else np.ones(len(X), bool)
    if not np.any(feas):
        return np.inf
    Xf = X[feas]
    vals = 0.5 * np.einsum("ij,jk,ik->i", Xf, P, Xf) + Xf @ q
    return float(vals.min())


def random_instance(rng, rows=None, linear=False):
    n_rows = int(rng.integers(1, 21)) if rows is None else rows
    G = rng.normal(size=(n_rows, 2))
    x0 = rng.uniform(-8, 8, 2)
    h = G @ x0 + rng.uniform(0.0, 3.0, n_rows)
    if linear:
        P = np.zeros((2, 2))
    else:
        B = rng.normal(size=(2, 2))
        P = B @ B.T + 0.1 * np.eye(2)
    q = rng.normal(scale=5.0, size=2)
    return P, q, G, h, np.full(2, -10.0), np.full(2, 10.0)


def random_infeasible_instance(rng):
    P, q, G, h, lo, hi = random_instance(rng, rows=int(rng.integers(2, 19)))
    a = rng.normal(size=2)
    c = rng.uniform(-5, 5)
    gap = rng.uniform(0.01, 2.0)
    # a'x <= c and a'x >= c + gap
    G = np.vstack([G, a, -a])
    h = np.concatenate([h, [c, -(c + gap)]])
    return P, q, G, h, lo, hi


def orthant_qp_rate(P, a):
    """``min 0.5 z'Pz`` over ``{z >= 0, a'z >= 1}`` by enumerating supports.

    The halfspace is active at the optimum (``z = 0`` is infeasible), so on a
    support ``S`` the minimizer is ``P_SS^-1 a_S / (a_S' P_SS^-1 a_S)``.
    """
    d = len(a)
    best = np.inf
    best_z = None
    for r in range(1, d + 1):
        for S in itertools.combinations(range(d), r):
            S = list(S)
            w = np.linalg.solve(P[np.ix_(S, S)], a[S])
            den = a[S] @ w
            if den <= 0 or np.any(w / den < -1e-12):
                continue
            z = np.zeros(d)
            z[S] = w / den
            val = 0.5 * z @ P @ z
            if val < best:
                best, best_z = val, z
    return best, best_z


def random_spd(rng, d):
    B = rng.normal(size=(d, d))
    return B @ B.T + 0.2 * np.eye(d)
