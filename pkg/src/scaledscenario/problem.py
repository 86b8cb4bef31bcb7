"""Chance-constrained programs with bilinear constraints.

A :class:`ChanceProblem` holds constraints in canonical form
``x' A_i xi <= 1``.  User-level two-sided affine constraints are brought
into that form by :func:`canonicalize`, which appends a decision variable
pinned at 1 and a constant coordinate to the uncertainty.  :func:`assemble`
turns a problem plus scenario draws into the tall linear program solved by
:mod:`scaledscenario.solver`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import distributions as dists

POLE_COV_DIAG = (0.0278, 0.0069, 0.0069, 0.0069)


class ProblemError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Linear:
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.array(self.c, dtype=float).reshape(-1))

    @property
    def dim(self):
        return self.c.shape[0]

    def value(self, x):
        return float(self.c @ x)


@dataclass(frozen=True, eq=False)
class Quadratic:
    """``0.5 x'Hx + c'x``."""

    H: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        H = np.atleast_2d(np.array(self.H, dtype=float))
        c = np.zeros(H.shape[0]) if self.c is None else np.array(self.c, dtype=float).reshape(-1)
        if H.shape != (c.shape[0], c.shape[0]):
            raise ProblemError("quadratic objective H and c dimensions differ")
        if not np.allclose(H, H.T, atol=1e-12):
            raise ProblemError("quadratic objective H must be symmetric")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)

    @property
    def dim(self):
        return self.c.shape[0]

    def value(self, x):
        return float(0.5 * x @ self.H @ x + self.c @ x)


Objective = Union[Linear, Quadratic]


@dataclass(frozen=True, eq=False)
class ChanceProblem:
    A: Sequence[np.ndarray]
    objective: Objective
    lower: np.ndarray
    upper: np.ndarray
    distribution: object
    epsilon: float = 0.05
    fixed: Mapping[int, float] = field(default_factory=dict)
    # deterministic side rows D x <= e over the full decision vector; never scaled
    side_D: np.ndarray | None = None
    side_e: np.ndarray | None = None

    def __post_init__(self):
        A = tuple(np.atleast_2d(np.array(a, dtype=float)) for a in self.A)
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        n = lower.shape[0]
        if upper.shape != lower.shape:
            raise ProblemError("box bounds have different lengths")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ProblemError("box must be bounded")
        if np.any(lower > upper):
            raise ProblemError("box lower bound exceeds upper bound")
        d = self.distribution.dim
        for i, a in enumerate(A):
            if a.shape != (n, d):
                raise ProblemError(f"A[{i}] has shape {a.shape}, expected {(n, d)}")
        if self.objective.dim != n:
            raise ProblemError("objective dimension differs from decision dimension")
        if isinstance(self.objective, Quadratic) and np.linalg.eigvalsh(self.objective.H).min() < -1e-10:
            raise ProblemError("quadratic objective is not positive semidefinite")
        fixed = {int(k): float(v) for k, v in dict(self.fixed).items()}
        for k, v in fixed.items():
            if not (0 <= k < n and lower[k] <= v <= upper[k]):
                raise ProblemError(f"fixed variable {k}={v} outside the box")
        if self.side_D is not None:
            D = np.atleast_2d(np.array(self.side_D, dtype=float))
            e = np.array(self.side_e, dtype=float).reshape(-1)
            if D.shape != (e.shape[0], n):
                raise ProblemError("side constraint shapes are inconsistent")
            object.__setattr__(self, "side_D", D)
            object.__setattr__(self, "side_e", e)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "fixed", fixed)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def d(self) -> int:
        return self.distribution.dim

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def free(self) -> np.ndarray:
        return np.array([k for k in range(self.n) if k not in self.fixed], dtype=int)

    @property
    def n_free(self) -> int:
        return self.n - len(self.fixed)

    def expand(self, x) -> np.ndarray:
        """Full decision vector from either a free-variable or a full vector."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] == self.n:
            return x
        if x.shape[0] != self.n_free:
            raise ProblemError(f"decision has length {x.shape[0]}, expected {self.n_free} or {self.n}")
        full = np.empty(self.n)
        full[self.free] = x
        for k, v in self.fixed.items():
            full[k] = v
        return full

    def constraint_values(self, x, samples) -> np.ndarray:
        """``x' A_i xi_j`` for every sample ``j`` (rows) and constraint ``i`` (columns)."""
        x = self.expand(x)
        W = np.stack([a.T @ x for a in self.A], axis=1)
        return np.asarray(samples, dtype=float) @ W


@dataclass(frozen=True, eq=False)
class IntervalConstraint:
    """``lo <= x'(A xi + b) + xi'c + d <= hi``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    lo: float
    hi: float

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0] or c.shape[0] != A.shape[1]:
            raise ProblemError("interval constraint A, b, c dimensions are inconsistent")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.hi > self.lo:
            raise ProblemError(f"invalid interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", float(self.d))

    def value(self, x, xi):
        x, xi = np.asarray(x, float), np.asarray(xi, float)
        return float(x @ (self.A @ xi + self.b) + xi @ self.c + self.d)

    @property
    def augmented(self) -> np.ndarray:
        """``[[A, b], [c', d]]`` so that the value is ``(x,1)' M (xi,1)``."""
        n, d = self.A.shape
        M = np.zeros((n + 1, d + 1))
        M[:n, :d] = self.A
        M[:n, d] = self.b
        M[n, :d] = self.c
        M[n, d] = self.d
        return M


def canonicalize(constraints: Sequence[IntervalConstraint], objective: Objective,
                 lower, upper, distribution, epsilon: float = 0.05,
                 side_D=None, side_e=None) -> ChanceProblem:
    """Rewrite two-sided interval constraints as canonical bilinear rows.

    Each interval ``[lo, hi]`` is normalized about its midpoint ``mu`` with
    half-width ``w``: ``(g - mu)/w <= 1`` and ``(mu - g)/w <= 1``.  Scaling the
    right-hand side by ``1/s`` therefore shrinks the interval to
    ``[mu - w/s, mu + w/s]``.
    """
    if not constraints:
        raise ProblemError("at least one constraint is required")
    n, d = constraints[0].A.shape
    if distribution.dim != d:
        raise ProblemError(f"distribution dimension {distribution.dim} != constraint dimension {d}")
    E = np.zeros((n + 1, d + 1))
    E[n, d] = 1.0
    A = []
    for con in constraints:
        if con.A.shape != (n, d):
            raise ProblemError("all constraints must share the same A shape")
        mu, w = 0.5 * (con.lo + con.hi), 0.5 * (con.hi - con.lo)
        if not w > 0:
            raise ProblemError(f"invalid interval [{con.lo}, {con.hi}]")
        M = con.augmented - mu * E
        A.extend([M / w, -M / w])

    T = np.vstack([np.eye(d), np.zeros((1, d))])
    t = np.zeros(d + 1)
    t[d] = 1.0
    pushed = dists.AffinePushforward(distribution, T, t)

    if isinstance(objective, Quadratic):
        H = np.zeros((n + 1, n + 1))
        H[:n, :n] = objective.H
        obj = Quadratic(H, np.append(objective.c, 0.0))
    else:
        obj = Linear(np.append(objective.c, 0.0))
    if side_D is not None:
        side_D = np.hstack([np.atleast_2d(np.array(side_D, float)),
                            np.zeros((np.atleast_2d(side_D).shape[0], 1))])
    return ChanceProblem(A, obj, np.append(lower, 1.0), np.append(upper, 1.0), pushed,
                         epsilon, fixed={n: 1.0}, side_D=side_D, side_e=side_e)


@dataclass(frozen=True, eq=False)
class SampledProgram:
    """``min objective(x) + const`` s.t. ``G x + offset <= rhs``, side rows, box.

    Everything is over the free decision variables only.
    """

    G: np.ndarray
    offset: np.ndarray
    rhs: np.ndarray
    objective: Objective
    lower: np.ndarray
    upper: np.ndarray
    const: float = 0.0
    side_D: np.ndarray | None = None
    side_e: np.ndarray | None = None
    n_samples: int = 0
    scale: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        n = np.asarray(self.lower).shape[0]
        G = np.array(self.G, dtype=float).reshape(-1, n)
        rows = G.shape[0]
        offset = np.zeros(rows) if self.offset is None else np.array(self.offset, float).reshape(-1)
        rhs = np.broadcast_to(np.asarray(self.rhs, dtype=float), (rows,)).copy()
        if offset.shape[0] != rows:
            raise ProblemError("offset length differs from row count")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower", np.array(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.array(self.upper, dtype=float))
        if self.side_D is None:
            object.__setattr__(self, "side_D", np.zeros((0, n)))
            object.__setattr__(self, "side_e", np.zeros(0))

    @property
    def n_free(self) -> int:
        return self.lower.shape[0]

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """All rows except the box as ``(G_all, h_all)`` with ``G_all x <= h_all``."""
        return (np.vstack([self.G, self.side_D]),
                np.concatenate([self.rhs - self.offset, self.side_e]))


def reduce_objective(objective: Objective, free, fixed: Mapping[int, float]):
    """Restrict an objective to the free variables; returns ``(objective, constant)``."""
    idx = np.array(sorted(fixed), dtype=int)
    vals = np.array([fixed[k] for k in idx], dtype=float)
    if isinstance(objective, Quadratic):
        H, c = objective.H, objective.c
        lin = c[free] + H[np.ix_(free, idx)] @ vals
        const = 0.5 * vals @ H[np.ix_(idx, idx)] @ vals + c[idx] @ vals
        return Quadratic(H[np.ix_(free, free)], lin), float(const)
    return Linear(objective.c[free]), float(objective.c[idx] @ vals)


def assemble(problem: ChanceProblem, samples, s: float = 1.0, seed: int | None = None) -> SampledProgram:
    """Sampled program with right-hand sides ``1/s``; ``s = 1`` is the classical one.

    Rows are ordered sample-major, constraint-minor.  Pinned variables are
    substituted and their contribution kept in ``offset``.
    """
    if not s >= 1:
        raise ProblemError(f"scale must be >= 1, got {s}")
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or (samples.shape[0] and samples.shape[1] != problem.d):
        raise ProblemError(f"samples must have shape (N, {problem.d}), got {samples.shape}")
    N = samples.shape[0]
    free = problem.free
    fixed_idx = np.array(sorted(problem.fixed), dtype=int)
    fixed_val = np.array([problem.fixed[k] for k in fixed_idx], dtype=float)
    if N:
        stack = np.stack(problem.A)  # (m, n, d)
        V = np.einsum("jd,ind->jin", samples, stack).reshape(N * problem.m, problem.n)
    else:
        V = np.zeros((0, problem.n))
    G = V[:, free]
    offset = V[:, fixed_idx] @ fixed_val if fixed_idx.size else np.zeros(V.shape[0])
    obj, const = reduce_objective(problem.objective, free, problem.fixed)
    side_D = side_e = None
    if problem.side_D is not None:
        side_D = problem.side_D[:, free]
        side_e = problem.side_e - (problem.side_D[:, fixed_idx] @ fixed_val if fixed_idx.size else 0.0)
    return SampledProgram(G, offset, np.full(G.shape[0], 1.0 / s), obj,
                          problem.lower[free], problem.upper[free], const,
                          side_D, side_e, n_samples=N, scale=float(s), seed=seed)


# -- pole assignment benchmark ------------------------------------------------

def pole_assignment_problem(covariance=None, epsilon: float = 1e-3, bound: float = 10.0):
    """Interval constraints, objective and box for the robust pole-assignment benchmark.

    Plant ``((0.75+xi3) z + 1.25 + xi4) / (z^2 + (0.75+xi1) z + xi2)`` with
    controller ``(x1 z + x2) / (z + 1)``; every non-leading coefficient of the
    closed-loop polynomial must lie in ``[1, 3]``.
    """
    if covariance is not None:
        dists._spd(covariance, "covariance")
    A1 = np.zeros((2, 4))
    A1[0, 2] = 1.0                     # xi3 * x1
    A2 = np.zeros((2, 4))
    A2[1, 2] = 1.0                     # xi3 * x2
    A2[0, 3] = 1.0                     # xi4 * x1
    A3 = np.zeros((2, 4))
    A3[1, 3] = 1.0                     # xi4 * x2
    constraints = [
        IntervalConstraint(A1, [0.75, 0.0], [1, 0, 0, 0], 1.75, 1.0, 3.0),   # z^2
        IntervalConstraint(A2, [1.25, 0.75], [1, 1, 0, 0], 0.75, 1.0, 3.0),  # z^1
        IntervalConstraint(A3, [0.0, 1.25], [0, 1, 0, 0], 0.0, 1.0, 3.0),    # z^0
    ]
    objective = Quadratic(2.0 * np.eye(2))
    box = (np.full(2, -bound), np.full(2, bound))
    return constraints, objective, box


def pole_assignment(cov_diag=POLE_COV_DIAG, epsilon: float = 1e-3, bound: float = 10.0,
                    lead: bool = False) -> ChanceProblem:
    """Canonical benchmark problem; ``lead`` adds ``x2 <= x1 - 1e-6``."""
    cov = np.diag(np.asarray(cov_diag, dtype=float))
    constraints, objective, (lo, hi) = pole_assignment_problem(cov, epsilon, bound)
    dist = dists.MultivariateNormal(np.zeros(4), cov)
    side = ([[-1.0, 1.0]], [-1e-6]) if lead else (None, None)
    return canonicalize(constraints, objective, lo, hi, dist, epsilon, *side)


def problem_from_json(obj: dict) -> ChanceProblem:
    if obj.get("benchmark") is not None:
        if obj["benchmark"] != "pole-assignment":
            raise ProblemError(f"unknown benchmark {obj['benchmark']!r}")
        return pole_assignment(obj.get("cov_diag", POLE_COV_DIAG), obj.get("epsilon", 1e-3),
                               obj.get("bound", 10.0), obj.get("lead", False))
    try:
        dist = dists.from_json(obj["distribution"])
        o = obj["objective"]
        if o.get("type", "quadratic" if "H" in o else "linear") == "quadratic":
            objective = Quadratic(o["H"], o.get("c"))
        else:
            objective = Linear(o["c"])
        lower, upper = obj["box"]["lower"], obj["box"]["upper"]
        eps = obj.get("epsilon", 0.05)
        if "canonical" in obj:
            return ChanceProblem(obj["canonical"], objective, lower, upper, dist, eps,
                                 fixed={int(k): v for k, v in obj.get("fixed", {}).items()})
        cons = []
        for c in obj["constraints"]:
            A = np.atleast_2d(np.array(c["A"], float))
            lo, hi = c["interval"]
            cons.append(IntervalConstraint(A, c.get("b", np.zeros(A.shape[0])),
                                           c.get("c", np.zeros(A.shape[1])), c.get("d", 0.0), lo, hi))
        return canonicalize(cons, objective, lower, upper, dist, eps)
    except KeyError as exc:
        raise ProblemError(f"problem config is missing key {exc}") from None
