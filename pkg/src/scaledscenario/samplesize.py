"""Scenario sample-size bounds for classical and scaled sampled programs."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScenarioConfig:
    epsilon: float
    beta: float
    n_dims: int
    scale: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        _check(self.epsilon, self.beta, self.n_dims, self.scale, self.alpha)
        if self.n_dims < 1:
            raise ValueError("n_dims must be at least 1")

    @property
    def classical(self) -> int:
        return classical_size(self.epsilon, self.beta, self.n_dims)

    @property
    def scaled(self) -> int:
        return scaled_size(self.epsilon, self.beta, self.n_dims, self.scale, self.alpha)


def _check(epsilon, beta, n_dims, s=1.0, alpha=1.0):
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if int(n_dims) != n_dims or n_dims < 0:
        raise ValueError(f"n_dims must be a nonnegative integer, got {n_dims}")
    if not s >= 1:
        raise ValueError(f"scale must be >= 1, got {s}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def classical_size(epsilon: float, beta: float, n_dims: int) -> int:
    """``ceil((2/epsilon) * (log(1/beta) + n_dims))``, ceiling taken once."""
    _check(epsilon, beta, n_dims)
    return math.ceil((2.0 / epsilon) * (-math.log(beta) + n_dims))


def scaled_epsilon(epsilon: float, s: float, alpha: float) -> float:
    """Violation level the classical bound is evaluated at: ``epsilon**(s**-alpha)``."""
    return epsilon ** (s ** -alpha)


def scaled_size(epsilon: float, beta: float, n_dims: int, s: float, alpha: float) -> int:
    _check(epsilon, beta, n_dims, s, alpha)
    if s == 1:
        return classical_size(epsilon, beta, n_dims)
    return classical_size(scaled_epsilon(epsilon, s, alpha), beta, n_dims)


def reduction_exponent(epsilon: float, beta: float, s: float, alpha: float, n_dims: int) -> float:
    """``log N_scaled / log N_classical``; tends to ``s**-alpha`` as epsilon -> 0."""
    num = math.log(scaled_size(epsilon, beta, n_dims, s, alpha))
    den = math.log(classical_size(epsilon, beta, n_dims))
    if s == 1:
        return 1.0
    if den == 0:
        raise ValueError("classical size is 1; the log-ratio is undefined")
    return num / den
