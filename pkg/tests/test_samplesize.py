import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scaledscenario.samplesize import (ScenarioConfig, classical_size, reduction_exponent,
                                       scaled_epsilon, scaled_size)


def _reference_arg(eps, beta, n, s=1.0, alpha=1.0):
    with mp.workdps(60):
        e = mp.mpf(eps) ** (mp.mpf(s) ** -mp.mpf(alpha))
        return (2 / e) * (mp.log(1 / mp.mpf(beta)) + n)


def test_classical_examples():
    assert classical_size(0.001, 0.05, 1) == 7992
    assert classical_size(0.5, math.exp(-1), 0) == 4
    assert classical_size(0.001, 0.05, 2) == 9992


def test_scaled_examples():
    assert scaled_size(0.001, 0.05, 1, 1.2, 2) == 969
    assert scaled_size(0.001, 0.05, 1, 1.0, 2) == 7992
    assert scaled_size(0.001, 0.05, 2, 1.2, 2) == 1211
    # ceil(3012.78...) from a 60-digit evaluation
    assert scaled_size(0.001, 0.05, 2, 1.1, 2) == 3013


def test_reduction_exponent_examples():
    assert abs(reduction_exponent(1e-8, 0.05, 1.2, 2, 1) - 1 / 1.44) < 0.05
    assert reduction_exponent(0.01, 0.3, 1.0, 3.0, 4) == 1.0
    # log(800) / log(79915)
    assert reduction_exponent(1e-4, 0.05, 2, 1, 1) == pytest.approx(0.5921497, abs=1e-6)


def test_reduction_exponent_tends_to_inverse_scale_power():
    gaps = [abs(reduction_exponent(10.0 ** -k, 0.05, 1.2, 2, 1) - 1 / 1.44) for k in (4, 8, 16, 64)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01


def test_scaled_epsilon_explain():
    assert scaled_epsilon(0.001, 1.2, 2) == pytest.approx(0.001 ** (1 / 1.44))
    assert scaled_epsilon(0.001, 1.0, 2) == 0.001


def test_monotonicity_grid():
    eps = np.geomspace(1e-6, 0.9, 25)
    betas = np.geomspace(1e-9, 0.9, 15)
    for n in (1, 2, 5):
        for b in betas:
            sizes = [classical_size(e, b, n) for e in eps]
            assert all(x >= y for x, y in zip(sizes, sizes[1:]))
        for e in eps:
            sizes = [classical_size(e, b, n) for b in betas]
            assert all(x >= y for x, y in zip(sizes, sizes[1:]))
    for e in eps:
        sizes = [classical_size(e, 0.05, n) for n in range(0, 20)]
        assert all(x <= y for x, y in zip(sizes, sizes[1:]))


@given(eps=st.floats(1e-9, 0.99), beta=st.floats(1e-9, 0.99), n=st.integers(1, 50),
       s=st.floats(1.0, 5.0), alpha=st.floats(0.1, 4.0))
def test_scaled_never_exceeds_classical(eps, beta, n, s, alpha):
    assert scaled_size(eps, beta, n, s, alpha) <= classical_size(eps, beta, n)
    assert scaled_size(eps, beta, n, 1.0, alpha) == classical_size(eps, beta, n)


def test_exactness_against_high_precision(rng):
    for _ in range(1000):
        eps = 10 ** rng.uniform(-7, -0.01)
        beta = 10 ** rng.uniform(-9, -0.01)
        n = int(rng.integers(1, 30))
        s = float(rng.choice([1.0, rng.uniform(1.0, 3.0)]))
        alpha = float(rng.uniform(0.2, 3.0))
        arg = _reference_arg(eps, beta, n, s, alpha)
        ref = int(mp.ceil(arg))
        got = scaled_size(eps, beta, n, s, alpha)
        if got != ref:
            assert abs(got - ref) == 1
            assert abs(arg - mp.nint(arg)) < 1e-9


@pytest.mark.parametrize("args", [
    (0.0, 0.05, 1), (1.0, 0.05, 1), (0.1, 0.0, 1), (0.1, 1.0, 1), (0.1, 0.05, -1), (0.1, 0.05, 1.5),
])
def test_classical_domain_errors(args):
    with pytest.raises(ValueError):
        classical_size(*args)


@pytest.mark.parametrize("s,alpha", [(0.9, 2.0), (1.2, 0.0), (1.2, -1.0)])
def test_scaled_domain_errors(s, alpha):
    with pytest.raises(ValueError):
        scaled_size(0.01, 0.05, 1, s, alpha)


def test_config_object():
    cfg = ScenarioConfig(0.001, 0.05, 1, 1.2, 2.0)
    assert (cfg.classical, cfg.scaled) == (7992, 969)
    with pytest.raises(ValueError):
        ScenarioConfig(0.001, 0.05, 0)


def test_reduction_exponent_approaches_power_limit():
    gaps = [abs(reduction_exponent(10.0 ** -k, 0.05, 1.2, 2, 1) - 1.2 ** -2) for k in (2, 4, 8, 16, 32)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01
