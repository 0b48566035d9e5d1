import math

import numpy as np
import pytest

from critlab import BETA_C_2D
from critlab.errors import DegenerateStatistic, InvalidParameter
from critlab.gibbs import PLUS, enumerate_measure, expectation, ising_model, spin
from critlab.ising import (IsingParams, LinearStatistic, batch_stderr, chain_correlation, fit_power_law,
                           initial_state, linear_statistic, magnetization, sample_chain, torus_correlation,
                           two_point)
from critlab.lattice import build_box, build_chain, build_rectangle, build_torus


def test_critical_beta():
    assert BETA_C_2D == pytest.approx(0.5 * math.log(1 + math.sqrt(2)), abs=1e-15)


def test_params_validation():
    with pytest.raises(InvalidParameter):
        IsingParams(-0.1, build_chain(3))
    with pytest.raises(InvalidParameter):
        sample_chain(IsingParams(0.2, build_chain(3)), 10, 0, method="swap")


def test_chain_correlation():
    m = enumerate_measure(ising_model(0.9), build_chain(6))
    for x in range(6):
        assert two_point(m, 0, x) == pytest.approx(chain_correlation(0.9, x), abs=1e-13)


@pytest.mark.parametrize("method", ["glauber", "wolff"])
def test_sampler_matches_enumeration_torus(method):
    lat = build_torus(4)
    beta = 0.35
    m = enumerate_measure(ising_model(beta), lat)
    exact_nn = two_point(m, 0, 1)
    exact_far = two_point(m, 0, 10)  # (0,0) to (2,2)
    s = sample_chain(IsingParams(beta, lat), 40_000, seed=11, method=method, burn_in=500)
    for u, v, ex in ((0, 1, exact_nn), (0, 10, exact_far)):
        x = s[:, u].astype(float) * s[:, v]
        assert abs(x.mean() - ex) < 4 * batch_stderr(x, 40) + 2e-3


def test_plus_boundary_glauber():
    lat = build_box(1)  # 3 x 3 sites
    beta = 0.5
    m = enumerate_measure(ising_model(beta), lat, PLUS)
    exact = expectation(m, spin(4))
    s = sample_chain(IsingParams(beta, lat, PLUS), 60_000, seed=2, burn_in=200)
    x = s[:, 4].astype(float)
    assert abs(x.mean() - exact) < 4 * batch_stderr(x, 40) + 2e-3


def test_determinism_and_init():
    p = IsingParams(0.3, build_torus(6))
    a = sample_chain(p, 50, seed=9, method="wolff")
    b = sample_chain(p, 50, seed=9, method="wolff")
    assert np.array_equal(a, b)
    assert np.all(initial_state(p, "minus") == -1)
    with pytest.raises(InvalidParameter):
        initial_state(p, "stripes")


def test_infinite_beta_wolff_flips_everything():
    lat = build_torus(5)
    s = sample_chain(IsingParams(50.0, lat), 4, seed=0, method="wolff", burn_in=0)
    assert all(abs(magnetization(r)) == 1 for r in s)


def test_torus_correlation_constant_field():
    s = np.ones((3, 36))
    assert np.allclose(torus_correlation(s, 6), 1.0)


def test_fit_power_law_recovers_exponent():
    r = np.arange(1, 40)
    fit = fit_power_law(r, 3.0 * r ** -0.25)
    assert fit["slope"] == pytest.approx(-0.25, abs=1e-12)
    assert fit["intercept"] == pytest.approx(math.log(3.0))
    with pytest.raises(DegenerateStatistic):
        fit_power_law(r, -np.ones_like(r, dtype=float))


def test_linear_statistic_constant():
    lat = build_rectangle(4, 4)
    stat = LinearStatistic(lambda x: np.ones(len(x)), alpha=1.0)
    assert linear_statistic(np.ones((2, 16)), stat, lat) == pytest.approx([4.0, 4.0])


def test_batch_stderr():
    x = np.repeat([0.0, 1.0], 50)
    assert batch_stderr(x, 2) == pytest.approx(0.5)
    with pytest.raises(DegenerateStatistic):
        batch_stderr([1.0], 20)
