import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critlab.gibbs import (FREE, PLUS, BoundaryCondition, EnergyModel, Quadrature, enumerate_measure, expectation,
                           ising_model, joint_cumulant, metropolis_chain, metropolis_transition_matrix, potts_model,
                           spin)
from critlab.ising import two_point
from critlab.lattice import build_chain, build_rectangle, graph_from_edges


def test_single_edge_tanh():
    g = graph_from_edges([(0, 1)])
    for beta in (0.1, 0.5, 2.0):
        assert two_point(enumerate_measure(ising_model(beta), g), 0, 1) == pytest.approx(math.tanh(beta), abs=1e-14)


def test_beta_zero_is_uniform():
    m = enumerate_measure(potts_model(3, 0.0), build_rectangle(2, 2))
    assert np.allclose(m.probs, 1 / 81)


def test_square_partition_function():
    # a 2x2 free box is a 4-cycle: Z = 2^4 (cosh^4 b + sinh^4 b) on unnormalised spins
    beta = 0.4
    m = enumerate_measure(ising_model(beta), build_rectangle(2, 2))
    Z = (math.cosh(beta) ** 4 + math.sinh(beta) ** 4)  # reference measure carries the 2^-4
    assert m.Z == pytest.approx(Z, rel=1e-13)
    direct = sum(math.exp(beta * (s[0] * s[1] + s[1] * s[3] + s[3] * s[2] + s[2] * s[0])) / 16
                 for s in itertools.product((-1, 1), repeat=4))
    assert m.Z == pytest.approx(direct, rel=1e-13)


def test_expectation_basics():
    m = enumerate_measure(ising_model(0.0), build_chain(4))
    assert expectation(m, lambda s: np.ones(len(s))) == pytest.approx(1.0)
    assert expectation(m, lambda s: s[:, 0] * s[:, 1] * s[:, 2]) == pytest.approx(0.0, abs=1e-15)


def test_chain_transfer_product():
    beta = 0.7
    m = enumerate_measure(ising_model(beta), build_chain(5))
    for x in range(5):
        assert two_point(m, 0, x) == pytest.approx(math.tanh(beta) ** x, abs=1e-13)


def test_free_odd_moments_vanish():
    m = enumerate_measure(ising_model(0.6), build_rectangle(3, 2))
    for i, j, k in itertools.combinations(range(6), 3):
        assert abs(expectation(m, lambda s: s[:, i] * s[:, j] * s[:, k])) < 1e-14


def test_plus_boundary_breaks_symmetry():
    m = enumerate_measure(ising_model(0.5), build_rectangle(2, 2), PLUS)
    assert expectation(m, spin(0)) > 0.3


def test_cumulants():
    m = enumerate_measure(ising_model(0.0), build_chain(2))
    assert joint_cumulant(m, [spin(0), spin(0), spin(1), spin(1)]) == pytest.approx(0.0, abs=1e-15)
    m = enumerate_measure(ising_model(0.3), build_chain(3), PLUS)
    assert joint_cumulant(m, [spin(1)]) == pytest.approx(expectation(m, spin(1)))


def test_corner_cumulant_sign():
    from critlab.currents import tree_bound_check

    m = enumerate_measure(ising_model(0.4), build_rectangle(2, 2))
    k4 = joint_cumulant(m, [spin(i) for i in range(4)])
    lhs, rhs, _ = tree_bound_check(m, 0, 1, 2, 3)
    assert -rhs <= k4 <= 0


@given(st.permutations(range(4)), st.integers(0, 2**31))
def test_cumulant_symmetric_and_multilinear(perm, seed):
    rng = np.random.default_rng(seed)
    m = enumerate_measure(ising_model(0.5), build_rectangle(2, 2))
    coeffs = rng.normal(size=(5, 4))
    obs = [lambda s, c=c: s @ c for c in coeffs[:4]]
    k = joint_cumulant(m, obs)
    assert joint_cumulant(m, [obs[i] for i in perm]) == pytest.approx(k, abs=1e-12)
    extra = lambda s: s @ coeffs[4]  # noqa: E731
    lhs = joint_cumulant(m, [lambda s: obs[0](s) + 2 * extra(s)] + obs[1:])
    rhs = k + 2 * joint_cumulant(m, [extra] + obs[1:])
    assert lhs == pytest.approx(rhs, abs=1e-11)


def test_automorphism_invariance():
    m = enumerate_measure(ising_model(0.45), build_rectangle(2, 2))
    w = dict(zip(map(tuple, m.spins.astype(int)), m.log_weights))
    # index order is (0,0),(1,0),(0,1),(1,1); reflection x -> 1-x swaps 0<->1 and 2<->3
    for s, lw in w.items():
        assert w[(s[1], s[0], s[3], s[2])] == pytest.approx(lw)


def test_logsumexp_matches_direct():
    m = enumerate_measure(ising_model(0.3), build_rectangle(3, 3))
    assert m.Z == pytest.approx(np.exp(m.log_weights).sum(), rel=1e-12)


def test_quadrature_gaussian():
    q = Quadrature.gauss_legendre(64, -8, 8)
    model = EnergyModel(states=q, pair=lambda e, s, t: 0.0 * s, single_site=lambda u, s: 0.5 * s**2)
    m = enumerate_measure(model, build_chain(1))
    assert m.Z == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)
    assert expectation(m, lambda s: s[:, 0] ** 2) == pytest.approx(1.0, rel=1e-10)


def test_metropolis_beta_zero_accepts_everything():
    out = metropolis_chain(ising_model(0.0), build_chain(3), FREE, [1, 1, 1], 50, seed=1)
    # every proposal is accepted at beta = 0
    assert np.all(np.abs(out) == 1) and not np.all(out[1:] == out[:-1])


def test_metropolis_deterministic():
    a = metropolis_chain(ising_model(0.4), build_rectangle(2, 2), FREE, [1] * 4, 100, seed=7)
    b = metropolis_chain(ising_model(0.4), build_rectangle(2, 2), FREE, [1] * 4, 100, seed=7)
    assert np.array_equal(a, b)


def test_metropolis_matches_enumeration():
    lat = build_rectangle(2, 2)
    beta = 0.4
    exact = two_point(enumerate_measure(ising_model(beta), lat), 0, 3)
    out = metropolis_chain(ising_model(beta), lat, FREE, [1] * 4, 200_000, seed=3)
    x = out[:, 0] * out[:, 3]
    nb = 50
    means = x[: len(x) // nb * nb].reshape(nb, -1).mean(axis=1)
    se = means.std(ddof=1) / math.sqrt(nb)
    assert abs(x.mean() - exact) < 3 * se + 1e-3


def test_detailed_balance_rational():
    # weights as exact rationals: w(s) = r^{#agreeing edges} on a 3-site chain
    r = Fraction(5, 2)
    states = list(itertools.product(range(2), repeat=3))
    w = [r ** ((s[0] == s[1]) + (s[1] == s[2])) for s in states]
    P = metropolis_transition_matrix(w, 3, 2)
    for i in range(8):
        assert sum(P[i]) == 1
        for j in range(8):
            assert w[i] * P[i][j] == w[j] * P[j][i]


def test_fixed_boundary_values():
    bc = BoundaryCondition("fixed", values=-1)
    m = enumerate_measure(ising_model(0.8), build_chain(2), bc)
    assert expectation(m, spin(0)) < 0


def test_metropolis_asymmetric_pair():
    # chiral three-state clock weights: pair energy depends on (t - s) mod 3
    model = EnergyModel(states=(0, 1, 2), pair=lambda e, s, t: -np.cos(2 * np.pi * (np.asarray(t) - s) / 3 + 0.7),
                        beta=1.0)
    lat = build_chain(3)
    m = enumerate_measure(model, lat)
    exact = expectation(m, lambda s: (s[:, 1] - s[:, 0]) % 3 == 1)
    out = metropolis_chain(model, lat, FREE, [0, 0, 0], 100_000, seed=2)
    assert abs(np.mean((out[:, 1] - out[:, 0]) % 3 == 1) - exact) < 0.01
