import math
from fractions import Fraction

import numpy as np
import pytest

from critlab.errors import CapacityExceeded, InvalidParameter
from critlab.fk import (FKParams, cluster_count, conditional_open_probability, connection_probability,
                        edwards_sokal_color, fk_chain, fk_exact, fk_theta, fk_weight, heat_bath_step,
                        ising_edge_probability, potts_edge_probability, self_dual_point, swendsen_wang)
from critlab.gibbs import enumerate_measure, expectation, ising_model, potts_model
from critlab.lattice import build_chain, build_rectangle, build_torus, graph_from_edges
from critlab.percolation import theta
from critlab.rng import make_rng

SQUARE = build_rectangle(2, 2)


def test_self_dual_points():
    assert self_dual_point(1) == 0.5
    assert self_dual_point(2) == pytest.approx(math.sqrt(2) / (1 + math.sqrt(2)))
    assert self_dual_point(4) == pytest.approx(2 / 3)
    with pytest.raises(InvalidParameter):
        self_dual_point(0.5)


def test_edge_probabilities():
    assert potts_edge_probability(0.0) == 0.0
    assert ising_edge_probability(0.3) == pytest.approx(1 - math.exp(-0.6))


def test_params_validation():
    with pytest.raises(InvalidParameter):
        FKParams(0.5, 0.3)
    with pytest.raises(InvalidParameter):
        FKParams(2, 1.2)


def test_weight_and_clusters():
    g = build_chain(3)
    assert cluster_count(g, [True, False]) == 2
    assert cluster_count(g, [False, False], wired=[(0, 0), (2, 0)]) == 2
    assert fk_weight(g, [True, False], FKParams(2, 0.5)) == pytest.approx(0.25 * 4)


def test_q1_is_bernoulli():
    m = fk_exact(SQUARE, FKParams(1, 0.3))
    k = m.config.sum(axis=1)
    assert np.allclose(m.probs, 0.3**k * 0.7 ** (4 - k))


def test_edwards_sokal_ising():
    for beta in (0.2, 0.6):
        ising = enumerate_measure(ising_model(beta), SQUARE)
        fk = fk_exact(SQUARE, FKParams(2, ising_edge_probability(beta)))
        for y in range(1, 4):
            corr = expectation(ising, lambda s: s[:, 0] * s[:, y])
            assert connection_probability(fk, 0, y) == pytest.approx(corr, abs=1e-12)


def test_edwards_sokal_potts():
    beta, q = 0.8, 3
    potts = enumerate_measure(potts_model(q, beta), SQUARE)
    fk = fk_exact(SQUARE, FKParams(q, potts_edge_probability(beta)))
    agree = expectation(potts, lambda s: s[:, 0] == s[:, 3])
    # P(same colour) = P(conn) + (1 - P(conn)) / q
    pc = connection_probability(fk, 0, 3)
    assert agree == pytest.approx(pc + (1 - pc) / q, abs=1e-12)


def test_conditional_and_heat_bath():
    assert conditional_open_probability(0.5, 2, False) == pytest.approx(1 / 3)
    assert conditional_open_probability(0.5, 2, True) == 0.5
    g = graph_from_edges([(0, 1)])
    rng = make_rng(0)
    hits = np.mean([heat_bath_step(g, [False], 0, FKParams(2, 0.5), rng)[0] for _ in range(30000)])
    assert abs(hits - 1 / 3) < 0.015


def test_chain_matches_exact():
    params = FKParams(2.5, 0.55)
    m = fk_exact(SQUARE, params)
    exact = connection_probability(m, 0, 3)
    out = fk_chain(SQUARE, params, 60000, seed=4)
    from critlab.percolation import batch_source_target

    hit = batch_source_target(4, SQUARE.edge_array, out, [0], [3]).astype(float)
    assert abs(hit.mean() - exact) < 0.01


def test_wired_chain():
    g = build_chain(4)
    params = FKParams(3, 0.4)
    ends = [(0, 0), (3, 0)]
    m = fk_exact(g, params, wired=ends)
    exact = m.probs @ m.config[:, 1]
    out = fk_chain(g, params, 60000, seed=1, wired=ends)
    assert abs(out[:, 1].mean() - exact) < 0.01


def test_swendsen_wang():
    g = build_torus(3)
    beta, q = 0.5, 3
    exact = expectation(enumerate_measure(potts_model(q, beta), g), lambda s: s[:, 0] == s[:, 1])
    cols = [c for _, c in swendsen_wang(g, q, potts_edge_probability(beta), 30000, seed=3, burn_in=100)]
    est = np.mean([c[0] == c[1] for c in cols])
    assert abs(est - exact) < 0.01


def test_colouring():
    rng = make_rng(1)
    c = edwards_sokal_color(build_chain(4), [True, True, True], 3, rng)
    assert len(set(c)) == 1 and 1 <= c[0] <= 3
    with pytest.raises(InvalidParameter):
        edwards_sokal_color(build_chain(4), [True] * 3, 2.5, rng)


def test_theta_q1_is_percolation():
    for p in (Fraction(1, 3), Fraction(1, 2)):
        assert fk_theta(2, FKParams(1, float(p))) == pytest.approx(float(theta(2, p).exact), abs=1e-12)


def test_theta_wired_dominates_free():
    params = FKParams(2, self_dual_point(2))
    assert fk_theta(2, params, wired=True) >= fk_theta(2, params)


def test_capacity():
    with pytest.raises(CapacityExceeded):
        fk_exact(build_torus(4), FKParams(2, 0.5))
