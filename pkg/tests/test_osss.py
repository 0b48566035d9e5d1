import numpy as np
import pytest

from critlab.errors import CapacityExceeded, InvalidInput, InvalidParameter
from critlab.fk import FKParams
from critlab.lattice import build_chain, graph_from_edges
from critlab.osss import (CubeMeasure, DecisionTree, fk_cube_measure, is_increasing, is_monotonic, osss_verify,
                          product_measure, random_increasing_function, randomized_suite, revealment, run_tree,
                          uniform_measure)
from critlab.rng import make_rng


def test_product_measures_monotonic():
    assert is_monotonic(uniform_measure(3)) == (True, None)
    assert is_monotonic(product_measure([0.2, 0.7, 0.5]))[0]


def test_anticorrelated_not_monotonic():
    # mass only on 01 and 10
    ok, wit = is_monotonic(CubeMeasure(2, [0, 0.5, 0.5, 0]))
    assert not ok and wit["low"] > wit["high"]


def test_fk_measures_monotonic():
    g = graph_from_edges([(0, 1), (1, 2), (2, 0), (2, 3)])
    assert is_monotonic(fk_cube_measure(g, FKParams(3.0, 0.4)))[0]


def test_measure_validation():
    with pytest.raises(InvalidParameter):
        CubeMeasure(2, [0.5, 0.5, 0.5, 0.5])
    with pytest.raises(CapacityExceeded):
        is_monotonic(uniform_measure(13))


def test_is_increasing():
    assert is_increasing([0, 0, 0, 1])[0]
    ok, wit = is_increasing([1, 0, 0, 0])
    assert not ok and wit == (0, 1)


def test_dictator_is_tight():
    f = np.array([0.0, 1.0, 0.0, 1.0])  # f(w) = w_0
    res = osss_verify(uniform_measure(2), f, DecisionTree(0))
    assert res.variance == pytest.approx(0.25)
    assert res.rhs == pytest.approx(0.25)
    assert list(res.revealment) == [1.0, 0.0]


def test_majority_of_three():
    codes = np.arange(8)
    f = np.array([bin(c).count("1") >= 2 for c in codes], dtype=float)
    tree = DecisionTree(0, DecisionTree(1), DecisionTree(1))
    res = osss_verify(uniform_measure(3), f, tree)
    assert np.allclose(res.revealment, [1, 1, 0.5])
    assert res.slack >= 0


def test_run_tree_stops_early():
    f = np.array([0.0, 0.0, 1.0, 1.0])  # depends on bit 1 only
    val, rev = run_tree(DecisionTree(1), f, 2, 2)
    assert val == 1.0 and rev == frozenset({1})
    assert list(revealment(uniform_measure(2), f, DecisionTree(1))) == [0.0, 1.0]


def test_rejections():
    with pytest.raises(InvalidInput):
        osss_verify(uniform_measure(2), [1.0, 0.0, 0.0, 0.0], DecisionTree(0))
    with pytest.raises(InvalidParameter):
        osss_verify(uniform_measure(2), [0.0, 2.0, 2.0, 2.0], DecisionTree(0))
    with pytest.raises(InvalidParameter):
        DecisionTree(0, DecisionTree(0)).validate(2)


def test_random_increasing():
    f = random_increasing_function(4, make_rng(3))
    assert is_increasing(f)[0] and f.min() >= 0 and f.max() <= 1


def test_randomized_suite():
    violations, slack = randomized_suite(200, seed=1)
    assert violations == 0 and slack >= -1e-12


def test_chain_graph_measure():
    meas = fk_cube_measure(build_chain(4), FKParams(2.0, 0.5))
    f = np.zeros(8)
    f[7] = 1.0  # left-right crossing of the chain
    res = osss_verify(meas, f, DecisionTree(0, None, DecisionTree(1, None, DecisionTree(2))))
    assert res.slack >= -1e-12
