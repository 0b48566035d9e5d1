import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critlab.errors import CapacityExceeded, InvalidParameter
from critlab.sixvertex import (TILES, TilingBoundary, apply_transfer, c_of_q, cylinder_partition_function,
                               dense_leading_eigenvalue, dense_transfer, eigen_ratios, enumerate_tilings, is_c_tile,
                               is_irreducible, leading_eigen, sector_states, tile_weight, transfer_block)

TORUS = TilingBoundary("torus")


def test_tiles():
    assert len(TILES) == 6
    assert sum(map(is_c_tile, TILES)) == 2
    assert all(t[0] + t[1] == t[2] + t[3] for t in TILES)
    assert tile_weight((1, -1, -1, 1), 3) == 3  # h_l != h_r


def test_c_of_q():
    assert c_of_q(4) == pytest.approx(2.0)
    assert c_of_q(9) == pytest.approx(math.sqrt(5))
    assert c_of_q(0) == pytest.approx(math.sqrt(2))


def test_single_tile():
    assert enumerate_tilings(1, 1, 2) == (6, 8)


def test_frozen_enumerations():
    assert enumerate_tilings(2, 2, Fraction(3, 2), TORUS) == (18, Fraction(209, 8))
    assert enumerate_tilings(2, 2, 1) == (82, 82)


def test_fixed_boundary_conflict():
    assert enumerate_tilings(1, 1, 1, TilingBoundary("free", ((("h", 0, 0), 1),)))[0] == 3
    # on a width-1 cylinder the left and right edges are the same edge
    b = TilingBoundary("cylinder", ((("h", 0, 0), 1), (("h", 0, 1), -1)))
    assert enumerate_tilings(1, 1, 1, b)[0] == 0
    with pytest.raises(InvalidParameter):
        TilingBoundary("mobius")


@pytest.mark.parametrize("W,H", [(1, 1), (2, 2), (3, 2), (2, 3), (4, 4), (4, 3), (8, 2)])
def test_trace_equals_torus_count(W, H):
    c = Fraction(3, 2)
    assert cylinder_partition_function(W, H, c) == enumerate_tilings(W, H, c, TORUS)[1]


def test_block_leakage():
    N = 6
    for n in range(N + 1):
        st_ = sector_states(N, n)
        v = np.zeros(2**N)
        v[st_] = np.arange(1, len(st_) + 1)
        out = apply_transfer(N, 1.5, v)
        mask = np.ones(2**N, bool)
        mask[st_] = False
        assert np.all(out[mask] == 0)


@pytest.mark.parametrize("N", [2, 4, 6])
def test_block_dims_and_dense(N):
    V = dense_transfer(N, 1.3)
    for n in range(N + 1):
        B = transfer_block(N, n, 1.3)
        assert B.dim == comb(N, n)
        st_ = sector_states(N, n)
        assert np.allclose(B.to_dense(), V[np.ix_(st_, st_)])
        sparse = transfer_block(N, n, 1.3, dense=False)
        assert np.allclose(sparse.to_dense(), B.to_dense())


def test_frozen_eigenvalue():
    assert leading_eigen(transfer_block(4, 2, 2.0)).value == pytest.approx(26.0, rel=1e-11)
    assert dense_leading_eigenvalue(transfer_block(4, 2, 2.0)) == pytest.approx(26.0, rel=1e-12)


@pytest.mark.parametrize("N,q", [(4, 4), (6, 4), (6, 9), (8, 9)])
def test_power_iteration_vs_dense(N, q):
    c = c_of_q(q)
    for n in range(1, N):
        B = transfer_block(N, n, c)
        res = leading_eigen(B)
        assert res.value == pytest.approx(dense_leading_eigenvalue(B), rel=1e-9)
        v = res.vector * np.sign(res.vector.sum())
        assert np.all(v > 0)
        assert is_irreducible(B)


def test_eigen_ratios():
    ratios, lams = eigen_ratios(8, 3, c_of_q(4))
    assert ratios[0] == 1.0
    assert all(0 < r <= 1 + 1e-12 for r in ratios)
    with pytest.raises(InvalidParameter):
        eigen_ratios(7, 1, 2.0)


def test_capacity_and_validation():
    with pytest.raises(CapacityExceeded):
        enumerate_tilings(5, 5)
    with pytest.raises(InvalidParameter):
        transfer_block(21, 3, 1.0)
    with pytest.raises(InvalidParameter):
        sector_states(4, 5)


@given(st.integers(2, 10), st.data())
def test_sector_state_popcounts(N, data):
    n = data.draw(st.integers(0, N))
    s = sector_states(N, n)
    assert len(s) == comb(N, n)
    assert all(bin(int(x)).count("1") == n for x in s)
