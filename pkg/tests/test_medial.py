import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critlab.errors import InvalidParameter
from critlab.lattice import build_box
from critlab.medial import (MedialRegion, cluster_counts, expected_loop_count, is_simple_closed,
                            loop_representation, loops_from_region, primal_square_grid, region_edges)
from critlab.percolation import sample_config


def test_rejects_odd_site():
    with pytest.raises(InvalidParameter):
        MedialRegion(((0, 1),))


def test_single_diamond():
    r = MedialRegion(((0, 0),))
    # open: one primal cluster and the wired dual; closed: two primal singletons
    assert len(loops_from_region(r, [True])) == 1
    assert len(loops_from_region(r, [False])) == 2


@given(st.integers(1, 3), st.integers(0, 2**31))
def test_loop_count_identity_box(N, seed):
    r = MedialRegion(build_box(N, even_only=True).sites)
    bits = np.random.default_rng(seed).random(len(r.sites)) < 0.5
    loops = loops_from_region(r, bits)
    assert len(loops) == expected_loop_count(r, bits)
    assert all(is_simple_closed(lp, 1e-9) for lp in loops)


@given(st.integers(2, 5), st.integers(0, 2**31))
def test_loop_count_identity_grid(M, seed):
    r = primal_square_grid(M)
    bits = np.random.default_rng(seed).random(len(r.sites)) < 0.5
    assert len(loops_from_region(r, bits)) == expected_loop_count(r, bits)


def test_extreme_configs():
    r = primal_square_grid(4)
    k, kd = cluster_counts(r, np.ones(len(r.sites), bool))
    assert (k, kd) == (1, 10)  # nine interior faces plus the wired boundary
    assert len(loops_from_region(r, np.ones(len(r.sites), bool))) == 10
    prim, edges = region_edges(r)
    assert len(prim) == 16 and len(edges) == 24
    k, kd = cluster_counts(r, np.zeros(len(r.sites), bool))
    assert k == 16


def test_loop_representation_from_config():
    cfg = sample_config(build_box(3, even_only=True), 0.5, 7)
    loops = loop_representation(cfg)
    assert len(loops) == expected_loop_count(MedialRegion(cfg.lattice.sites), cfg.bits)
    with pytest.raises(InvalidParameter):
        loop_representation(sample_config(build_box(3), 0.5, 7))
