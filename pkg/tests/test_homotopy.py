import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critlab.errors import InvalidParameter
from critlab.homotopy import (DEFAULT_ETAS, JITTER, PunctureGrid, canonical_word, crossings, cyclic_reduce,
                              encloses_count, ensemble_distance, family_match, family_words, free_reduce,
                              homotopy_word, least_rotation, match_rates, relevant_loops, rotate_family,
                              rotate_points, winding_numbers)


def circle(cx, cy, r, n=200, clockwise=False):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    if clockwise:
        t = -t
    pts = np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
    return np.vstack([pts, pts[:1]])


def atan2_winding(loop, p):
    d = loop - p
    ang = np.arctan2(d[:, 1], d[:, 0])
    step = np.diff(ang)
    step = (step + np.pi) % (2 * np.pi) - np.pi
    return int(round(step.sum() / (2 * np.pi)))


GRID = PunctureGrid(0.5, half_width=1.0)  # 5 x 5 punctures on [-1, 1]^2


def test_grid_shape():
    assert len(GRID) == 25
    assert np.allclose(GRID.points[0], (-1 + JITTER[0], -1 + JITTER[1]))
    assert PunctureGrid(1.0).points.shape == (9, 2)
    assert len(PunctureGrid(0.5)) == 81  # half width defaults to 1 / eta
    with pytest.raises(InvalidParameter):
        PunctureGrid(0.0)


def test_single_puncture_loops():
    target = 12  # centre puncture
    ccw = circle(*GRID.points[target], 0.2)
    w = winding_numbers(ccw, GRID)
    assert w[target] == 1 and np.count_nonzero(w) == 1
    assert homotopy_word(ccw, GRID) == ((target, 1),)
    cw = circle(*GRID.points[target], 0.2, clockwise=True)
    assert homotopy_word(cw, GRID) == ((target, -1),)


def test_relevance():
    small = circle(0, 0, 0.2)
    pair = circle(0.25, 0, 0.45)
    huge = circle(0, 0, 3.0)
    assert encloses_count(pair, GRID) == 2
    assert encloses_count(huge, GRID) == 25
    assert relevant_loops([small, pair, huge], GRID) == [pair]


@given(st.integers(0, 2**31), st.integers(3, 12))
def test_winding_matches_atan2(seed, k):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 2 * np.pi, k))
    r = rng.uniform(0.2, 1.6, k)
    c = rng.uniform(-0.4, 0.4, 2)
    loop = np.column_stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)])
    loop = np.vstack([loop, loop[:1]])
    w = winding_numbers(loop, GRID)
    assert [atan2_winding(loop, p) for p in GRID.points] == w.tolist()


def test_commutator_loop_has_zero_winding_but_nontrivial_word():
    # a - b - a^-1 - b^-1 around two punctures: path traced as a polyline
    a, b = GRID.points[11], GRID.points[13]
    ra, rb = circle(*a, 0.15, 60), circle(*b, 0.15, 60)
    base = np.array([0.0 + JITTER[0], 0.3])
    def lasso(c, r, reverse):
        ring = r[::-1] if reverse else r
        return np.vstack([base, ring, base])
    path = np.vstack([lasso(a, ra, False), lasso(b, rb, False), lasso(a, ra, True), lasso(b, rb, True)])
    w = winding_numbers(path, GRID)
    assert np.all(w == 0)
    word = homotopy_word(path, GRID)
    # lasso tails add conjugating letters; the class stays nontrivial
    assert len(word) >= 4
    assert {i for i, _ in word} >= {11, 13}


def test_free_and_cyclic_reduction():
    assert free_reduce([(1, 1), (2, 1), (2, -1), (1, -1)]) == []
    assert cyclic_reduce([(1, 1), (2, 1), (1, -1)]) == [(2, 1)]


@given(st.lists(st.integers(0, 3), min_size=1, max_size=12))
def test_least_rotation_bruteforce(seq):
    k = least_rotation(seq)
    rots = [seq[i:] + seq[:i] for i in range(len(seq))]
    assert seq[k:] + seq[:k] == min(rots)


@given(st.lists(st.tuples(st.integers(0, 4), st.sampled_from([1, -1])), min_size=1, max_size=10),
       st.integers(0, 9))
def test_canonical_word_cyclic_invariant(word, shift):
    shift %= len(word)
    rot = word[shift:] + word[:shift]
    w1 = canonical_word([i for i, _ in word], [s for _, s in word])
    w2 = canonical_word([i for i, _ in rot], [s for _, s in rot])
    assert w1 == w2


@given(st.floats(-math.pi, math.pi))
def test_rotation_equivariance(theta):
    loop = circle(0.3, -0.1, 0.55, 150)
    g = PunctureGrid(0.5, half_width=1.0)
    rl = rotate_points(loop, theta)
    rg = g.rotated(theta)
    assert np.array_equal(winding_numbers(loop, g), winding_numbers(rl, rg))
    assert homotopy_word(loop, g) == homotopy_word(rl, rg)


def test_family_match_and_distance():
    F = [circle(0.25, 0, 0.45), circle(0, 0, 0.2)]
    G = [circle(0.25, 0.02, 0.46)]
    assert family_match(F, G, GRID)
    assert family_words([], GRID) == frozenset()
    d, costs = ensemble_distance([F, F], [F, F], return_costs=True)
    assert d == min(DEFAULT_ETAS) and np.all(costs == min(DEFAULT_ETAS))
    # a perturbed copy matches on the coarse grid at least
    assert ensemble_distance([F], [G]) <= 0.5
    H = [circle(-0.25, 0, 0.45)]
    assert ensemble_distance([F], [H]) > min(DEFAULT_ETAS)
    assert match_rates([F], [G])[0.5] == 1.0
    with pytest.raises(InvalidParameter):
        ensemble_distance([F], [])


def test_rotate_family():
    F = [circle(0.2, 0.0, 0.3)]
    R = rotate_family(F, math.pi / 2)
    assert np.allclose(R[0][0], rotate_points(F[0][:1], math.pi / 2)[0])


def test_crossings_signs_sum_to_winding():
    loop = circle(0, 0, 0.8)
    idx, sign = crossings(loop, GRID)
    assert np.array_equal(np.bincount(idx, weights=sign, minlength=25), winding_numbers(loop, GRID))
