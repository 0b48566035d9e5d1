"""Monotonic measures on {0,1}^E, decision trees and the OSSS variance bound.

Points of the cube are integer codes with bit e holding w_e.  Everything is
computed by exhaustive summation, so the sizes stay small (|E| <= 20 for
functions, <= 12 for the monotonicity scan).
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import CapacityExceeded, InvalidInput, InvalidParameter
from .rng import make_rng

MAX_BITS = 20
MAX_MONOTONIC_BITS = 12
TOL = 1e-12


@dataclass(frozen=True)
class CubeMeasure:
    m: int
    probs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.m <= MAX_BITS:
            raise InvalidParameter(f"cube dimension must lie in 1..{MAX_BITS}")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2**self.m,):
            raise InvalidParameter(f"expected {2**self.m} probabilities")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise InvalidParameter("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    def tensor(self) -> np.ndarray:
        """Probabilities as an array with axis e holding w_e."""
        return self.probs.reshape((2,) * self.m).transpose(tuple(range(self.m - 1, -1, -1)))


def uniform_measure(m: int) -> CubeMeasure:
    return CubeMeasure(m, np.full(2**m, 2.0**-m))


def product_measure(ps) -> CubeMeasure:
    ps = np.asarray(ps, dtype=float)
    codes = np.arange(2 ** len(ps))
    bits = (codes[:, None] >> np.arange(len(ps))) & 1
    return CubeMeasure(len(ps), np.prod(np.where(bits, ps, 1 - ps), axis=1))


def fk_cube_measure(graph, params, wired=()) -> CubeMeasure:
    from .fk import fk_exact

    m = fk_exact(graph, params, wired)
    return CubeMeasure(graph.n_edges, m.probs / m.probs.sum())


def point_bits(m: int) -> np.ndarray:
    codes = np.arange(2**m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(np.int8)


def is_monotonic(meas: CubeMeasure):
    """(True, None) or (False, witness) for P(w_e = 1 | w_F = xi) nondecreasing in xi.

    Comparisons run over covering pairs xi < xi + e_f; conditioning events of
    probability zero are skipped.
    """
    m = meas.m
    if m > MAX_MONOTONIC_BITS:
        raise CapacityExceeded(f"monotonicity scan over {m} bits", dimension=m)
    T = meas.tensor()
    for e in range(m):
        others = [f for f in range(m) if f != e]
        for r in range(1, len(others) + 1):
            for F in combinations(others, r):
                drop = tuple(a for a in range(m) if a != e and a not in F)
                marg = T.sum(axis=drop) if drop else T
                # axes of marg are sorted(F + (e,)); move e last
                axes = sorted(F + (e,))
                marg = np.moveaxis(marg, axes.index(e), -1)
                tot = marg.sum(axis=-1)
                with np.errstate(invalid="ignore", divide="ignore"):
                    cond = np.where(tot > 0, marg[..., 1] / np.where(tot > 0, tot, 1), np.nan)
                for k, f in enumerate(F):
                    lo = np.take(cond, 0, axis=k)
                    hi = np.take(cond, 1, axis=k)
                    bad = np.argwhere((lo - hi > TOL) & ~np.isnan(lo) & ~np.isnan(hi))
                    if len(bad):
                        idx = list(bad[0])
                        rest = [g for g in F if g != f]
                        xi = dict(zip(rest, (int(x) for x in idx)))
                        return False, {"edge": e, "flip": f, "given": xi,
                                       "low": float(lo[tuple(bad[0])]), "high": float(hi[tuple(bad[0])])}
    return True, None


def is_increasing(f_values, m: Optional[int] = None):
    """(True, None) or (False, (x, y)) with x < y covering and f(x) > f(y)."""
    f = np.asarray(f_values, dtype=float)
    m = int(np.log2(len(f))) if m is None else m
    if len(f) != 2**m or m > MAX_BITS:
        raise InvalidParameter("function table must have 2^m entries with m <= 20")
    codes = np.arange(2**m, dtype=np.int64)
    for i in range(m):
        low = codes[((codes >> i) & 1) == 0]
        bad = low[f[low] > f[low | (1 << i)] + TOL]
        if len(bad):
            x = int(bad[0])
            return False, (x, x | (1 << i))
    return True, None


@dataclass(frozen=True)
class DecisionTree:
    """Query ``e``; continue with ``zero``/``one`` after seeing 0/1.

    A missing child means: reveal the remaining coordinates in index order.
    """

    e: int
    zero: Optional["DecisionTree"] = None
    one: Optional["DecisionTree"] = None

    def validate(self, m: int, seen=frozenset()):
        if not 0 <= self.e < m:
            raise InvalidParameter(f"query {self.e} outside 0..{m - 1}")
        if self.e in seen:
            raise InvalidParameter(f"coordinate {self.e} queried twice on a path")
        for child in (self.zero, self.one):
            if child is not None:
                child.validate(m, seen | {self.e})


def _determined(f, m, revealed_mask, w):
    codes = np.arange(2**m, dtype=np.int64)
    sel = f[(codes & revealed_mask) == (w & revealed_mask)]
    return np.ptp(sel) == 0


def run_tree(tree: DecisionTree, f_values, w: int, m: int):
    """(f(w), revealed set) stopping as soon as f is constant on the revealed cylinder."""
    f = np.asarray(f_values, dtype=float)
    mask = 0
    revealed = []
    node = tree
    while True:
        e = node.e if node is not None else next(i for i in range(m) if not (mask >> i) & 1)
        revealed.append(e)
        mask |= 1 << e
        if _determined(f, m, mask, w) or len(revealed) == m:
            return float(f[w]), frozenset(revealed)
        if node is not None:
            node = node.one if (w >> e) & 1 else node.zero
            if node is not None and (mask >> node.e) & 1:
                raise InvalidParameter(f"coordinate {node.e} queried twice")


def revealment(meas: CubeMeasure, f_values, tree: DecisionTree) -> np.ndarray:
    """delta_e = P(e in revealed set) for every coordinate e."""
    m = meas.m
    delta = np.zeros(m)
    for w in range(2**m):
        if meas.probs[w] == 0:
            continue
        _, rev = run_tree(tree, f_values, w, m)
        for e in rev:
            delta[e] += meas.probs[w]
    return delta


@dataclass
class OsssResult:
    variance: float
    rhs: float
    slack: float
    revealment: np.ndarray
    covariances: np.ndarray


def osss_verify(meas: CubeMeasure, f_values, tree: DecisionTree, check: bool = True) -> OsssResult:
    """Var(f) <= sum_e P(e revealed) Cov(f, w_e), both sides by exact summation."""
    m = meas.m
    f = np.asarray(f_values, dtype=float)
    if len(f) != 2**m:
        raise InvalidParameter("function table size does not match the measure")
    if np.any(f < 0) or np.any(f > 1):
        raise InvalidParameter("functionals take values in [0, 1]")
    tree.validate(m)
    if check:
        ok, wit = is_monotonic(meas)
        if not ok:
            raise InvalidInput("measure is not monotonic", witness=wit)
        ok, wit = is_increasing(f, m)
        if not ok:
            raise InvalidInput("function is not increasing", witness=wit)
    P = meas.probs
    bits = point_bits(m)
    Ef = P @ f
    var = P @ (f - Ef) ** 2
    Ew = P @ bits
    cov = (P * f) @ bits - Ef * Ew
    delta = revealment(meas, f, tree)
    rhs = float(delta @ cov)
    return OsssResult(float(var), rhs, rhs - float(var), delta, cov)


# --- random instances ------------------------------------------------------------


def random_increasing_function(m: int, rng) -> np.ndarray:
    """f(x) = max over y <= x of iid uniforms r(y); increasing with values in [0, 1]."""
    f = rng.random(2**m)
    codes = np.arange(2**m, dtype=np.int64)
    for i in range(m):
        up = codes[((codes >> i) & 1) == 1]
        f[up] = np.maximum(f[up], f[up ^ (1 << i)])
    return f


def random_tree(m: int, rng, seen=frozenset(), p_child: float = 0.7) -> DecisionTree:
    free = [e for e in range(m) if e not in seen]
    e = int(rng.choice(free))
    kids = []
    for _ in range(2):
        if len(free) > 1 and rng.random() < p_child:
            kids.append(random_tree(m, rng, seen | {e}, p_child))
        else:
            kids.append(None)
    return DecisionTree(e, kids[0], kids[1])


def random_small_graph(m: int, rng):
    """A random simple graph with m edges on at most m + 1 vertices."""
    from .lattice import graph_from_edges

    n = int(rng.integers(2, m + 2))
    while len(list(combinations(range(n), 2))) < m:
        n += 1
    pairs = list(combinations(range(n), 2))
    pick = rng.choice(len(pairs), size=m, replace=False)
    return graph_from_edges([pairs[i] for i in sorted(pick)], sites=tuple(range(n)))


def random_instance(rng, max_edges: int = 4):
    from .fk import FKParams

    m = int(rng.integers(1, max_edges + 1))
    graph = random_small_graph(m, rng)
    q = float(rng.uniform(1, 4))
    p = rng.uniform(0.02, 0.98, size=m)
    meas = fk_cube_measure(graph, FKParams(q, p))
    return meas, random_increasing_function(m, rng), random_tree(m, rng)


def randomized_suite(instances: int = 1000, seed: int = 0, max_edges: int = 4):
    """Run osss_verify on random FK instances; returns (violations, min slack)."""
    rng = make_rng(seed)
    violations, min_slack = 0, np.inf
    for _ in range(instances):
        meas, f, tree = random_instance(rng, max_edges)
        res = osss_verify(meas, f, tree)
        min_slack = min(min_slack, res.slack)
        violations += res.slack < -TOL
    return violations, float(min_slack)
