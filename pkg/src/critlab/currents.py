"""Random-current representation of Ising correlations.

A current assigns a nonnegative integer to every edge; its weight is
prod_e beta^n_e / n_e! and its sources are the vertices of odd total
current.  Correlations are ratios of current sums with prescribed sources.
Two evaluators are provided: a parity-factorised sum (each edge contributes
its truncated even or odd exponential series) and a literal enumeration of
all currents up to the truncation level, used as an oracle in tests.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceeded, InvalidParameter
from .gibbs import ExactMeasure, joint_cumulant, spin
from .ising import two_point

MAX_PARITY_EDGES = 22
MAX_CURRENTS = 10**8
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class Current:
    graph: object
    n: tuple

    def __post_init__(self):
        n = tuple(int(x) for x in self.n)
        if len(n) != self.graph.n_edges:
            raise InvalidParameter(f"current has {len(n)} entries for {self.graph.n_edges} edges")
        if any(x < 0 for x in n):
            raise InvalidParameter("currents are nonnegative")
        object.__setattr__(self, "n", n)


def current_weight(c: Current, beta: float) -> float:
    if beta < 0:
        raise InvalidParameter("beta must be >= 0")
    return math.prod(beta**k / math.factorial(k) for k in c.n)


def current_sources(c: Current) -> frozenset:
    deg = [0] * c.graph.n_sites
    for (a, b), k in zip(c.graph.edge_array, c.n):
        deg[a] += k
        deg[b] += k
    return frozenset(c.graph.sites[i] for i, d in enumerate(deg) if d % 2)


@dataclass
class CurrentEstimate:
    value: float
    bound: float  # rigorous truncation bound plus roundoff allowance
    n_max: int


def truncated_series(beta: float, n_max: int):
    """(sum of even terms, sum of odd terms) of exp(beta) up to order n_max."""
    even = odd = 0.0
    term = 1.0
    for k in range(n_max + 1):
        if k:
            term *= beta / k
        if k % 2:
            odd += term
        else:
            even += term
    return even, odd


def truncation_bound(beta: float, n_max: int, n_edges: int) -> float:
    """Bound on |truncated ratio - exact ratio| for correlations in [0, 1].

    Each edge series loses at most a fraction r of its value, with
    r = e^beta beta^(n+1) / ((n+1)! min(1, beta)); numerator and denominator
    are then both within a factor (1 - r)^E of the truth.
    """
    if beta == 0 or n_edges == 0:
        return 0.0
    r = math.exp(beta) * beta ** (n_max + 1) / math.factorial(n_max + 1) / min(1.0, beta)
    if r >= 1:
        return math.inf
    return (1 - r) ** (-n_edges) - 1


def _source_mask(graph, A):
    idx = graph.index
    A = set(A)
    if len(A) % 2:
        raise InvalidParameter("source set must have even size")
    missing = [a for a in A if a not in idx]
    if missing:
        raise InvalidParameter(f"sources {missing} not in graph")
    mask = 0
    for a in A:
        mask |= 1 << idx[a]
    return mask


def _parity_boundaries(graph, codes):
    """Bitmask of odd-degree vertices for each edge-parity code."""
    out = np.zeros(len(codes), dtype=np.int64)
    for k, (a, b) in enumerate(graph.edge_array):
        on = (codes >> k) & 1
        out ^= on * ((1 << int(a)) | (1 << int(b)))
    return out


def current_correlation(graph, beta: float, A, n_max: int = 20) -> CurrentEstimate:
    """E[prod_{a in A} sigma_a] = Z(A) / Z(empty) from truncated current sums."""
    if beta < 0:
        raise InvalidParameter("beta must be >= 0")
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    E = graph.n_edges
    if E > MAX_PARITY_EDGES:
        raise CapacityExceeded(f"2^{E} parity patterns", dimension=E)
    if graph.n_sites > 62:
        raise CapacityExceeded("too many vertices for bitmask boundaries", dimension=graph.n_sites)
    target = _source_mask(graph, A)
    even, odd = truncated_series(beta, n_max)
    codes = np.arange(2**E, dtype=np.int64)
    bnd = _parity_boundaries(graph, codes)
    n_odd = np.zeros(len(codes), dtype=np.int64)
    for k in range(E):
        n_odd += (codes >> k) & 1
    if odd == 0.0:
        terms = np.where(n_odd == 0, even**E, 0.0)
    else:
        log_terms = n_odd * math.log(odd) + (E - n_odd) * math.log(even)
        terms = np.exp(log_terms - E * math.log(even))
    num = terms[bnd == target].sum()
    den = terms[bnd == 0].sum()
    return CurrentEstimate(float(num / den), truncation_bound(beta, n_max, E) + ROUNDOFF, n_max)


def enumerate_current_sums(graph, beta: float, A, n_max: int, chunk: int = 1 << 18):
    """(Z(A), Z(empty)) by listing every current with entries <= n_max."""
    E = graph.n_edges
    total = (n_max + 1) ** E
    if total > MAX_CURRENTS:
        raise CapacityExceeded(f"{total} currents", dimension=total)
    target = _source_mask(graph, A)
    logw1 = np.array([k * math.log(beta) - math.lgamma(k + 1) if beta > 0 else (0.0 if k == 0 else -np.inf)
                      for k in range(n_max + 1)])
    incid = [(1 << int(a)) | (1 << int(b)) for a, b in graph.edge_array]
    num = den = 0.0
    for start in range(0, total, chunk):
        code = np.arange(start, min(total, start + chunk), dtype=np.int64)
        logw = np.zeros(len(code))
        bnd = np.zeros(len(code), dtype=np.int64)
        rest = code.copy()
        for k in range(E):
            n_k = rest % (n_max + 1)
            rest //= n_max + 1
            logw += logw1[n_k]
            bnd ^= (n_k & 1) * incid[k]
        w = np.exp(logw)
        num += w[bnd == target].sum()
        den += w[bnd == 0].sum()
    return float(num), float(den)


def tree_bound_check(m: ExactMeasure, x1, x2, x3, x4):
    """(|kappa_4|, 2 sum_y prod_i C(x_i, y), slack) for site indices x1..x4."""
    xs = (x1, x2, x3, x4)
    lhs = abs(joint_cumulant(m, [spin(i) for i in xs]))
    V = m.graph.n_sites
    C = np.empty((4, V))
    for k, x in enumerate(xs):
        for y in range(V):
            C[k, y] = 1.0 if x == y else two_point(m, x, y)
    rhs = 2.0 * float(np.sum(np.prod(C, axis=0)))
    return lhs, rhs, rhs - lhs
