"""Finite-volume Gibbs measures with one- and two-body energies.

``enumerate_measure`` is the exact oracle used by every Monte Carlo test in
the package: it lists all configurations (or a tensor quadrature grid for
real spins), weights them by exp(-beta H) times the reference mass, and
normalises in log space.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit
from scipy.special import logsumexp

from .errors import CapacityExceeded, InvalidParameter, NumericRange
from .rng import make_rng

MAX_DISCRETE_STATES = 2**24
MAX_QUADRATURE_POINTS = 10**7


@dataclass(frozen=True)
class Quadrature:
    """Real-line state space discretised by a composite Gauss-Legendre rule.

    ``weights`` are Lebesgue masses of the nodes, so they play the role of the
    reference measure.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_legendre(cls, n=32, lo=-5.0, hi=5.0, panels=1):
        x, w = np.polynomial.legendre.leggauss(n)
        edges = np.linspace(lo, hi, panels + 1)
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
            weights.append(0.5 * (b - a) * w)
        return cls(np.concatenate(nodes), np.concatenate(weights))

    def __len__(self):
        return len(self.nodes)


@dataclass
class EnergyModel:
    """H = sum_u single_site(u, s_u) + sum_{uv} pair((u, v), s_u, s_v).

    ``states`` is a list of discrete spin values (normalised counting
    reference measure) or a :class:`Quadrature`.  Both callables must accept
    numpy arrays of spin values.
    """

    states: object
    pair: Callable
    single_site: Optional[Callable] = None
    beta: float = 1.0

    @property
    def is_discrete(self) -> bool:
        return not isinstance(self.states, Quadrature)

    def values(self) -> np.ndarray:
        if self.is_discrete:
            return np.asarray(self.states, dtype=float)
        return np.asarray(self.states.nodes, dtype=float)

    def log_reference(self) -> np.ndarray:
        if self.is_discrete:
            return np.full(len(self.states), -math.log(len(self.states)))
        return np.log(self.states.weights)


def ising_model(beta: float) -> EnergyModel:
    return EnergyModel(states=(-1, 1), pair=lambda e, s, t: -s * t, beta=beta)


def potts_model(q: int, beta: float) -> EnergyModel:
    """Ferromagnetic Potts, H_uv = -1{s_u = s_v}, colours 1..q."""
    return EnergyModel(
        states=tuple(range(1, q + 1)),
        pair=lambda e, s, t: -(np.asarray(s) == np.asarray(t)).astype(float),
        beta=beta,
    )


@dataclass(frozen=True)
class BoundaryCondition:
    """free, plus, minus, or fixed(values).

    ``values`` is a scalar applied to every outside neighbour or a mapping
    outside-site -> spin.
    """

    kind: str = "free"
    values: object = None

    def __post_init__(self):
        if self.kind not in ("free", "plus", "minus", "fixed"):
            raise InvalidParameter(f"unknown boundary condition {self.kind!r}")
        if self.kind == "fixed" and self.values is None:
            raise InvalidParameter("fixed boundary condition needs values")

    def value_at(self, site):
        if self.kind == "plus":
            return 1
        if self.kind == "minus":
            return -1
        if isinstance(self.values, dict):
            return self.values[site]
        return self.values


FREE = BoundaryCondition("free")
PLUS = BoundaryCondition("plus")
MINUS = BoundaryCondition("minus")


def energy_tables(model: EnergyModel, graph, bc: BoundaryCondition = FREE):
    """Per-site table (V, S) and per-edge table (E, S, S) of energies.

    Boundary bonds with a fixed outside spin are folded into the site table;
    bonds with both ends outside never appear.
    """
    vals = model.values()
    S = len(vals)
    V = graph.n_sites
    site = np.zeros((V, S))
    if model.single_site is not None:
        for i, u in enumerate(graph.sites):
            site[i] = np.broadcast_to(model.single_site(u, vals), (S,))
    if bc.kind != "free":
        outside = getattr(graph, "boundary_pairs", lambda: ())()
        idx = graph.index
        for u, v in outside:
            sbar = bc.value_at(v)
            if model.is_discrete and sbar not in tuple(model.states):
                raise InvalidParameter(f"boundary value {sbar!r} not in state space")
            site[idx[u]] += np.broadcast_to(model.pair((u, v), vals, np.full(S, sbar, dtype=float)), (S,))
    E = graph.n_edges
    pair = np.zeros((E, S, S))
    a, b = np.meshgrid(vals, vals, indexing="ij")
    for k, e in enumerate(graph.edges):
        pair[k] = np.broadcast_to(model.pair(e, a, b), (S, S))
    return site, pair


@dataclass
class ExactMeasure:
    """Fully enumerated finite Gibbs measure.

    ``config`` holds state indices (n_states, V); ``spins`` the spin values.
    """

    graph: object
    values: np.ndarray
    config: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    _probs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def Z(self) -> float:
        if self.log_Z > 700:
            raise NumericRange(f"Z = exp({self.log_Z:.1f}) overflows; use log_Z")
        return math.exp(self.log_Z)

    @property
    def probs(self) -> np.ndarray:
        if self._probs is None:
            self._probs = np.exp(self.log_weights - self.log_Z)
        return self._probs

    @property
    def spins(self) -> np.ndarray:
        return self.values[self.config]

    def __len__(self):
        return len(self.log_weights)


def _all_configs(S, V):
    n = S**V
    if V == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    grids = np.indices((S,) * V, dtype=np.uint8).reshape(V, n)
    return np.ascontiguousarray(grids.T)


def enumerate_measure(model: EnergyModel, graph, bc: BoundaryCondition = FREE) -> ExactMeasure:
    """Exact Gibbs measure by listing every configuration."""
    vals = model.values()
    S, V = len(vals), graph.n_sites
    n_states = S**V
    limit = MAX_DISCRETE_STATES if model.is_discrete else MAX_QUADRATURE_POINTS
    if n_states > limit:
        raise CapacityExceeded(f"{S}^{V} = {n_states} states exceeds {limit}", dimension=n_states)
    site, pair = energy_tables(model, graph, bc)
    cfg = _all_configs(S, V)
    H = np.zeros(n_states)
    for i in range(V):
        H += site[i, cfg[:, i]]
    for k, (i, j) in enumerate(graph.edge_array):
        H += pair[k, cfg[:, i], cfg[:, j]]
    logref = model.log_reference()
    logw = -model.beta * H + logref[cfg].sum(axis=1)
    log_Z = float(logsumexp(logw))
    if not np.isfinite(log_Z):
        raise NumericRange("partition function is not finite")
    return ExactMeasure(graph=graph, values=vals, config=cfg, log_weights=logw, log_Z=log_Z)


def expectation(m: ExactMeasure, obs: Callable) -> float:
    return float(np.dot(m.probs, np.asarray(obs(m.spins), dtype=float)))


def spin(i: int) -> Callable:
    """Observable picking the spin at site index i."""
    return lambda s: s[:, i]


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]
        yield [[first]] + part


def joint_cumulant(source, obs) -> float:
    """Joint cumulant of up to four observables.

    ``source`` is an :class:`ExactMeasure` or an (n_samples, V) array of
    sampled configurations (equal weights).
    """
    obs = list(obs)
    if not 1 <= len(obs) <= 4:
        raise InvalidParameter("joint cumulants need between 1 and 4 observables")
    if isinstance(source, ExactMeasure):
        spins, w = source.spins, source.probs
    else:
        spins = np.asarray(source, dtype=float)
        w = np.full(len(spins), 1.0 / len(spins))
    X = [np.asarray(f(spins), dtype=float) for f in obs]
    moments = {}

    def moment(block):
        key = tuple(sorted(block))
        if key not in moments:
            prod = np.ones(len(w))
            for i in key:
                prod = prod * X[i]
            moments[key] = float(np.dot(w, prod))
        return moments[key]

    total = 0.0
    for part in set_partitions(range(len(X))):
        k = len(part)
        term = (-1) ** (k - 1) * math.factorial(k - 1)
        for block in part:
            term *= moment(block)
        total += term
    return total


# --- single-site Metropolis ----------------------------------------------------


@njit(cache=True)
def _metropolis_kernel(cfg, site, pair, nbr, nbr_edge, beta, uniforms, out):
    V = cfg.shape[0]
    S = site.shape[1]
    for t in range(uniforms.shape[0]):
        for m in range(V):
            i = min(int(uniforms[t, m, 2] * V), V - 1)
            old = cfg[i]
            r = int(uniforms[t, m, 0] * (S - 1))
            if r >= S - 1:
                r = S - 2
            new = r if r < old else r + 1
            dE = site[i, new] - site[i, old]
            for k in range(nbr.shape[1]):
                j = nbr[i, k]
                if j < 0:
                    break
                e = nbr_edge[i, k]
                if e >= 0:
                    dE += pair[e, new, cfg[j]] - pair[e, old, cfg[j]]
                else:  # i is the second endpoint
                    e = -e - 1
                    dE += pair[e, cfg[j], new] - pair[e, cfg[j], old]
            if dE <= 0.0 or uniforms[t, m, 1] < math.exp(-beta * dE):
                cfg[i] = new
        out[t] = cfg


def _edge_neighbor_tables(graph):
    nb = [[] for _ in graph.sites]
    for k, (a, b) in enumerate(graph.edge_array):
        nb[a].append((int(b), k))
        nb[b].append((int(a), -k - 1))
    width = max(1, max((len(x) for x in nb), default=1))
    nbr = -np.ones((len(nb), width), dtype=np.int64)
    nbe = -np.ones((len(nb), width), dtype=np.int64)
    for i, row in enumerate(nb):
        for k, (j, e) in enumerate(row):
            nbr[i, k], nbe[i, k] = j, e
    return nbr, nbe


def metropolis_chain(model: EnergyModel, graph, bc, init, sweeps: int, seed: int, stream: int = 0,
                     chunk: int = 65536) -> np.ndarray:
    """Random-site Metropolis; returns spin values after each sweep of V updates.

    Proposals are uniform over the other discrete states, so each single-site
    update is reversible with respect to the Gibbs weights.  Sites are drawn at
    random because a fixed scan order can be reducible for two-state spins.
    """
    if not model.is_discrete:
        raise InvalidParameter("metropolis_chain needs a discrete state space")
    if sweeps < 1:
        raise InvalidParameter("sweeps must be >= 1")
    vals = list(model.states)
    try:
        cfg = np.array([vals.index(x) for x in init], dtype=np.int64)
    except ValueError as exc:
        raise InvalidParameter(f"initial configuration outside state space: {exc}") from None
    if len(cfg) != graph.n_sites:
        raise InvalidParameter("initial configuration has the wrong length")
    site, pair = energy_tables(model, graph, bc)
    nbr, nbe = _edge_neighbor_tables(graph)
    if len(vals) < 2:
        return np.tile(np.asarray(init, dtype=float), (sweeps, 1))
    rng = make_rng(seed, stream)
    out = np.empty((sweeps, graph.n_sites), dtype=np.int64)
    done = 0
    while done < sweeps:
        n = min(chunk, sweeps - done)
        u = rng.random((n, graph.n_sites, 3))
        _metropolis_kernel(cfg, site, pair, nbr, nbe, float(model.beta), u, out[done : done + n])
        done += n
    return model.values()[out]


def metropolis_transition_matrix(weights, n_sites: int, n_values: int):
    """Random-site Metropolis kernel over all n_values**n_sites states.

    ``weights[k]`` is the (unnormalised) weight of the state whose base-
    ``n_values`` digits (site 0 most significant) are its spins.  Works with
    any number type supporting * / and comparison, e.g. ``Fraction``.
    """
    n = n_values**n_sites
    one = weights[0] / weights[0]
    P = [[0 * one for _ in range(n)] for _ in range(n)]
    for s, digits in enumerate(itertools.product(range(n_values), repeat=n_sites)):
        stay = one
        for i in range(n_sites):
            for v in range(n_values):
                if v == digits[i]:
                    continue
                nd = list(digits)
                nd[i] = v
                t = 0
                for d in nd:
                    t = t * n_values + d
                ratio = weights[t] / weights[s]
                acc = ratio if ratio < one else one
                prob = acc / (n_sites * (n_values - 1))
                P[s][t] += prob
                stay -= prob
        P[s][s] += stay
    return P
