"""Random-cluster (FK) model with real cluster weight q >= 1.

Configurations are boolean arrays aligned with ``graph.edges``.  Weights are
prod p_e^w_e (1 - p_e)^(1 - w_e) q^k(w) with isolated vertices counted as
clusters; the wired variant merges a given boundary vertex set into a
single cluster before counting.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import CapacityExceeded, InvalidParameter
from .frontier import frontier_sum
from .gibbs import ExactMeasure
from .percolation import UnionFind, ball_graph
from .rng import make_rng

MAX_FK_EDGES = 22


@dataclass(frozen=True)
class FKParams:
    q: float
    p: object  # scalar or per-edge sequence

    def __post_init__(self):
        if not self.q >= 1:
            raise InvalidParameter(f"cluster weight q must be >= 1, got {self.q}")
        arr = np.asarray(self.p, dtype=float)
        if np.any(arr < 0) or np.any(arr > 1) or np.any(~np.isfinite(arr)):
            raise InvalidParameter("edge probabilities must lie in [0, 1]")

    def edge_probs(self, n_edges: int) -> np.ndarray:
        arr = np.asarray(self.p, dtype=float)
        if arr.ndim == 0:
            return np.full(n_edges, float(arr))
        if arr.shape != (n_edges,):
            raise InvalidParameter(f"expected {n_edges} edge probabilities, got {arr.shape}")
        return arr


def potts_edge_probability(beta: float) -> float:
    """p = 1 - e^-beta for H = -1{s_u = s_v}."""
    return 1.0 - math.exp(-beta)


def ising_edge_probability(beta: float) -> float:
    """p = 1 - e^-2beta for H = -s_u s_v."""
    return 1.0 - math.exp(-2.0 * beta)


def self_dual_point(q: float) -> float:
    """Solution of p / (1 - p) = sqrt(q)."""
    if q < 1:
        raise InvalidParameter("q must be >= 1")
    s = math.sqrt(q)
    return s / (1.0 + s)


def _bits(cfg):
    return np.asarray(getattr(cfg, "bits", cfg), dtype=bool)


def cluster_labels(graph, cfg, wired=()) -> np.ndarray:
    """Component label per vertex of the open subgraph (wired vertices merged)."""
    bits = _bits(cfg)
    uf = UnionFind(graph.n_sites)
    for (a, b), on in zip(graph.edge_array, bits):
        if on:
            uf.union(int(a), int(b))
    w = [graph.index[v] for v in wired]
    for a, b in zip(w, w[1:]):
        uf.union(a, b)
    return np.array([uf.find(i) for i in range(graph.n_sites)])


def cluster_count(graph, cfg, wired=()) -> int:
    bits = _bits(cfg)
    if len(bits) != graph.n_edges:
        raise InvalidParameter("configuration length does not match the edge count")
    return len(set(cluster_labels(graph, bits, wired).tolist()))


def log_fk_weight(graph, cfg, params: FKParams, wired=()) -> float:
    bits = _bits(cfg)
    p = params.edge_probs(graph.n_edges)
    with np.errstate(divide="ignore"):
        lw = np.where(bits, np.log(p), np.log1p(-p)).sum()
    return float(lw + cluster_count(graph, bits, wired) * math.log(params.q))


def fk_weight(graph, cfg, params: FKParams, wired=()) -> float:
    return math.exp(log_fk_weight(graph, cfg, params, wired))


def batch_cluster_counts(n_vertices, edges, bits, wired=()) -> np.ndarray:
    """k(w) for every row of ``bits`` via one block-diagonal component labelling."""
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    R = bits.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    extra = [(a, b) for a, b in zip(wired, wired[1:])]
    rep, k = np.nonzero(bits)
    rows = list(rep * n_vertices + edges[k, 0])
    cols = list(rep * n_vertices + edges[k, 1])
    if extra:
        off = np.arange(R) * n_vertices
        for a, b in extra:
            rows.extend(off + a)
            cols.extend(off + b)
    n = R * n_vertices
    g = coo_matrix((np.ones(len(rows), dtype=np.int8), (np.asarray(rows), np.asarray(cols))), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    labels = labels.reshape(R, n_vertices)
    s = np.sort(labels, axis=1)
    return 1 + (np.diff(s, axis=1) != 0).sum(axis=1)


def all_edge_configs(n_edges: int) -> np.ndarray:
    codes = np.arange(2**n_edges, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n_edges)) & 1).astype(np.uint8)


def fk_exact(graph, params: FKParams, wired=()) -> ExactMeasure:
    """Every configuration with its FK weight; spins are the 0/1 edge states."""
    E = graph.n_edges
    if E > MAX_FK_EDGES:
        raise CapacityExceeded(f"2^{E} configurations", dimension=E)
    cfg = all_edge_configs(E)
    p = params.edge_probs(E)
    w_idx = [graph.index[v] for v in wired]
    k = np.concatenate([batch_cluster_counts(graph.n_sites, graph.edge_array, cfg[i:i + 65536], w_idx)
                        for i in range(0, len(cfg), 65536)])
    with np.errstate(divide="ignore"):
        lo, lc = np.log(p), np.log1p(-p)
    logw = cfg @ lo + (1 - cfg) @ lc + k * math.log(params.q)
    logw = np.where(np.isnan(logw), -np.inf, logw)
    log_Z = float(logsumexp(logw))
    return ExactMeasure(graph=graph, values=np.array([0.0, 1.0]), config=cfg, log_weights=logw, log_Z=log_Z)


def connection_probability(m: ExactMeasure, x, y) -> float:
    """P(x <-> y) under an exact FK measure (x, y vertex indices)."""
    g = m.graph
    hit = np.zeros(len(m.config), dtype=bool)
    step = 65536
    from .percolation import batch_source_target

    for i in range(0, len(m.config), step):
        hit[i:i + step] = batch_source_target(g.n_sites, g.edge_array, m.config[i:i + step], [x], [y])
    return float(np.dot(m.probs, hit))


def conditional_open_probability(p: float, q: float, connected: bool) -> float:
    return p if connected else p / (p + q * (1.0 - p))


def _csr(graph):
    V = graph.n_sites
    nb = [[] for _ in range(V)]
    for k, (a, b) in enumerate(graph.edge_array):
        nb[a].append((int(b), k))
        nb[b].append((int(a), k))
    ptr = np.zeros(V + 1, dtype=np.int64)
    for i in range(V):
        ptr[i + 1] = ptr[i] + len(nb[i])
    adj = np.array([j for row in nb for j, _ in row], dtype=np.int64)
    eid = np.array([k for row in nb for _, k in row], dtype=np.int64)
    return ptr, adj, eid


@njit(cache=True)
def _connected_without(bits, ptr, adj, eid, a, b, skip, seen, stack):
    if a == b:
        return True
    seen[:] = False
    top = 0
    stack[top] = a
    top += 1
    seen[a] = True
    found = False
    while top > 0 and not found:
        top -= 1
        i = stack[top]
        for k in range(ptr[i], ptr[i + 1]):
            e = eid[k]
            if e == skip or not bits[e]:
                continue
            j = adj[k]
            if not seen[j]:
                if j == b:
                    found = True
                    break
                seen[j] = True
                stack[top] = j
                top += 1
    return found


@njit(cache=True)
def _reaches_wired(bits, ptr, adj, eid, a, skip, wired_mask, seen, stack):
    if wired_mask[a]:
        return True
    seen[:] = False
    top = 0
    stack[top] = a
    top += 1
    seen[a] = True
    while top > 0:
        top -= 1
        i = stack[top]
        for k in range(ptr[i], ptr[i + 1]):
            e = eid[k]
            if e == skip or not bits[e]:
                continue
            j = adj[k]
            if not seen[j]:
                if wired_mask[j]:
                    return True
                seen[j] = True
                stack[top] = j
                top += 1
    return False


@njit(cache=True)
def _heat_bath_sweeps(bits, ends, p, q, ptr, adj, eid, uniforms, wired_mask):
    V = ptr.shape[0] - 1
    seen = np.zeros(V, dtype=np.bool_)
    stack = np.empty(V, dtype=np.int64)
    any_wired = wired_mask.any()
    for t in range(uniforms.shape[0]):
        for e in range(ends.shape[0]):
            a, b = ends[e, 0], ends[e, 1]
            conn = _connected_without(bits, ptr, adj, eid, a, b, e, seen, stack)
            if not conn and any_wired:
                # joined through the wired boundary
                conn = (_reaches_wired(bits, ptr, adj, eid, a, e, wired_mask, seen, stack)
                        and _reaches_wired(bits, ptr, adj, eid, b, e, wired_mask, seen, stack))
            pe = p[e]
            prob = pe if conn else pe / (pe + q * (1.0 - pe))
            bits[e] = uniforms[t, e] < prob


def heat_bath_step(graph, cfg, e: int, params: FKParams, rng, wired=()):
    """Resample edge e from its exact conditional given the others (returns a new array)."""
    bits = _bits(cfg).copy()
    a, b = graph.edge_array[e]
    ptr, adj, eid = _csr(graph)
    V = graph.n_sites
    conn = _connected_without(bits, ptr, adj, eid, int(a), int(b), e, np.zeros(V, np.bool_), np.empty(V, np.int64))
    if not conn and wired:
        others = bits.copy()
        others[e] = False
        lab = cluster_labels(graph, others, wired)
        conn = lab[a] == lab[b]
    p = params.edge_probs(graph.n_edges)[e]
    bits[e] = rng.random() < conditional_open_probability(p, params.q, conn)
    return bits


def fk_chain(graph, params: FKParams, sweeps: int, seed: int, init=None, wired=(), stream: int = 0,
             record: bool = True, chunk: int = 4096):
    """Systematic-scan heat-bath chain; returns (sweeps, E) bool array (or the final state)."""
    E = graph.n_edges
    bits = np.zeros(E, dtype=np.bool_) if init is None else _bits(init).copy()
    p = params.edge_probs(E)
    ptr, adj, eid = _csr(graph)
    mask = np.zeros(graph.n_sites, dtype=np.bool_)
    for v in wired:
        mask[graph.index[v]] = True
    rng = make_rng(seed, stream)
    out = np.empty((sweeps, E), dtype=np.bool_) if record else None
    done = 0
    while done < sweeps:
        n = min(chunk, sweeps - done)
        u = rng.random((n, E))
        if record:
            for t in range(n):
                _heat_bath_sweeps(bits, graph.edge_array, p, float(params.q), ptr, adj, eid, u[t:t + 1], mask)
                out[done + t] = bits
        else:
            _heat_bath_sweeps(bits, graph.edge_array, p, float(params.q), ptr, adj, eid, u, mask)
        done += n
    return out if record else bits


def edwards_sokal_color(graph, cfg, q_int, rng) -> np.ndarray:
    """One independent uniform colour in 1..q per open cluster."""
    if not float(q_int).is_integer() or q_int < 2:
        raise InvalidParameter(f"colouring needs an integer q >= 2, got {q_int}")
    labels = cluster_labels(graph, cfg)
    _, inv = np.unique(labels, return_inverse=True)
    colours = rng.integers(1, int(q_int) + 1, size=inv.max() + 1)
    return colours[inv]


def swendsen_wang(graph, q_int: int, p, sweeps: int, seed: int, stream: int = 0, colours=None,
                  burn_in: int = 0, thin: int = 1):
    """Potts/FK joint chain; yields (bits, colours) every ``thin`` sweeps after burn-in.

    The FK marginal is the random-cluster measure with weight q_int and edge
    probabilities ``p``.
    """
    if not float(q_int).is_integer() or q_int < 2:
        raise InvalidParameter("Swendsen-Wang needs an integer q >= 2")
    rng = make_rng(seed, stream)
    E, V = graph.n_edges, graph.n_sites
    pe = FKParams(q_int, p).edge_probs(E)
    a, b = graph.edge_array[:, 0], graph.edge_array[:, 1]
    col = rng.integers(1, q_int + 1, size=V) if colours is None else np.asarray(colours).copy()
    for t in range(burn_in + sweeps * thin):
        bits = (col[a] == col[b]) & (rng.random(E) < pe)
        g = coo_matrix((np.ones(int(bits.sum()), dtype=np.int8), (a[bits], b[bits])), shape=(V, V))
        n_comp, lab = connected_components(g, directed=False)
        col = rng.integers(1, q_int + 1, size=n_comp)[lab]
        k = t + 1 - burn_in
        if k > 0 and k % thin == 0:
            yield bits, col


def fk_theta(n: int, params: FKParams, mode: str = "exact", wired: bool = False, sweeps: int = 20000,
             seed: int = 0, burn_in: int = 1000):
    """P(0 <-> boundary of the radius-n ball) under the FK measure on that ball."""
    sites, edges, origin, boundary, order = ball_graph(n)
    if mode == "exact":
        if not np.isscalar(params.p) and np.ndim(params.p) != 0:
            p = list(params.edge_probs(len(edges)))
        else:
            p = float(params.p)
        res = frontier_sum(len(sites), edges, p=p, q=params.q, sources=[origin], targets=boundary,
                           wired=wired, order=order)
        return res.probability
    if mode != "mc":
        raise InvalidParameter(f"unknown mode {mode!r}")
    from .lattice import graph_from_edges
    from .percolation import batch_source_target

    g = graph_from_edges(edges, sites=range(len(sites)))
    wired_sites = boundary if wired else ()
    chain = fk_chain(g, params, sweeps + burn_in, seed, wired=wired_sites)[burn_in:]
    hits = batch_source_target(len(sites), edges, chain, [origin], boundary)
    return float(hits.mean())
