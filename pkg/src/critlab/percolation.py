"""Bernoulli bond percolation on the even-sublattice construction.

Every even site u carries one primal edge e_u (on Z_even x Z_odd) and one
dual edge e_u* (on Z_odd x Z_even); the dual configuration opens e_u*
exactly when e_u is closed.  Crossing events, the connection probability
theta_n and its pivotal (Russo) derivative are provided both exactly and by
Monte Carlo.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapacityExceeded, InvalidParameter
from .frontier import frontier_sum
from .lattice import Lattice, build_box, edge_pair, site_key
from .rng import make_rng

MAX_BRUTE_FORCE_EDGES = 24
MAX_FRONTIER_EDGES = 400


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True

    def connected(self, a, b):
        return self.find(a) == self.find(b)


@dataclass(frozen=True)
class EdgeConfig:
    """Open/closed flags for the primal (or, with ``dual``, the dual) edges."""

    bits: np.ndarray
    lattice: Lattice
    dual: bool = False

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        object.__setattr__(self, "bits", bits)
        if bits.shape != (self.lattice.n_edges,):
            raise InvalidParameter(f"expected {self.lattice.n_edges} bits, got {bits.shape}")

    @property
    def edges(self):
        return self.lattice.dual_edges if self.dual else self.lattice.edges

    def open_edges(self):
        return [e for e, b in zip(self.edges, self.bits) if b]

    def n_open(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        return (
            isinstance(other, EdgeConfig)
            and self.dual == other.dual
            and self.lattice == other.lattice
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


@dataclass(frozen=True)
class CrossingSpec:
    """Which crossing to test.

    ``direction`` is ``"lr"`` (left to right) or ``"tb"`` (top to bottom).
    ``polygon`` (vertices in [-1, 1]^2) restricts to the edges whose midpoints
    lie in N * polygon; ``None`` means the whole box.  ``band`` widens the
    boundary sets to vertices within band * N of the extreme coordinate.
    """

    direction: str = "lr"
    polygon: Optional[tuple] = None
    band: float = 0.0

    def __post_init__(self):
        if self.direction not in ("lr", "tb"):
            raise InvalidParameter(f"unknown crossing direction {self.direction!r}")
        if self.polygon is not None:
            poly = np.asarray(self.polygon, dtype=float)
            if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
                raise InvalidParameter("polygon needs at least three 2D vertices")
            area = 0.5 * np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
            if abs(area) < 1e-12:
                raise InvalidParameter("degenerate polygon")


LEFT_RIGHT = CrossingSpec("lr")
TOP_BOTTOM = CrossingSpec("tb")


def points_in_polygon(points, polygon) -> np.ndarray:
    """Even-odd ray casting; points on the boundary count as inside."""
    pts = np.asarray(points, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    cond = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    inside = np.logical_and(cond, x < xcross).sum(axis=1) % 2 == 1
    # boundary points
    cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
    on_seg = (
        (np.abs(cross) < 1e-12)
        & (np.minimum(x0, x1) - 1e-12 <= x) & (x <= np.maximum(x0, x1) + 1e-12)
        & (np.minimum(y0, y1) - 1e-12 <= y) & (y <= np.maximum(y0, y1) + 1e-12)
    )
    return inside | on_seg.any(axis=1)


def crossing_problem(lat: Lattice, spec: CrossingSpec = LEFT_RIGHT, dual: bool = False):
    """Vertices, edge index pairs, edge mask and boundary vertex sets of a crossing.

    Returns ``(vertices, edges, edge_mask, sources, targets)`` where
    ``edge_mask`` selects which of the lattice's edges take part.
    """
    if not lat.even:
        raise InvalidParameter("crossings are defined on the even-sublattice construction")
    all_edges = lat.dual_edges if dual else lat.edges
    mask = np.ones(len(all_edges), dtype=bool)
    if spec.polygon is not None:
        mids = np.array(lat.sites, dtype=float) / lat.N
        mask = points_in_polygon(mids, spec.polygon)
    used = [e for e, m in zip(all_edges, mask) if m]
    verts = sorted({v for e in used for v in e}, key=site_key)
    if not verts:
        raise InvalidParameter("crossing region contains no edges")
    idx = {v: i for i, v in enumerate(verts)}
    edges = [(idx[a], idx[b]) for a, b in used]
    axis = 0 if spec.direction == "lr" else 1
    coords = np.array([v[axis] for v in verts])
    lo, hi = coords.min(), coords.max()
    width = spec.band * lat.N
    low = [i for i, c in enumerate(coords) if c <= lo + width]
    high = [i for i, c in enumerate(coords) if c >= hi - width]
    if not low or not high or lo == hi:
        raise InvalidParameter("empty boundary vertex set")
    # left/bottom is the source side
    return verts, edges, mask, low, high


def sample_uniforms(lat: Lattice, seed: int, stream: int = 0, size=None) -> np.ndarray:
    shape = (lat.n_edges,) if size is None else (size, lat.n_edges)
    return make_rng(seed, stream).random(shape)


def config_from_uniforms(lat: Lattice, u, p: float) -> EdgeConfig:
    """Monotone coupling: edge open iff its uniform is below p."""
    return EdgeConfig(np.asarray(u) < p, lat)


def sample_config(lat: Lattice, p: float, seed: int, stream: int = 0) -> EdgeConfig:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"open probability must lie in [0, 1], got {p}")
    return config_from_uniforms(lat, sample_uniforms(lat, seed, stream), p)


def dual_config(cfg: EdgeConfig) -> EdgeConfig:
    if not cfg.lattice.even:
        raise InvalidParameter("dual configurations need the even-sublattice construction")
    return EdgeConfig(~cfg.bits, cfg.lattice, dual=not cfg.dual)


def has_crossing(cfg: EdgeConfig, spec: CrossingSpec = LEFT_RIGHT) -> bool:
    verts, edges, mask, low, high = crossing_problem(cfg.lattice, spec, dual=cfg.dual)
    uf = UnionFind(len(verts))
    for (a, b), bit in zip(edges, cfg.bits[mask]):
        if bit:
            uf.union(a, b)
    roots = {uf.find(i) for i in low}
    return any(uf.find(i) in roots for i in high)


def batch_source_target(n_vertices, edges, open_bits, sources, targets) -> np.ndarray:
    """Whether some source meets some target, for each row of ``open_bits``.

    All replicas are packed into one block-diagonal graph and labelled in a
    single connected-components call.
    """
    open_bits = np.atleast_2d(np.asarray(open_bits, dtype=bool))
    R = open_bits.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rep, k = np.nonzero(open_bits)
    rows = rep * n_vertices + edges[k, 0]
    cols = rep * n_vertices + edges[k, 1]
    n = R * n_vertices
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    labels = labels.reshape(R, n_vertices)
    has_src = np.zeros(labels.max() + 1, dtype=bool)
    has_src[labels[:, list(sources)].ravel()] = True
    return has_src[labels[:, list(targets)]].any(axis=1)


@dataclass
class Estimate:
    value: float
    stderr: float
    n: int
    exact: object = None  # Fraction or polynomial counts when available
    seed: Optional[int] = None


def crossing_polynomial(lat: Lattice, spec: CrossingSpec = LEFT_RIGHT, dual: bool = False):
    """Integer counts c[a] of crossing configurations with a open edges.

    P(crossing) = sum_a c[a] p^a (1-p)^(E-a).
    """
    verts, edges, mask, low, high = crossing_problem(lat, spec, dual)
    if len(edges) > MAX_FRONTIER_EDGES:
        raise CapacityExceeded(f"{len(edges)} edges exceeds exact limit", dimension=len(edges))
    order = sorted(range(len(verts)), key=lambda i: (verts[i][0], verts[i][1]))
    res = frontier_sum(len(verts), edges, sources=low, targets=high, order=order, poly=True)
    return [int(c) for c in res.event]


def brute_force_crossing_polynomial(lat: Lattice, spec: CrossingSpec = LEFT_RIGHT, dual: bool = False):
    """Same counts as :func:`crossing_polynomial`, by listing every configuration."""
    verts, edges, mask, low, high = crossing_problem(lat, spec, dual)
    E = len(edges)
    if E > MAX_BRUTE_FORCE_EDGES:
        raise CapacityExceeded(f"2^{E} configurations", dimension=E)
    codes = np.arange(2**E, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(E)) & 1).astype(bool)
    hit = np.zeros(2**E, dtype=bool)
    for start in range(0, 2**E, 1 << 16):
        sl = slice(start, start + (1 << 16))
        hit[sl] = batch_source_target(len(verts), edges, bits[sl], low, high)
    counts = np.bincount(bits[hit].sum(axis=1), minlength=E + 1)
    return [int(c) for c in counts]


def eval_polynomial(counts, p):
    """sum_a counts[a] p^a (1-p)^(E-a), exact for Fraction p."""
    E = len(counts) - 1
    return sum(c * p**a * (1 - p) ** (E - a) for a, c in enumerate(counts) if c)


def eval_polynomial_derivative(counts, p):
    E = len(counts) - 1
    total = 0
    for a, c in enumerate(counts):
        if not c:
            continue
        if a:
            total += c * a * p ** (a - 1) * (1 - p) ** (E - a)
        if E - a:
            total -= c * (E - a) * p**a * (1 - p) ** (E - a - 1)
    return total


def crossing_probability(N: int, p, mode: str = "exact", replicas: int = 10**5, seed: int = 0,
                         spec: CrossingSpec = LEFT_RIGHT, dual: bool = False, chunk: int = 2000) -> Estimate:
    """Probability of an open crossing of Lambda_N's primal (or dual) graph.

    ``p`` is the open probability of the edges being crossed, so the dual
    crossing at p is the complement event of the primal one at 1 - p.
    """
    if not 0 <= p <= 1:
        raise InvalidParameter(f"open probability must lie in [0, 1], got {p}")
    lat = build_box(N, even_only=True)
    if mode == "exact":
        counts = crossing_polynomial(lat, spec, dual)
        pf = p if isinstance(p, Fraction) else Fraction(p).limit_denominator(10**12)
        exact = eval_polynomial(counts, pf)
        return Estimate(float(exact), 0.0, 0, exact=exact)
    if mode != "mc":
        raise InvalidParameter(f"unknown mode {mode!r}")
    verts, edges, mask, low, high = crossing_problem(lat, spec, dual)
    rng = make_rng(seed)
    hits = 0
    done = 0
    while done < replicas:
        r = min(chunk, replicas - done)
        u = rng.random((r, lat.n_edges))
        bits = u < float(p)
        hits += int(batch_source_target(len(verts), edges, bits[:, mask], low, high).sum())
        done += r
    mean = hits / replicas
    return Estimate(mean, math.sqrt(mean * (1 - mean) / replicas), replicas, seed=seed)


# --- connection to the boundary of a ball ---------------------------------------


def ball_graph(n: int):
    """Graph ball of radius n around the origin in Z^2 (the l1 diamond).

    Returns ``(sites, edges, origin, boundary, order)``; the order sweeps
    anti-diagonals so the frontier stays about n vertices wide.
    """
    if n < 1:
        raise InvalidParameter("ball radius must be >= 1")
    sites = sorted(((x, y) for x in range(-n, n + 1) for y in range(-n, n + 1) if abs(x) + abs(y) <= n),
                   key=lambda s: (s[0] + s[1], s[0]))
    idx = {s: i for i, s in enumerate(sites)}
    edges = []
    for (x, y), i in idx.items():
        for v in ((x + 1, y), (x, y + 1)):
            if v in idx:
                edges.append((i, idx[v]))
    boundary = [i for s, i in idx.items() if abs(s[0]) + abs(s[1]) == n]
    return sites, edges, idx[(0, 0)], boundary, list(range(len(sites)))


def relevant_ball_edges(n: int):
    """Ball edges with at least one endpoint off the boundary (others never matter)."""
    sites, edges, origin, boundary, order = ball_graph(n)
    bset = set(boundary)
    return sites, [e for e in edges if not (e[0] in bset and e[1] in bset)], origin, boundary, order


def theta_polynomial(n: int):
    """Integer counts for P(0 <-> boundary of the radius-n ball)."""
    sites, edges, origin, boundary, order = relevant_ball_edges(n)
    if len(edges) > MAX_FRONTIER_EDGES:
        raise CapacityExceeded(f"{len(edges)} edges exceeds exact limit", dimension=len(edges))
    res = frontier_sum(len(sites), edges, sources=[origin], targets=boundary, order=order, poly=True)
    return [int(c) for c in res.event]


def theta(n: int, p, mode: str = "exact", replicas: int = 10**4, seed: int = 0, chunk: int = 500) -> Estimate:
    """theta_n(p) = P_p(0 <-> boundary of the graph ball of radius n)."""
    if not 0 <= p <= 1:
        raise InvalidParameter(f"open probability must lie in [0, 1], got {p}")
    sites, edges, origin, boundary, order = relevant_ball_edges(n)
    if mode == "exact":
        if len(edges) > MAX_FRONTIER_EDGES:
            raise CapacityExceeded(f"{len(edges)} edges exceeds exact limit", dimension=len(edges))
        res = frontier_sum(len(sites), edges, p=p, sources=[origin], targets=boundary, order=order)
        return Estimate(float(res.event), 0.0, 0, exact=res.event)
    if mode != "mc":
        raise InvalidParameter(f"unknown mode {mode!r}")
    rng = make_rng(seed)
    hits, done = 0, 0
    while done < replicas:
        r = min(chunk, replicas - done)
        bits = rng.random((r, len(edges))) < float(p)
        hits += int(batch_source_target(len(sites), edges, bits, [origin], boundary).sum())
        done += r
    mean = hits / replicas
    return Estimate(mean, math.sqrt(mean * (1 - mean) / replicas), replicas, seed=seed)


def russo_derivative(n: int, p: float) -> float:
    """d theta_n / dp as the expected number of pivotal edges, by enumeration."""
    sites, edges, origin, boundary, order = relevant_ball_edges(n)
    E = len(edges)
    if E > MAX_BRUTE_FORCE_EDGES:
        raise CapacityExceeded(f"2^{E} configurations", dimension=E)
    codes = np.arange(2**E, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(E)) & 1).astype(bool)
    f = np.zeros(2**E, dtype=bool)
    for start in range(0, 2**E, 1 << 15):
        sl = slice(start, start + (1 << 15))
        f[sl] = batch_source_target(len(sites), edges, bits[sl], [origin], boundary)
    n_open = bits.sum(axis=1)
    total = 0.0
    for e in range(E):
        off = (codes >> e) & 1 == 0
        pivotal = f[codes[off] | (1 << e)] & ~f[codes[off]]
        k = n_open[off][pivotal]
        total += float(np.sum(p**k * (1 - p) ** (E - 1 - k)))
    return total


def pivotal_counts(n: int):
    """Incident edge count at the origin, for the n = 1 closed form."""
    sites, edges, origin, boundary, order = relevant_ball_edges(n)
    return sum(origin in e for e in edges)
