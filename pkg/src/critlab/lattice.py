"""Lattice geometry: boxes, the even sublattice and its primal/dual edges,
isoradial embeddings of Z^2 and the row-swap action on angle sequences.

Sites are integer pairs ``(u1, u2)``; edges are ordered pairs of sites.
Orderings are lexicographic in ``(u2, u1)`` throughout.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GeometricDegeneracy, InvalidParameter

ANGLE_MARGIN = 0.01


def site_key(u):
    return (u[1], u[0])


def _edge(a, b):
    return (a, b) if site_key(a) <= site_key(b) else (b, a)


def _edge_key(e):
    return (site_key(e[0]), site_key(e[1]))


@dataclass(frozen=True)
class Graph:
    """Finite simple graph on hashable vertices with a fixed ordering."""

    sites: tuple
    edges: tuple

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.sites)}

    @cached_property
    def edge_array(self) -> np.ndarray:
        """(E, 2) array of endpoint indices."""
        idx = self.index
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(idx[a], idx[b]) for a, b in self.edges], dtype=np.int64)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list:
        nb = [[] for _ in self.sites]
        for a, b in self.edge_array:
            nb[a].append(int(b))
            nb[b].append(int(a))
        return nb

    def neighbor_table(self) -> np.ndarray:
        """Padded (V, max_degree) neighbour index table, -1 for padding."""
        nb = self.neighbors()
        width = max((len(x) for x in nb), default=0)
        table = -np.ones((len(nb), max(width, 1)), dtype=np.int64)
        for i, row in enumerate(nb):
            table[i, : len(row)] = row
        return table


@dataclass(frozen=True)
class Lattice(Graph):
    """A box of Z^2 (or a 1D chain, or a torus).

    For ``even=True`` the sites are the even sublattice of {-N..N}^2 and the
    edge list holds the primal percolation edges ``e_u`` (one per site, in
    site order).  Their endpoints live on Z_even x Z_odd and are two units
    apart, i.e. one step of that sublattice.
    """

    N: int = 0
    even: bool = False
    dim: int = 2
    periodic: bool = False
    outside: tuple = field(default=(), compare=False)

    @cached_property
    def dual_edges(self) -> tuple:
        if not self.even:
            raise InvalidParameter("dual edges only exist for the even-sublattice construction")
        return tuple(edge_pair(u)[1] for u in self.sites)

    def boundary_pairs(self) -> tuple:
        """``(inside_site, outside_site)`` for every lattice bond leaving the box."""
        return self.outside


def _box_sites(N, even_only):
    pts = [(x, y) for y in range(-N, N + 1) for x in range(-N, N + 1)]
    if even_only:
        pts = [u for u in pts if (u[0] + u[1]) % 2 == 0]
    return tuple(sorted(pts, key=site_key))


def build_box(N: int, even_only: bool = False) -> Lattice:
    """The box {-N..N}^2, or its even sublattice Lambda_N when flagged."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise InvalidParameter(f"box radius must be a positive integer, got {N!r}")
    N = int(N)
    sites = _box_sites(N, even_only)
    if even_only:
        edges = tuple(edge_pair(u)[0] for u in sites)
        return Lattice(sites=sites, edges=edges, N=N, even=True)
    inside = set(sites)
    edges, outside = [], []
    for u in sites:
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            v = (u[0] + d[0], u[1] + d[1])
            if v in inside:
                if d in ((1, 0), (0, 1)):
                    edges.append(_edge(u, v))
            else:
                outside.append((u, v))
    edges.sort(key=_edge_key)
    return Lattice(sites=sites, edges=tuple(edges), N=N, even=False, outside=tuple(outside))


def build_rectangle(width: int, height: int) -> Lattice:
    """Free-boundary grid {0..width-1} x {0..height-1}."""
    if width < 1 or height < 1:
        raise InvalidParameter("rectangle sides must be positive")
    sites = tuple(sorted(((x, y) for x in range(width) for y in range(height)), key=site_key))
    inside = set(sites)
    edges, outside = [], []
    for u in sites:
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            v = (u[0] + d[0], u[1] + d[1])
            if v in inside:
                if d in ((1, 0), (0, 1)):
                    edges.append(_edge(u, v))
            else:
                outside.append((u, v))
    edges.sort(key=_edge_key)
    return Lattice(sites=sites, edges=tuple(edges), N=max(width, height), outside=tuple(outside))


def build_chain(length: int) -> Lattice:
    """Free 1D chain with sites (0,0), (1,0), ..., (length-1, 0)."""
    if length < 1:
        raise InvalidParameter("chain length must be positive")
    sites = tuple((x, 0) for x in range(length))
    edges = tuple(((x, 0), (x + 1, 0)) for x in range(length - 1))
    outside = (((0, 0), (-1, 0)), ((length - 1, 0), (length, 0)))
    return Lattice(sites=sites, edges=edges, N=length, dim=1, outside=outside)


def build_torus(L: int) -> Lattice:
    """L x L periodic square lattice, sites {0..L-1}^2 (L >= 3 keeps it simple)."""
    if L < 3:
        raise InvalidParameter("torus side must be at least 3")
    sites = tuple(sorted(((x, y) for x in range(L) for y in range(L)), key=site_key))
    edges = []
    for x, y in sites:
        edges.append(_edge((x, y), ((x + 1) % L, y)))
        edges.append(_edge((x, y), (x, (y + 1) % L)))
    edges.sort(key=_edge_key)
    return Lattice(sites=sites, edges=tuple(edges), N=L, periodic=True)


def graph_from_edges(edges, sites=None) -> Graph:
    """Graph from an explicit edge list (vertices may be any sortable labels)."""
    edges = [tuple(e) for e in edges]
    for a, b in edges:
        if a == b:
            raise InvalidParameter(f"self-loop at {a!r}")
    if sites is None:
        seen = {}
        for a, b in edges:
            seen.setdefault(a, None)
            seen.setdefault(b, None)
        sites = tuple(seen)
    return Graph(sites=tuple(sites), edges=tuple(edges))


def edge_pair(u):
    """``(e_u, e_u*)`` for an even site u: the primal edge with midpoint u and
    its 90-degree rotated dual partner."""
    u1, u2 = int(u[0]), int(u[1])
    if (u1 + u2) % 2:
        raise InvalidParameter(f"site {u!r} is not on the even sublattice")
    vertical = ((u1, u2 - 1), (u1, u2 + 1))
    horizontal = ((u1 - 1, u2), (u1 + 1, u2))
    if u1 % 2 == 0:
        return vertical, horizontal
    return horizontal, vertical


# --- isoradial embeddings ------------------------------------------------------


@dataclass(frozen=True)
class IsoradialSequence:
    """Angles alpha_k for rows k = start, ..., start + len(angles) - 1."""

    start: int
    angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        limit = math.pi / 2 - ANGLE_MARGIN
        for k, a in zip(self.rows, self.angles):
            if not (-limit < a < limit):
                raise InvalidParameter(f"angle {a} at row {k} too close to +-pi/2")

    @property
    def rows(self) -> range:
        return range(self.start, self.start + len(self.angles))

    def __contains__(self, k) -> bool:
        return self.start <= k < self.start + len(self.angles)

    def __getitem__(self, k) -> float:
        if k not in self:
            raise InvalidParameter(f"row {k} outside window {self.rows}")
        return self.angles[k - self.start]

    @classmethod
    def constant(cls, value, start, stop):
        return cls(start, (value,) * (stop - start))


@dataclass(frozen=True)
class EmbeddedLattice:
    positions: dict  # (x, y) -> np.ndarray(2)
    faces: tuple  # quadruples of even sites around an odd centre
    dual_positions: dict  # odd centre -> position

    def primal_sites(self):
        return [s for s in self.positions if (s[0] + s[1]) % 2 == 0]

    def dual_sites(self):
        return [s for s in self.positions if (s[0] + s[1]) % 2 == 1]

    def diamond_edges(self):
        pos = self.positions
        out = []
        for (x, y) in pos:
            for v in ((x + 1, y), (x, y + 1)):
                if v in pos:
                    out.append(((x, y), v))
        return out


def _row_offsets(alpha, y):
    """(s_y, c_y), with sums over (0, y] negated for y < 0."""
    if y >= 0:
        ks = range(1, y + 1)
        sign = 1.0
    else:
        ks = range(y + 1, 1)
        sign = -1.0
    s = sum(math.sin(alpha[k]) for k in ks)
    c = sum(math.cos(alpha[k]) for k in ks)
    return sign * s, sign * c


def isoradial_embed(alpha: IsoradialSequence, rows, cols) -> EmbeddedLattice:
    rows, cols = range(rows.start, rows.stop), range(cols.start, cols.stop)
    if len(rows) == 0 or len(cols) == 0:
        raise InvalidParameter("empty row or column range")
    needed = set(range(1, rows[-1] + 1)) | set(range(rows[0] + 1, 1))
    missing = sorted(k for k in needed if k not in alpha)
    if missing:
        raise InvalidParameter(f"rows {missing} outside alpha window {alpha.rows}")
    offsets = {y: _row_offsets(alpha, y) for y in rows}
    positions = {}
    for y in rows:
        s, c = offsets[y]
        for x in cols:
            positions[(x, y)] = np.array([x + s, c])
    faces, centres = [], {}
    for (x, y), p in positions.items():
        if (x + y) % 2 == 0:
            continue
        quad = ((x - 1, y), (x, y + 1), (x + 1, y), (x, y - 1))
        if all(q in positions for q in quad):
            faces.append(quad)
            centres[(x, y)] = p
    return EmbeddedLattice(positions=positions, faces=tuple(faces), dual_positions=centres)


def swap_rows(alpha: IsoradialSequence, j: int) -> IsoradialSequence:
    """T_j: exchange the angles of rows j and j+1."""
    if j not in alpha or j + 1 not in alpha:
        raise InvalidParameter(f"swap at row {j} needs rows {j} and {j + 1} in window {alpha.rows}")
    a = list(alpha.angles)
    i = j - alpha.start
    a[i], a[i + 1] = a[i + 1], a[i]
    return IsoradialSequence(alpha.start, tuple(a))


def circumcircle(p, q, r):
    """Centre and radius of the circle through three points (bisector intersection)."""
    p, q, r = (np.asarray(v, dtype=float) for v in (p, q, r))
    a = np.array([q - p, r - p])
    b = 0.5 * np.array([q @ q - p @ p, r @ r - p @ p])
    det = np.linalg.det(a)
    scale = max(np.abs(a).max(), 1.0) ** 2
    if abs(det) < 1e-12 * scale:
        raise GeometricDegeneracy("collinear points have no circumcircle")
    centre = np.linalg.solve(a, b)
    return centre, float(np.linalg.norm(p - centre))


def check_isoradial(emb: EmbeddedLattice, tol: float = 1e-9):
    """Max over faces of |circumradius - 1|, and whether it is within tol."""
    if not emb.faces:
        raise InvalidParameter("embedding has no faces")
    worst = 0.0
    for quad in emb.faces:
        pts = [emb.positions[s] for s in quad]
        centre, radius = circumcircle(*pts[:3])
        fourth = float(np.linalg.norm(pts[3] - centre))
        worst = max(worst, abs(radius - 1.0), abs(fourth - 1.0))
    return worst, worst <= tol
