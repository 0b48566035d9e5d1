"""Loop representation of a planar edge configuration.

Each even site u owns the diamond with corners u +- (1,0), u +- (0,1): two of
them are endpoints of the primal edge e_u, the other two of the dual edge
e_u*.  Inside every diamond two arcs join midpoints of adjacent sides.  When
e_u is open the arcs wrap the two dual corners, otherwise the two primal
corners, so arcs never cross an open edge of either graph.  Where a diamond
side lies on the outer boundary of the region the arc ends are closed up by
an extra arc running outside each boundary primal vertex; this is the same
as wiring all boundary dual vertices together, and then

    #loops = k(omega) + k_wired(omega*) - 1.

Loops are oriented with the primal cluster on their left.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GeometricDegeneracy, InvalidParameter
from .percolation import UnionFind

_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _is_primal(v) -> bool:
    """Primal vertices are Z_even x Z_odd, dual ones Z_odd x Z_even."""
    return v[0] % 2 == 0


@dataclass(frozen=True)
class Loop:
    points: np.ndarray  # (n + 1, 2), first row repeated at the end

    @property
    def n_segments(self) -> int:
        return len(self.points) - 1


@dataclass(frozen=True)
class MedialRegion:
    """The union of diamonds around a finite set of even sites."""

    sites: tuple

    def __post_init__(self):
        sites = tuple(tuple(int(c) for c in u) for u in self.sites)
        for u in sites:
            if (u[0] + u[1]) % 2:
                raise InvalidParameter(f"site {u} is not on the even sublattice")
        object.__setattr__(self, "sites", sites)

    @cached_property
    def site_set(self) -> frozenset:
        return frozenset(self.sites)

    @cached_property
    def corners(self):
        """(primal corners, dual corners), each sorted."""
        prim, dual = set(), set()
        for u in self.sites:
            for d in _DIRS:
                c = (u[0] + d[0], u[1] + d[1])
                (prim if _is_primal(c) else dual).add(c)
        return sorted(prim), sorted(dual)

    def quads_around(self, v):
        """Present diamonds around corner v in counter-clockwise order E, N, W, S."""
        return [(v[0] + d[0], v[1] + d[1]) in self.site_set for d in _DIRS]

    def is_boundary_corner(self, v) -> bool:
        return not all(self.quads_around(v))

    @cached_property
    def boundary_primal(self):
        """Boundary primal vertex -> (two outer side midpoints in doubled coords, outward point)."""
        out = {}
        for v in self.corners[0]:
            present = self.quads_around(v)
            if all(present):
                continue
            sides = []
            for k in range(4):
                a, b = present[k], present[(k + 1) % 4]
                if a != b:
                    d1, d2 = _DIRS[k], _DIRS[(k + 1) % 4]
                    sides.append((2 * v[0] + d1[0] + d2[0], 2 * v[1] + d1[1] + d2[1]))
            if len(sides) != 2:
                raise GeometricDegeneracy(f"region is pinched at primal vertex {v}")
            centres = np.array([(v[0] + d[0], v[1] + d[1]) for d, p in zip(_DIRS, present) if p], dtype=float)
            away = np.asarray(v, dtype=float) - centres.mean(axis=0)
            norm = np.linalg.norm(away)
            if norm == 0:
                raise GeometricDegeneracy(f"no outward direction at {v}")
            out[v] = (tuple(sides), np.asarray(v, dtype=float) + 0.25 * away / norm)
        return out


def _arcs(region: MedialRegion, bits):
    """Arcs as (m1, m2, hugged corner, outward point or None), midpoints doubled."""
    arcs = []
    for u, open_ in zip(region.sites, bits):
        for d in _DIRS:
            c = (u[0] + d[0], u[1] + d[1])
            if _is_primal(c) == bool(open_):
                continue  # open primal edge: hug dual corners only, and vice versa
            perp = (-d[1], d[0])
            m1 = (2 * u[0] + d[0] + perp[0], 2 * u[1] + d[1] + perp[1])
            m2 = (2 * u[0] + d[0] - perp[0], 2 * u[1] + d[1] - perp[1])
            arcs.append((m1, m2, c, None))
    for v, (sides, outward) in region.boundary_primal.items():
        arcs.append((sides[0], sides[1], v, outward))
    return arcs


def loops_from_region(region: MedialRegion, bits) -> list:
    bits = np.asarray(bits, dtype=bool)
    if len(bits) != len(region.sites):
        raise InvalidParameter("one bit per site expected")
    arcs = _arcs(region, bits)
    at = {}
    for k, (m1, m2, _, _) in enumerate(arcs):
        at.setdefault(m1, []).append(k)
        at.setdefault(m2, []).append(k)
    for m, ks in at.items():
        if len(ks) != 2:
            raise GeometricDegeneracy(f"medial vertex {m} has degree {len(ks)}")
    used = np.zeros(len(arcs), dtype=bool)
    loops = []
    for start in range(len(arcs)):
        if used[start]:
            continue
        m1, m2, c, outward = arcs[start]
        pts = [m1]
        orient = None
        k, here = start, m1
        while True:
            used[k] = True
            a1, a2, corner, out = arcs[k]
            there = a2 if here == a1 else a1
            if out is not None:
                pts.append(tuple(2 * out))
            pts.append(there)
            if orient is None:
                p0 = np.asarray(here, dtype=float) / 2
                p1 = np.asarray(there, dtype=float) / 2
                if out is not None:
                    p1 = out
                cv = np.asarray(corner, dtype=float)
                cross = (p1[0] - p0[0]) * (cv[1] - p0[1]) - (p1[1] - p0[1]) * (cv[0] - p0[0])
                orient = (cross > 0) == _is_primal(corner)
            here = there
            nxt = [j for j in at[here] if j != k]
            k = nxt[0]
            if k == start:
                break
        arr = np.asarray(pts, dtype=float) / 2.0
        if not orient:
            arr = arr[::-1]
        loops.append(Loop(points=arr))
    return loops


def loop_representation(cfg) -> list:
    """Loops of a primal :class:`EdgeConfig` on the even-sublattice box."""
    lat = cfg.lattice
    if not getattr(lat, "even", False):
        raise InvalidParameter("loop representation needs the even-sublattice construction")
    bits = ~cfg.bits if cfg.dual else cfg.bits
    return loops_from_region(MedialRegion(lat.sites), bits)


def cluster_counts(region: MedialRegion, bits):
    """(k(omega), k_wired(omega*)) on the region's primal and dual corners."""
    bits = np.asarray(bits, dtype=bool)
    prim, dual = region.corners
    pi = {v: i for i, v in enumerate(prim)}
    di = {v: i for i, v in enumerate(dual)}
    up, ud = UnionFind(len(prim)), UnionFind(len(dual))
    for u, open_ in zip(region.sites, bits):
        from .lattice import edge_pair

        e, e_star = edge_pair(u)
        if open_:
            up.union(pi[e[0]], pi[e[1]])
        else:
            ud.union(di[e_star[0]], di[e_star[1]])
    bnd = [di[v] for v in dual if region.is_boundary_corner(v)]
    for a, b in zip(bnd, bnd[1:]):
        ud.union(a, b)
    return up.count, ud.count


def expected_loop_count(region: MedialRegion, bits) -> int:
    kp, kd = cluster_counts(region, bits)
    return kp + kd - 1


def primal_square_grid(M: int) -> MedialRegion:
    """Region whose primal graph is the M x M grid on {0,2,..,2M-2} x {1,3,..,2M-1}."""
    if M < 2:
        raise InvalidParameter("grid side must be at least 2")
    sites = []
    for i in range(M):
        for j in range(M):
            x, y = 2 * i, 2 * j + 1
            if i + 1 < M:
                sites.append((x + 1, y))
            if j + 1 < M:
                sites.append((x, y + 1))
    return MedialRegion(tuple(sorted(sites, key=lambda s: (s[1], s[0]))))


def grid_centre(M: int):
    return np.array([M - 1.0, float(M)])


def region_edges(region: MedialRegion):
    """Primal vertex list and edge index pairs (aligned with region.sites)."""
    from .lattice import edge_pair

    prim = region.corners[0]
    idx = {v: i for i, v in enumerate(prim)}
    edges = [(idx[a], idx[b]) for a, b in (edge_pair(u)[0] for u in region.sites)]
    return prim, edges


def is_simple_closed(loop: Loop, tol: float = 1e-12) -> bool:
    pts = loop.points
    if not np.allclose(pts[0], pts[-1], atol=tol):
        return False
    body = np.round(pts[:-1] / tol).astype(np.int64) if tol > 0 else pts[:-1]
    return len({tuple(r) for r in body}) == len(body)
