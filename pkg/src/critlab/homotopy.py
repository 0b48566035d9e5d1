"""Free-homotopy classes of loops in the plane minus a puncture grid.

Every puncture emits a ray to infinity.  In the grid's own frame (rotated by
``frame`` and sheared by a small irrational slope so that no two rays
overlap) the rays point straight down.  Listing the signed ray crossings in
order along a loop gives a word in the free group on the punctures; after
free and cyclic reduction, the lexicographically least rotation identifies
the conjugacy class, i.e. the free-homotopy class.

Punctures are restricted to a square window; for loops inside that window
outer punctures cannot change which loops are freely homotopic.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidParameter, RayDegeneracy

JITTER = (math.sqrt(2) / 1000.0, math.sqrt(3) / 1000.0)
SHEAR = 1.0 / math.sqrt(500.0)
RAY_TOL = 1e-9
DEFAULT_ETAS = (0.5, 0.25, 0.125, 0.0625)
EXACT_MATCHING_LIMIT = 256


@dataclass(frozen=True)
class PunctureGrid:
    """eta Z^2 within [-half_width, half_width]^2 plus a fixed jitter."""

    eta: float
    half_width: float = None  # defaults to 1 / eta
    jitter: tuple = JITTER
    frame: float = 0.0  # ray direction is the frame-rotated downward vertical
    shear: float = SHEAR
    points: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidParameter("eta must be > 0")
        hw = 1.0 / self.eta if self.half_width is None else float(self.half_width)
        object.__setattr__(self, "half_width", hw)
        if self.points is None:
            k = int(math.floor(hw / self.eta + 1e-9))
            ax = np.arange(-k, k + 1) * self.eta
            X, Y = np.meshgrid(ax, ax, indexing="xy")
            pts = np.column_stack([X.ravel(), Y.ravel()]) + np.asarray(self.jitter)
            object.__setattr__(self, "points", pts)
        if len(self.points) == 0:
            raise InvalidParameter("empty puncture grid")

    def __len__(self):
        return len(self.points)

    def to_frame(self, pts) -> np.ndarray:
        """Coordinates in which the rays are vertical and point down."""
        c, s = math.cos(-self.frame), math.sin(-self.frame)
        p = np.asarray(pts, dtype=float) @ np.array([[c, s], [-s, c]])
        return np.column_stack([p[:, 0] + self.shear * p[:, 1], p[:, 1]])

    def rotated(self, theta: float) -> "PunctureGrid":
        c, s = math.cos(theta), math.sin(theta)
        pts = self.points @ np.array([[c, s], [-s, c]])
        return replace(self, points=pts, frame=self.frame + theta)

    def rejittered(self, k: int) -> "PunctureGrid":
        """Deterministic fallback grid used after a ray degeneracy."""
        j = (JITTER[0] * (1 + 0.1 * k * math.sqrt(5)), JITTER[1] * (1 + 0.1 * k * math.sqrt(7)))
        return PunctureGrid(self.eta, self.half_width, j, self.frame, self.shear)


def rotate_points(pts, theta: float, centre=(0.0, 0.0)) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    p = np.asarray(pts, dtype=float) - centre
    return p @ np.array([[c, s], [-s, c]]) + centre


def rotate_family(family, theta: float, centre=(0.0, 0.0)):
    return [rotate_points(_pts(l), theta, centre) for l in family]


def _pts(loop) -> np.ndarray:
    p = np.asarray(getattr(loop, "points", loop), dtype=float)
    if len(p) < 2:
        raise InvalidParameter("a loop needs at least two points")
    if not np.allclose(p[0], p[-1]):
        p = np.vstack([p, p[:1]])
    return p


def _segment_crossings(P, starts, grid: PunctureGrid):
    """Ray crossings of the polylines stored back to back in P (already in frame).

    ``starts`` marks the first vertex of each polyline; returns arrays
    (polyline id, puncture index, sign) ordered along each polyline.
    """
    Q = grid.to_frame(grid.points)
    order = np.argsort(Q[:, 0], kind="stable")
    qx = Q[order, 0]
    line = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, len(P))))
    keep = np.ones(len(P), dtype=bool)
    ends = np.append(starts[1:], len(P)) - 1
    keep[ends] = False  # last vertex of each polyline starts no segment
    sidx = np.nonzero(keep)[0]
    a, b = P[sidx], P[sidx + 1]
    lo_v = np.searchsorted(qx, a[:, 0] - RAY_TOL)
    hi_v = np.searchsorted(qx, a[:, 0] + RAY_TOL)
    for k in np.nonzero(hi_v > lo_v)[0]:
        ys = Q[order[lo_v[k]:hi_v[k]], 1]
        if np.any(ys > a[k, 1] - RAY_TOL):
            raise RayDegeneracy(f"loop vertex {sidx[k]} lies on a ray")
    x0, x1 = a[:, 0], b[:, 0]
    i0 = np.searchsorted(qx, np.minimum(x0, x1), side="right")
    i1 = np.searchsorted(qx, np.maximum(x0, x1), side="right")
    counts = i1 - i0
    seg = np.repeat(np.arange(len(a)), counts)
    if len(seg) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    start = np.repeat(i0 - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    cand = order[np.arange(len(seg)) + start]
    px, py = Q[cand, 0], Q[cand, 1]
    dx = x1[seg] - x0[seg]
    t = (px - x0[seg]) / dx
    ycross = a[seg, 1] + t * (b[seg, 1] - a[seg, 1])
    below = ycross < py
    seg, cand, t, dx = seg[below], cand[below], t[below], dx[below]
    key = np.lexsort((t, seg))
    seg, cand, dx = seg[key], cand[key], dx[key]
    return line[sidx[seg]], cand, np.where(dx > 0, 1, -1)


def crossings(loop, grid: PunctureGrid):
    """Signed ray crossings in loop order: (puncture indices, signs)."""
    P = grid.to_frame(_pts(loop))
    _, idx, sign = _segment_crossings(P, np.array([0]), grid)
    return idx, sign


def winding_numbers(loop, grid: PunctureGrid) -> np.ndarray:
    idx, sign = crossings(loop, grid)
    return np.bincount(idx, weights=sign, minlength=len(grid)).astype(np.int64)


def free_reduce(word):
    out = []
    for letter in word:
        if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
            out.pop()
        else:
            out.append(letter)
    return out


def cyclic_reduce(word):
    w = free_reduce(word)
    i, j = 0, len(w) - 1
    while i < j and w[i][0] == w[j][0] and w[i][1] == -w[j][1]:
        i += 1
        j -= 1
    return w[i:j + 1]


def least_rotation(seq) -> int:
    """Booth's algorithm: start index of the lexicographically least rotation."""
    s = list(seq) * 2
    n = len(seq)
    f = [-1] * len(s)
    k = 0
    for j in range(1, len(s)):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n if n else 0


def canonical_word(idx, sign) -> tuple:
    w = cyclic_reduce(list(zip(np.asarray(idx).tolist(), np.asarray(sign).tolist())))
    if not w:
        return ()
    k = least_rotation([2 * i + (s < 0) for i, s in w])
    return tuple(w[k:] + w[:k])


def homotopy_word(loop, grid: PunctureGrid) -> tuple:
    """Canonical cyclic word: tuple of (puncture index, +-1)."""
    return canonical_word(*crossings(loop, grid))


def encloses_count(loop, grid: PunctureGrid) -> int:
    return int(np.count_nonzero(winding_numbers(loop, grid)))


def relevant_loops(family, grid: PunctureGrid):
    """Loops enclosing at least two punctures but not all of them."""
    n = len(grid)
    return [l for l in family if 2 <= encloses_count(l, grid) < n]


def family_words(family, grid: PunctureGrid) -> frozenset:
    """Set of canonical words of the relevant loops of a family (one batched pass)."""
    if len(family) == 0:
        return frozenset()
    pts = [_pts(l) for l in family]
    starts = np.cumsum([0] + [len(p) for p in pts[:-1]])
    P = grid.to_frame(np.vstack(pts))
    line, idx, sign = _segment_crossings(P, starts, grid)
    n = len(grid)
    if len(line) == 0:
        return frozenset()
    wn = np.bincount(line * n + idx, weights=sign, minlength=len(pts) * n).reshape(len(pts), n)
    enclosed = np.count_nonzero(np.rint(wn), axis=1)
    words = set()
    bounds = np.searchsorted(line, np.arange(len(pts) + 1))
    for k in np.nonzero((enclosed >= 2) & (enclosed < n))[0]:
        sl = slice(bounds[k], bounds[k + 1])
        words.add(canonical_word(idx[sl], sign[sl]))
    return frozenset(words)


def family_match(F, G, grid: PunctureGrid) -> bool:
    """Both families realise the same set of classes among their relevant loops."""
    return family_words(F, grid) == family_words(G, grid)


def _words_all(families, grid, retries=3):
    for k in range(retries + 1):
        g = grid if k == 0 else grid.rejittered(k)
        try:
            return [family_words(F, g) for F in families]
        except RayDegeneracy:
            if k == retries:
                raise
    return None


def pair_costs(A, B, etas=DEFAULT_ETAS, half_width=1.0, frame=0.0) -> np.ndarray:
    """cost[i, j] = smallest eta with a family match (largest eta if none)."""
    etas = sorted(float(e) for e in etas)
    cost = np.full((len(A), len(B)), max(etas))
    settled = np.zeros((len(A), len(B)), dtype=bool)
    for eta in etas:
        grid = PunctureGrid(eta, half_width, frame=frame)
        wa = _words_all(A, grid)
        wb = _words_all(B, grid)
        for i in range(len(A)):
            for j in range(len(B)):
                if not settled[i, j] and wa[i] == wb[j]:
                    cost[i, j] = eta
                    settled[i, j] = True
    return cost


def ensemble_distance(A, B, etas=DEFAULT_ETAS, half_width=1.0, return_costs=False):
    """Average cost of an optimal (or, above 256 samples, greedy) perfect matching."""
    if len(A) == 0 or len(B) == 0:
        raise InvalidParameter("sample sets must be nonempty")
    if len(A) != len(B):
        raise InvalidParameter("sample sets must have equal size")
    cost = pair_costs(A, B, etas, half_width)
    if len(A) <= EXACT_MATCHING_LIMIT:
        r, c = linear_sum_assignment(cost)
        matched = cost[r, c]
    else:
        matched = []
        free_b = set(range(len(B)))
        for i in range(len(A)):
            j = min(free_b, key=lambda j: cost[i, j])
            free_b.remove(j)
            matched.append(cost[i, j])
        matched = np.asarray(matched)
    d = float(np.mean(matched))
    return (d, matched) if return_costs else d


def match_rates(A, B, etas=DEFAULT_ETAS, half_width=1.0) -> dict:
    """Per-eta fraction of index-aligned pairs whose families match."""
    out = {}
    for eta in etas:
        grid = PunctureGrid(eta, half_width)
        wa, wb = _words_all(A, grid), _words_all(B, grid)
        out[float(eta)] = float(np.mean([x == y for x, y in zip(wa, wb)]))
    return out


# --- loop ensembles from critical FK ---------------------------------------------


def critical_fk_loops(M: int, n_samples: int, seed: int, q: int = 2, burn_in: int = 200, thin: int = 10):
    """Loop families of the critical FK(q) model on an M x M primal grid, scaled to [-1, 1]^2."""
    from .fk import self_dual_point, swendsen_wang
    from .lattice import graph_from_edges
    from .medial import grid_centre, loops_from_region, primal_square_grid, region_edges

    region = primal_square_grid(M)
    prim, edges = region_edges(region)
    graph = graph_from_edges(edges, sites=tuple(range(len(prim))))
    centre = grid_centre(M)
    scale = 1.0 / (M - 1)
    fams = []
    for bits, _ in swendsen_wang(graph, q, self_dual_point(q), n_samples, seed, burn_in=burn_in, thin=thin):
        fams.append([(l.points - centre) * scale for l in loops_from_region(region, bits)])
    return fams


def rotation_check(M: int = 64, n_samples: int = 64, seed: int = 0, etas=DEFAULT_ETAS) -> dict:
    """Compare d(A, A') for an independent re-run A' with d(A, R_{pi/2} B)."""
    A = critical_fk_loops(M, n_samples, seed)
    A2 = critical_fk_loops(M, n_samples, seed + 1)
    B = critical_fk_loops(M, n_samples, seed + 2)
    RB = [rotate_family(F, math.pi / 2) for F in B]
    d_same, c_same = ensemble_distance(A, A2, etas, return_costs=True)
    d_rot, c_rot = ensemble_distance(A, RB, etas, return_costs=True)
    # Welch-style z score on the matched costs
    se = math.sqrt(np.var(c_same, ddof=1) / len(c_same) + np.var(c_rot, ddof=1) / len(c_rot))
    z = 0.0 if se == 0 else (d_rot - d_same) / se
    return {"d_reseeded": d_same, "d_rotated": d_rot, "z": z, "stderr": se, "samples": n_samples,
            "etas": list(etas)}
