"""Six-vertex model: tiles, enumeration and the cylinder row transfer matrix.

A tile is (h_l, v_b, h_r, v_t) with +1 meaning an arrow pointing right (for
horizontal edges) or up (for vertical ones).  The ice rule is
h_l + v_b = h_r + v_t, which leaves six tiles.  The two tiles whose
horizontal arrows reverse (h_l != h_r) carry weight c, the others weight 1.

Row states are N-bit integers, bit j set when the vertical arrow in column j
points up.  With periodic horizontal boundary the number of up arrows is
conserved, so V_N splits into blocks V_N^[n] of dimension C(N, n).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import comb

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapacityExceeded, ConvergenceFailure, InvalidParameter

TILES = tuple(t for t in product((1, -1), repeat=4) if t[0] + t[1] == t[2] + t[3])
DENSE_LIMIT = 4096
MAX_WIDTH = 20
MAX_TILING_VERTICES = 20


def is_c_tile(tile) -> bool:
    return tile[0] != tile[2]


def tile_weight(tile, c):
    return c if is_c_tile(tile) else 1


def c_of_q(q: float) -> float:
    if q < 0:
        raise InvalidParameter("q must be >= 0")
    return math.sqrt(2.0 + math.sqrt(q))


# --- enumeration oracle -------------------------------------------------------


@dataclass(frozen=True)
class TilingBoundary:
    """``kind`` is free, cylinder (periodic rows) or torus; ``fixed`` pins edges.

    Keys of ``fixed`` are ("h", row, col) with col in 0..W and ("v", row, col)
    with row in 0..H; values are +-1.
    """

    kind: str = "free"
    fixed: tuple = ()

    def __post_init__(self):
        if self.kind not in ("free", "cylinder", "torus"):
            raise InvalidParameter(f"unknown boundary kind {self.kind!r}")


def enumerate_tilings(width: int, height: int, c=1, boundary: TilingBoundary = TilingBoundary()):
    """(number of admissible configurations, sum of c^{#c-tiles})."""
    if width < 1 or height < 1:
        raise InvalidParameter("width and height must be positive")
    if width * height > MAX_TILING_VERTICES:
        raise CapacityExceeded(f"{width * height} vertices", dimension=width * height)
    per_h = boundary.kind in ("cylinder", "torus")
    per_v = boundary.kind == "torus"
    fixed = dict(boundary.fixed)

    def hkey(r, col):
        return ("h", r, col % width) if per_h else ("h", r, col)

    def vkey(r, col):
        return ("v", r % height, col) if per_v else ("v", r, col)

    for k, val in fixed.items():
        if val not in (1, -1):
            raise InvalidParameter(f"edge orientation must be +-1, got {val!r}")
    assign = {}
    for k, val in fixed.items():
        k2 = hkey(k[1], k[2]) if k[0] == "h" else vkey(k[1], k[2])
        if assign.get(k2, val) != val:
            return 0, 0 * c
        assign[k2] = val
    cells = [(r, col) for r in range(height) for col in range(width)]
    count = 0
    total = 0 * c

    def rec(i, weight):
        nonlocal count, total
        if i == len(cells):
            count += 1
            total += weight
            return
        r, col = cells[i]
        keys = (hkey(r, col), vkey(r, col), hkey(r, col + 1), vkey(r + 1, col))
        for t in TILES:
            added = []
            ok = True
            for k, val in zip(keys, t):
                cur = assign.get(k)
                if cur is None:
                    assign[k] = val
                    added.append(k)
                elif cur != val:
                    ok = False
                    break
            if ok:
                rec(i + 1, weight * tile_weight(t, c))
            for k in added:
                del assign[k]

    rec(0, 1)
    return count, total


# --- transfer matrix ------------------------------------------------------------


@lru_cache(maxsize=None)
def sector_states(N: int, n: int) -> np.ndarray:
    """Row codes with exactly n up arrows, increasing."""
    if not 0 <= n <= N:
        raise InvalidParameter(f"need 0 <= n <= N, got n={n}, N={N}")
    codes = np.arange(2**N, dtype=np.int64)
    pop = np.zeros(2**N, dtype=np.int64)
    for j in range(N):
        pop += (codes >> j) & 1
    return codes[pop == n]


def _r_entries(c):
    """Nonzero R[h_in, b, h_out, t] with index 0 for -1 and 1 for +1."""
    return [tuple((x + 1) // 2 for x in t) + (tile_weight(t, c),) for t in TILES]


def apply_transfer(N: int, c: float, vec: np.ndarray) -> np.ndarray:
    """V_N applied to a 2^N vector (or to the columns of a (2^N, k) array).

    The sum over horizontal arrows runs column by column through the
    auxiliary space: at column j the state is X[h, t_<j, b_j, b_>j, batch]
    and each of the six tiles contributes one scaled slice copy.
    """
    entries = _r_entries(c)
    vec = np.asarray(vec, dtype=float)
    single = vec.ndim == 1
    X0 = vec.reshape(2**N, -1)
    k = X0.shape[1]
    # code bit j (column j) is C-order axis N-1-j, so low columns vary fastest
    out = np.zeros((2**N, k))
    for h0 in (0, 1):
        X = np.zeros((2, 2**N, k))
        X[h0] = X0
        for j in range(N):
            # view the code axis as (high bits, b_j, low bits)
            Xv = X.reshape(2, 2 ** (N - 1 - j), 2, 2**j, k)
            Y = np.zeros_like(Xv)
            for h, b, g, t, w in entries:
                Y[g, :, t] += w * Xv[h, :, b]
            X = Y.reshape(2, 2**N, k)
        out += X[h0]
    return out[:, 0] if single else out


def _column_operator(N: int, j: int, c: float):
    """Sparse map on (h, code) space replacing b_j by t_j and h by h'."""
    codes = np.arange(2**N, dtype=np.int64)
    rows, cols, vals = [], [], []
    for h, b, g, t, w in _r_entries(c):
        sel = codes[((codes >> j) & 1) == b]
        new = (sel & ~(1 << j)) | (t << j)
        rows.append(g * 2**N + new)
        cols.append(h * 2**N + sel)
        vals.append(np.full(len(sel), float(w)))
    shape = (2 ** (N + 1), 2 ** (N + 1))
    return csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def _sector_matrix(N: int, c: float, states) -> np.ndarray:
    """Dense block V[states, states] as a product of sparse column operators."""
    ops = [_column_operator(N, j, c) for j in range(N)]
    out = np.zeros((len(states), len(states)))
    for h0 in (0, 1):
        cols = h0 * 2**N + states
        M = csr_matrix((np.ones(len(states)), (cols, np.arange(len(states)))),
                       shape=(2 ** (N + 1), len(states)))
        for L in ops:
            M = L @ M
        out += M[h0 * 2**N + states].toarray()
    return out


def dense_transfer(N: int, c) -> np.ndarray:
    """Full 2^N x 2^N matrix, entry [out, in], by listing horizontal completions."""
    if N > 12:
        raise CapacityExceeded(f"dense transfer matrix of width {N}", dimension=2**N)
    dtype = object if not isinstance(c, (float, int, np.floating)) else float
    V = np.zeros((2**N, 2**N), dtype=dtype)
    if dtype is object:
        V[:] = 0 * c
    for s in range(2**N):
        bot = [1 if (s >> j) & 1 else -1 for j in range(N)]
        for h0 in (1, -1):
            stack = [(0, h0, 0, 1)]
            while stack:
                j, h, out, w = stack.pop()
                if j == N:
                    if h == h0:
                        V[out, s] += w
                    continue
                for t in (1, -1):
                    h2 = h + bot[j] - t
                    if h2 in (1, -1):
                        tile = (h, bot[j], h2, t)
                        stack.append((j + 1, h2, out | ((t == 1) << j), w * tile_weight(tile, c)))
    return V


@dataclass
class TransferBlock:
    N: int
    n: int
    c: float
    matrix: object = None  # dense ndarray when small, else None (matrix-free)

    @property
    def dim(self) -> int:
        return comb(self.N, self.n)

    @property
    def states(self) -> np.ndarray:
        return sector_states(self.N, self.n)

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ x
        full = np.zeros(2**self.N)
        full[self.states] = x
        return apply_transfer(self.N, self.c, full)[self.states]

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix, dtype=float)
        if self.dim > DENSE_LIMIT:
            raise CapacityExceeded(f"block dimension {self.dim}", dimension=self.dim)
        return np.column_stack([self.apply(e) for e in np.eye(self.dim)])


def transfer_block(N: int, n: int, c: float, dense=None) -> TransferBlock:
    if N < 1 or N > MAX_WIDTH:
        raise InvalidParameter(f"row width must lie in 1..{MAX_WIDTH}")
    if not 0 <= n <= N:
        raise InvalidParameter(f"up-arrow count must lie in 0..{N}")
    if c < 0:
        raise InvalidParameter("c must be >= 0")
    dim = comb(N, n)
    if dense is None:
        dense = dim <= DENSE_LIMIT
    block = TransferBlock(N, n, float(c))
    if dense:
        block.matrix = _sector_matrix(N, float(c), sector_states(N, n))
    return block


def is_irreducible(block: TransferBlock) -> bool:
    A = block.to_dense()
    n_comp, _ = connected_components(csr_matrix(A > 0), directed=True, connection="strong")
    return n_comp == 1


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float


def leading_eigen(block: TransferBlock, tol: float = 1e-12, max_iters: int = 100000, seed_vector=None) -> EigenResult:
    """Power iteration with Rayleigh residual ||Av - lam v|| / lam as the stopping rule."""
    dim = block.dim
    v = np.ones(dim) if seed_vector is None else np.asarray(seed_vector, dtype=float).copy()
    v /= np.linalg.norm(v)
    lam, res = 0.0, np.inf
    for it in range(1, max_iters + 1):
        w = block.apply(v)
        lam = float(v @ w)
        if lam <= 0:
            raise ConvergenceFailure("non-positive Rayleigh quotient", residual=np.inf, iterations=it)
        res = float(np.linalg.norm(w - lam * v) / lam)
        nw = np.linalg.norm(w)
        v = w / nw
        if res <= tol:
            return EigenResult(lam, v, it, res)
    raise ConvergenceFailure(f"power iteration stalled at residual {res:.3e}", residual=res, iterations=max_iters)


def dense_leading_eigenvalue(block: TransferBlock) -> float:
    return float(np.max(np.linalg.eigvals(block.to_dense()).real))


def eigen_ratios(N: int, r_max: int, c: float, tol: float = 1e-12):
    """lambda(V^[N/2 - r]) / lambda(V^[N/2]) for r = 0..r_max."""
    if N % 2:
        raise InvalidParameter("N must be even")
    if not 0 <= r_max <= N // 2:
        raise InvalidParameter("r_max must lie in 0..N/2")
    lams = []
    for r in range(r_max + 1):
        lams.append(leading_eigen(transfer_block(N, N // 2 - r, c), tol=tol))
    return [l.value / lams[0].value for l in lams], lams


def cylinder_partition_function(W: int, H: int, c):
    """trace(V_W^H) computed blockwise in exact arithmetic (object dtype for Fractions)."""
    V = dense_transfer(W, c)
    total = 0 * c
    for n in range(W + 1):
        st = sector_states(W, n)
        B = V[np.ix_(st, st)]
        P = np.identity(len(st), dtype=object) if V.dtype == object else np.identity(len(st))
        if V.dtype == object:
            P = P * (c / c)
        for _ in range(H):
            P = B.dot(P)
        total += sum(P[i, i] for i in range(len(st)))
    return total
