"""Ising model samplers and observables.

Spins are int8 arrays indexed like ``lat.sites``.  Fixed boundary spins are
represented by per-site counts of plus/minus outside neighbours, so the
same numba kernels serve free boxes, fixed boxes, chains and tori.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import BETA_C_2D
from .errors import DegenerateStatistic, InvalidParameter
from .gibbs import FREE, BoundaryCondition, ExactMeasure, expectation
from .rng import make_rng

UNIFORM_BUFFER = 1 << 20


@dataclass(frozen=True)
class IsingParams:
    beta: float
    lat: object
    bc: BoundaryCondition = FREE

    def __post_init__(self):
        if not self.beta >= 0:
            raise InvalidParameter(f"beta must be >= 0, got {self.beta}")

    def tables(self):
        nbr = self.lat.neighbor_table()
        ghost = np.zeros((self.lat.n_sites, 2), dtype=np.int64)  # (#plus, #minus)
        if self.bc.kind != "free":
            idx = self.lat.index
            for u, v in self.lat.boundary_pairs():
                s = self.bc.value_at(v)
                if s not in (-1, 1):
                    raise InvalidParameter(f"Ising boundary spin must be +-1, got {s!r}")
                ghost[idx[u], 0 if s == 1 else 1] += 1
        return nbr, ghost


@njit(cache=True)
def _glauber(state, nbr, ghost, beta, uniforms):
    V = state.shape[0]
    for i in range(V):
        h = ghost[i, 0] - ghost[i, 1]
        for k in range(nbr.shape[1]):
            j = nbr[i, k]
            if j < 0:
                break
            h += state[j]
        p_plus = 1.0 / (1.0 + math.exp(-2.0 * beta * h))
        state[i] = 1 if uniforms[i] < p_plus else -1


@njit(cache=True)
def _wolff(state, nbr, ghost, p_bond, uniforms, pos, stack, in_cluster):
    """One cluster flip; returns (new buffer position, cluster size).

    A cluster that bonds to a frozen boundary spin is left unflipped.
    """
    V = state.shape[0]
    seed = int(uniforms[pos] * V)
    pos += 1
    if seed >= V:
        seed = V - 1
    s = state[seed]
    top = 0
    stack[top] = seed
    top += 1
    in_cluster[seed] = True
    size = 1
    frozen = False
    while top > 0:
        top -= 1
        i = stack[top]
        # bonds to boundary spins of the same sign
        same = ghost[i, 0] if s == 1 else ghost[i, 1]
        for _ in range(same):
            if uniforms[pos] < p_bond:
                frozen = True
            pos += 1
        for k in range(nbr.shape[1]):
            j = nbr[i, k]
            if j < 0:
                break
            if state[j] == s and not in_cluster[j]:
                if uniforms[pos] < p_bond:
                    in_cluster[j] = True
                    stack[top] = j
                    top += 1
                    size += 1
                pos += 1
    for i in range(V):
        if in_cluster[i]:
            if not frozen:
                state[i] = -s
            in_cluster[i] = False
    return pos, size


def glauber_sweep(state, params: IsingParams, rng, tables=None):
    """Heat-bath update of every site once, in site order (in place)."""
    nbr, ghost = params.tables() if tables is None else tables
    _glauber(state, nbr, ghost, float(params.beta), rng.random(len(state)))
    return state


def wolff_step(state, params: IsingParams, rng, tables=None):
    """One Wolff cluster flip (in place); returns ``(state, cluster_size)``."""
    nbr, ghost = params.tables() if tables is None else tables
    V = len(state)
    need = 1 + V * (nbr.shape[1] + int(ghost.max(initial=0)) * 2)
    u = rng.random(need)
    stack = np.empty(V, dtype=np.int64)
    mark = np.zeros(V, dtype=np.bool_)
    _, size = _wolff(state, nbr, ghost, 1.0 - math.exp(-2.0 * params.beta), u, 0, stack, mark)
    return state, size


def initial_state(params: IsingParams, kind="plus", seed=0):
    V = params.lat.n_sites
    if kind == "plus":
        return np.ones(V, dtype=np.int8)
    if kind == "minus":
        return -np.ones(V, dtype=np.int8)
    if kind == "random":
        return np.where(make_rng(seed, 99).random(V) < 0.5, 1, -1).astype(np.int8)
    raise InvalidParameter(f"unknown initial state {kind!r}")


def sample_chain(params: IsingParams, n_samples: int, seed: int, method: str = "glauber", thin: int = 1,
                 burn_in: int = 100, init="plus", stream: int = 0) -> np.ndarray:
    """(n_samples, V) int8 spin samples taken every ``thin`` updates after burn-in.

    An update is a full sweep for Glauber and one cluster flip for Wolff.
    """
    if n_samples < 1 or thin < 1 or burn_in < 0:
        raise InvalidParameter("need n_samples >= 1, thin >= 1, burn_in >= 0")
    nbr, ghost = params.tables()
    state = init.astype(np.int8).copy() if isinstance(init, np.ndarray) else initial_state(params, init, seed)
    V = len(state)
    rng = make_rng(seed, stream)
    out = np.empty((n_samples, V), dtype=np.int8)
    beta = float(params.beta)
    total = burn_in + n_samples * thin
    if method == "glauber":
        block = max(1, min(total, UNIFORM_BUFFER // max(V, 1)))
        t = 0
        while t < total:
            m = min(block, total - t)
            u = rng.random((m, V))
            for r in range(m):
                _glauber(state, nbr, ghost, beta, u[r])
                t += 1
                k = t - burn_in
                if k > 0 and k % thin == 0:
                    out[k // thin - 1] = state
        return out
    if method != "wolff":
        raise InvalidParameter(f"unknown method {method!r}")
    p_bond = 1.0 - math.exp(-2.0 * beta)
    need = 1 + V * (nbr.shape[1] + 2 * int(ghost.max(initial=0)))
    size = max(UNIFORM_BUFFER, 4 * need)
    buf = rng.random(size)
    pos = 0
    stack = np.empty(V, dtype=np.int64)
    mark = np.zeros(V, dtype=np.bool_)
    for t in range(1, total + 1):
        if size - pos < need:
            buf = rng.random(size)
            pos = 0
        pos, _ = _wolff(state, nbr, ghost, p_bond, buf, pos, stack, mark)
        k = t - burn_in
        if k > 0 and k % thin == 0:
            out[k // thin - 1] = state
    return out


def magnetization(state) -> float:
    """Average spin (rows of a 2D array give one value per sample)."""
    s = np.asarray(state, dtype=float)
    return s.mean(axis=-1)


def two_point(source, u: int, v: int) -> float:
    """E[sigma_u sigma_v] from an ExactMeasure or from an (n, V) sample array."""
    if isinstance(source, ExactMeasure):
        return expectation(source, lambda s: s[:, u] * s[:, v])
    s = np.asarray(source, dtype=float)
    return float(np.mean(s[:, u] * s[:, v]))


def chain_correlation(beta: float, x: int) -> float:
    """Free 1D chain: C(0, x) = tanh(beta)^|x| (product of independent bond variables)."""
    return math.tanh(beta) ** abs(x)


@dataclass(frozen=True)
class LinearStatistic:
    phi: object  # callable on (n, d) arrays of rescaled points
    alpha: float


def _rescaled_points(lat):
    pts = np.array(lat.sites, dtype=float)
    if lat.periodic:
        half = lat.N / 2.0
        return (pts - half) / half, half
    N = float(lat.N)
    if lat.dim == 1:
        return pts[:, :1] / N, N
    return pts / N, N


def linear_statistic(state, stat: LinearStatistic, lat) -> np.ndarray:
    """N^-alpha sum_u sigma_u phi(u / N); one value per row of ``state``."""
    pts, N = _rescaled_points(lat)
    w = np.asarray(stat.phi(pts), dtype=float)
    w = np.broadcast_to(w, (len(pts),))
    if not np.all(np.isfinite(w)):
        raise InvalidParameter("test function is not finite on the lattice points")
    return (np.asarray(state, dtype=float) @ w) * N ** (-stat.alpha)


def torus_correlation(samples, L: int) -> np.ndarray:
    """C(r) for r = 0..L//2, averaged over translations and both axes."""
    s = np.asarray(samples, dtype=np.float64).reshape(len(samples), L, L)
    out = np.empty(L // 2 + 1)
    for r in range(L // 2 + 1):
        a = np.mean(s * np.roll(s, r, axis=2))
        b = np.mean(s * np.roll(s, r, axis=1))
        out[r] = 0.5 * (a + b)
    return out


def fit_power_law(r, C, window=(4, 16)) -> dict:
    """OLS of log C on log r for r in [lo, hi]: {slope, intercept, window, residual}."""
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    sel = (r >= window[0]) & (r <= window[1]) & (C > 0)
    if sel.sum() < 2:
        raise DegenerateStatistic("fewer than two positive points in the fit window")
    x, y = np.log(r[sel]), np.log(C[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "window": list(window), "residual": resid}


def critical_decay(L: int = 64, n_samples: int = 2000, seed: int = 0, window=(4, 16), thin: int = 5,
                   burn_in: int = 500) -> dict:
    """Wolff at the self-dual beta on an L x L torus; delta = -slope of log C vs log r."""
    from .lattice import build_torus

    params = IsingParams(BETA_C_2D, build_torus(L))
    samples = sample_chain(params, n_samples, seed, method="wolff", thin=thin, burn_in=burn_in)
    C = torus_correlation(samples, L)
    fit = fit_power_law(np.arange(len(C)), C, window)
    fit["delta"] = -fit["slope"]
    fit["correlation"] = C.tolist()
    return fit


def susceptibility_scan(L: int, betas, n_samples: int, seed: int, thin: int = 2, burn_in: int = 200):
    """chi(beta) = L^2 (E[m^2] - E[|m|]^2) on an L x L torus, Wolff dynamics."""
    from .lattice import build_torus

    lat = build_torus(L)
    out = []
    for k, b in enumerate(betas):
        samples = sample_chain(IsingParams(float(b), lat), n_samples, seed, method="wolff", thin=thin,
                               burn_in=burn_in, stream=k)
        m = np.abs(magnetization(samples))
        out.append(L * L * (np.mean(m**2) - np.mean(m) ** 2))
    return np.array(out)


def batch_stderr(x, n_batches: int = 20) -> float:
    """Standard error of the mean from batch means (handles autocorrelation)."""
    x = np.asarray(x, dtype=float)
    n = len(x) // n_batches
    if n < 1:
        raise DegenerateStatistic("too few samples for batch means")
    means = x[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))
