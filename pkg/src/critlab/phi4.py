"""Lattice phi^4 fields, block spins, the lattice GFF and Gaussianity diagnostics.

Two parametrisations are kept side by side:

* (g, nu) form:  H(phi) = sum_x [g/4 phi_x^4 + nu/2 phi_x^2] + 1/2 sum_<xy> (phi_x - phi_y)^2
  at unit temperature, so g = 0, nu = m^2 is the massive GFF with covariance
  (m^2 - Delta)^-1.
* alpha form:    beta [ sum_u (sigma_u^4 - alpha sigma_u^2) + 1/2 sum_<uv> (sigma_u - sigma_v)^2 ]

Substituting phi = sqrt(beta) sigma maps the second onto the first with
g = 4 / beta and nu = -2 alpha.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate

from .errors import (CapacityExceeded, DegenerateStatistic, InvalidParameter, SingularCovariance)
from .gibbs import FREE, BoundaryCondition, EnergyModel, Quadrature, energy_tables
from .rng import make_rng

MAX_BLOCK_SPINS = 22


@dataclass(frozen=True)
class Phi4Params:
    g: float
    nu: float
    lat: object
    bc: BoundaryCondition = FREE

    def __post_init__(self):
        if self.g < 0:
            raise InvalidParameter("quartic coupling g must be >= 0")
        if self.g == 0 and self.nu <= 0:
            raise InvalidParameter("g = 0 needs nu > 0 for a normalisable measure")

    @classmethod
    def from_alpha(cls, alpha: float, beta: float, lat, bc: BoundaryCondition = FREE):
        if beta <= 0:
            raise InvalidParameter("beta must be > 0")
        return cls(g=4.0 / beta, nu=-2.0 * alpha, lat=lat, bc=bc)

    def to_alpha(self):
        """(alpha, beta) of the equivalent alpha-form model; needs g > 0."""
        if self.g <= 0:
            raise InvalidParameter("the alpha form needs g > 0")
        return -self.nu / 2.0, 4.0 / self.g

    def site_energy(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 0.25 * self.g * phi**4 + 0.5 * self.nu * phi**2

    def energy_model(self, quad: Quadrature = None) -> EnergyModel:
        quad = Quadrature.gauss_legendre(32, -5.0, 5.0) if quad is None else quad
        return EnergyModel(states=quad, pair=lambda e, s, t: 0.5 * (s - t) ** 2,
                           single_site=lambda u, s: self.site_energy(s), beta=1.0)


def alpha_form_energy(sigma, alpha: float, edges=()) -> float:
    s = np.asarray(sigma, dtype=float)
    pair = sum(0.5 * (s[a] - s[b]) ** 2 for a, b in edges)
    return float(np.sum(s**4 - alpha * s**2) + pair)


# --- Metropolis sampler --------------------------------------------------------


@njit(cache=True)
def _phi4_sweeps(phi, nbr, field_lin, field_const, g, nu, width, uniforms, out, stride):
    """Sequential Metropolis sweeps; boundary bonds enter through field_lin/const.

    Site energy including pair terms: g/4 x^4 + nu/2 x^2 + sum_nbr 1/2 (x - phi_j)^2
    + deg_out/2 x^2 - field_lin x (fixed outside values).
    """
    V = phi.shape[0]
    accepted = 0
    n = uniforms.shape[0]
    for t in range(n):
        for i in range(V):
            x = phi[i]
            y = x + width * (2.0 * uniforms[t, i, 0] - 1.0)
            dE = 0.25 * g * (y**4 - x**4) + 0.5 * nu * (y * y - x * x)
            dE += 0.5 * field_const[i] * (y * y - x * x) - field_lin[i] * (y - x)
            for k in range(nbr.shape[1]):
                j = nbr[i, k]
                if j < 0:
                    break
                dE += 0.5 * ((y - phi[j]) ** 2 - (x - phi[j]) ** 2)
            if dE <= 0.0 or uniforms[t, i, 1] < math.exp(-dE):
                phi[i] = y
                accepted += 1
        if stride > 0 and (t + 1) % stride == 0:
            out[(t + 1) // stride - 1] = phi
    return accepted


def _boundary_fields(params: Phi4Params):
    V = params.lat.n_sites
    lin, const = np.zeros(V), np.zeros(V)
    if params.bc.kind != "free":
        idx = params.lat.index
        for u, v in params.lat.boundary_pairs():
            val = float(params.bc.value_at(v))
            lin[idx[u]] += val
            const[idx[u]] += 1.0
    return lin, const


@dataclass
class Phi4Run:
    samples: np.ndarray
    width: float
    acceptance: float


def phi4_sweep(state, params: Phi4Params, width: float, rng) -> float:
    """One in-place Metropolis sweep; returns the acceptance fraction."""
    nbr = params.lat.neighbor_table()
    lin, const = _boundary_fields(params)
    u = rng.random((1, len(state), 2))
    acc = _phi4_sweeps(state, nbr, lin, const, float(params.g), float(params.nu), float(width), u,
                       np.empty((1, len(state))), 0)
    return acc / len(state)


def phi4_chain(params: Phi4Params, n_samples: int, seed: int, thin: int = 1, burn_in: int = 1000,
               width=None, target=(0.3, 0.5), stream: int = 0, chunk: int = 4096, init=None) -> Phi4Run:
    """Samples every ``thin`` sweeps; proposal width tuned during burn-in, then frozen."""
    if n_samples < 1 or thin < 1:
        raise InvalidParameter("need n_samples >= 1 and thin >= 1")
    nbr = params.lat.neighbor_table()
    lin, const = _boundary_fields(params)
    V = params.lat.n_sites
    rng = make_rng(seed, stream)
    phi = np.zeros(V) if init is None else np.asarray(init, dtype=float).copy()
    g, nu = float(params.g), float(params.nu)
    dummy = np.empty((1, V))
    w = 1.0 if width is None else float(width)
    # warm-up in blocks of 50 sweeps, adjusting the width when tuning
    done = 0
    while done < burn_in:
        n = min(50, burn_in - done)
        acc = _phi4_sweeps(phi, nbr, lin, const, g, nu, w, rng.random((n, V, 2)), dummy, 0) / (n * V)
        if width is None:
            if acc < target[0]:
                w *= 0.8
            elif acc > target[1]:
                w *= 1.25
        done += n
    out = np.empty((n_samples, V))
    total = n_samples * thin
    done = 0
    accepted = 0
    per = max(thin, (chunk // thin) * thin)
    while done < total:
        n = min(per, total - done)
        buf = np.empty((n // thin, V))
        accepted += _phi4_sweeps(phi, nbr, lin, const, g, nu, w, rng.random((n, V, 2)), buf, thin)
        out[done // thin: done // thin + n // thin] = buf
        done += n
    return Phi4Run(out, w, accepted / (total * V))


# --- block spins -----------------------------------------------------------------


@dataclass(frozen=True)
class BlockSpinSpec:
    K: int
    a: np.ndarray
    delta: float = 1.0
    sign: int = 1  # +1: exp(+sum a_ij s_i s_j) (aligning); -1: exp(-sum a_ij s_i s_j)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim == 0:
            a = np.full((self.K, self.K), float(a))
            np.fill_diagonal(a, 0.0)
        object.__setattr__(self, "a", a)
        if self.K < 1:
            raise InvalidParameter("K must be >= 1")
        if a.shape != (self.K, self.K):
            raise InvalidParameter("coupling matrix must be K x K")
        if np.any(a < 0):
            raise InvalidParameter("block-spin couplings must be nonnegative")
        if self.delta <= 0:
            raise InvalidParameter("delta must be > 0")
        if self.sign not in (1, -1):
            raise InvalidParameter("sign must be +1 or -1")


def block_spin_law(spec: BlockSpinSpec):
    """(support delta * {-K, -K+2, .., K}, pmf) of delta * sum_i s_i."""
    K = spec.K
    if K > MAX_BLOCK_SPINS:
        raise CapacityExceeded(f"2^{K} block configurations", dimension=K)
    codes = np.arange(2**K, dtype=np.int64)
    s = 2 * ((codes[:, None] >> np.arange(K)) & 1).astype(float) - 1
    energy = np.einsum("ni,ij,nj->n", s, spec.a, s)
    logw = spec.sign * energy
    w = np.exp(logw - logw.max())
    sums = s.sum(axis=1).astype(int)
    support = np.arange(-K, K + 1, 2)
    pmf = np.array([w[sums == k].sum() for k in support])
    return spec.delta * support, pmf / pmf.sum()


# --- statistics ------------------------------------------------------------------


@dataclass(frozen=True)
class FieldStatistic:
    f: object
    M: float
    normalize: bool = True


def _points(lat):
    pts = np.array(lat.sites, dtype=float)
    if getattr(lat, "periodic", False):
        pts = pts - lat.N / 2.0
    return pts[:, : getattr(lat, "dim", 2)]


def xi_statistic(samples, stat: FieldStatistic, lat) -> np.ndarray:
    """xi = sum_x phi_x f(x / M), optionally divided by its sample standard deviation."""
    if stat.M < 1:
        raise InvalidParameter("scale M must be >= 1")
    w = np.broadcast_to(np.asarray(stat.f(_points(lat) / stat.M), dtype=float), (lat.n_sites,))
    xi = np.asarray(samples, dtype=float) @ w
    if not stat.normalize:
        return xi
    if len(xi) < 2:
        raise DegenerateStatistic("normalisation needs at least two samples")
    sd = xi.std(ddof=1)
    if not sd > 0:
        raise DegenerateStatistic("statistic has zero variance")
    return xi / sd


def _cumulants(x):
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    m2, m3, m4 = (c**2).mean(), (c**3).mean(), (c**4).mean()
    return np.array([x.mean(), m2, m3, m4 - 3 * m2**2, (m4 - 3 * m2**2) / m2**2 if m2 > 0 else np.nan])


def gaussianity_report(values, n_batches: int = 20) -> dict:
    """Cumulants up to order four with batch-means standard errors.

    The verdict is Gaussian when |k4| is below three standard errors.
    """
    x = np.asarray(values, dtype=float)
    if len(x) < 1000:
        raise InvalidParameter("gaussianity_report needs at least 1000 values")
    names = ["mean", "variance", "k3", "k4", "excess_kurtosis"]
    full = _cumulants(x)
    n = len(x) // n_batches
    per = np.array([_cumulants(x[i * n:(i + 1) * n]) for i in range(n_batches)])
    se = per.std(axis=0, ddof=1) / math.sqrt(n_batches)
    out = {k: float(v) for k, v in zip(names, full)}
    out.update({f"{k}_stderr": float(v) for k, v in zip(names, se)})
    out["n"] = len(x)
    out["gaussian"] = bool(abs(full[3]) < 3 * se[3]) if se[3] > 0 else bool(abs(full[3]) == 0)
    return out


def iid_linear_statistic(N: int, replicas: int, seed: int, alpha: float = 1.0) -> np.ndarray:
    """I = N^-alpha sum_{u in Lambda_N} sigma_u for iid fair +-1 spins and phi = 1.

    The spin sum is drawn as 2 Binomial(|Lambda_N|, 1/2) - |Lambda_N|, which has the
    same law as summing the field site by site.
    """
    n_sites = ((2 * N + 1) ** 2 + 1) // 2
    rng = make_rng(seed)
    s = 2 * rng.binomial(n_sites, 0.5, size=replicas) - n_sites
    return s / float(N) ** alpha


def iid_field(n_sites: int, replicas: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    return np.where(rng.random((replicas, n_sites)) < 0.5, 1.0, -1.0)


def variance_scaling_exponent(sizes, replicas: int, seed: int) -> float:
    """Slope of log Var(sum of iid +-1 spins) against log(site count)."""
    v = []
    for k, n in enumerate(sizes):
        x = iid_field(n, replicas, seed + k).sum(axis=1)
        v.append(x.var(ddof=1))
    return float(np.polyfit(np.log(sizes), np.log(v), 1)[0])


# --- Gaussian free field -----------------------------------------------------------


def laplacian_eigenvalues(L: int, d: int = 2) -> np.ndarray:
    k = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(L) / L)
    if d == 1:
        return k
    if d == 2:
        return k[:, None] + k[None, :]
    raise InvalidParameter("only d = 1, 2 supported")


def gff_variance(L: int, m: float, d: int = 2, project_zero_mode: bool = False) -> float:
    lam = laplacian_eigenvalues(L, d) + m * m
    inv = np.zeros_like(lam)
    mask = lam > 0
    if project_zero_mode:
        mask.flat[0] = False
    elif not np.all(mask):
        raise SingularCovariance("massless field needs the zero mode projected out")
    inv[mask] = 1.0 / lam[mask]
    return float(inv.sum() / L**d)


def gff_field(L: int, m: float, seed: int, n_samples: int = 1, d: int = 2, project_zero_mode: bool = False,
              stream: int = 0) -> np.ndarray:
    """Samples of shape (n_samples, L, ...) with covariance (m^2 - Delta)^-1 on the torus."""
    if L < 2:
        raise InvalidParameter("torus side must be >= 2")
    if m < 0:
        raise InvalidParameter("mass must be >= 0")
    if m == 0 and not project_zero_mode:
        raise SingularCovariance("massless field needs the zero mode projected out")
    lam = laplacian_eigenvalues(L, d) + m * m
    scale = np.zeros_like(lam)
    keep = lam > 0
    if project_zero_mode:
        keep.flat[0] = False
    scale[keep] = 1.0 / np.sqrt(lam[keep])
    rng = make_rng(seed, stream)
    axes = tuple(range(1, d + 1))
    white = rng.standard_normal((n_samples,) + (L,) * d)
    return np.real(np.fft.ifftn(np.fft.fftn(white, axes=axes) * scale, axes=axes))


# --- single-site marginals -----------------------------------------------------------


def well_mass(alpha: float, radius: float = 0.1, beta: float = 1.0) -> float:
    """Mass of exp(-beta(s^4 - alpha s^2)) within radius of +-sqrt(alpha/2)."""
    if alpha <= 0:
        raise InvalidParameter("alpha must be > 0 for a double well")
    s0 = math.sqrt(alpha / 2.0)
    vmin = -alpha**2 / 4.0

    def dens(s):
        return math.exp(-beta * (s**4 - alpha * s**2 - vmin))

    hi = s0 + 4.0 + 2.0 / math.sqrt(max(alpha, 1e-9))
    total = 2.0 * integrate.quad(dens, 0.0, hi, points=[s0], limit=200)[0]
    near = 2.0 * integrate.quad(dens, max(0.0, s0 - radius), s0 + radius, limit=200)[0]
    return near / total

