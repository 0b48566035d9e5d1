"""Acceptance criteria A1..A18 as runnable checks.

Each check returns a :class:`CriterionResult` holding the measured values.
Failures are reported, never raised.  ``mutate`` injects a deliberately
wrong duality convention so that the suite can show A1 catching it.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import BETA_C_2D

FULL_ONLY = ("A4", "A5", "A11", "A18")
ALL_IDS = tuple(f"A{k}" for k in range(1, 19))
MUTATIONS = ("none", "dual-direction", "dual-complement")


@dataclass
class CriterionResult:
    id: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        body = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        extra = f" [{self.error}]" if self.error else ""
        return f"{self.id:<4} {tag}  {self.title}: {body}{extra} ({self.seconds:.1f}s)"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)) and len(v) > 6:
        return f"[{len(v)} values]"
    return str(v)


def small_connected_graphs(max_edges: int):
    """All connected simple graphs with 1..max_edges edges, one per isomorphism class."""
    import networkx as nx

    from .lattice import graph_from_edges

    out = []
    for G in nx.graph_atlas_g():
        if 1 <= G.number_of_edges() <= max_edges and nx.is_connected(G):
            out.append(graph_from_edges(sorted(G.edges()), sites=tuple(sorted(G.nodes()))))
    return out


# --- percolation ---------------------------------------------------------------------


def a1(mutate: str = "none") -> CriterionResult:
    from .fk import all_edge_configs
    from .lattice import build_box
    from .percolation import LEFT_RIGHT, TOP_BOTTOM, batch_source_target, crossing_problem, crossing_probability

    half = Fraction(1, 2)
    exact = {N: crossing_probability(N, half, mode="exact").exact for N in (1, 2, 3)}
    dual_spec = LEFT_RIGHT if mutate == "dual-direction" else TOP_BOTTOM
    bad = {}
    for N in (1, 2):
        lat = build_box(N, even_only=True)
        bits = all_edge_configs(lat.n_edges).astype(bool)
        dual_bits = bits if mutate == "dual-complement" else ~bits
        v, e, m, lo, hi = crossing_problem(lat, LEFT_RIGHT)
        primal = batch_source_target(len(v), e, bits[:, m], lo, hi)
        v, e, m, lo, hi = crossing_problem(lat, dual_spec, dual=True)
        dual = batch_source_target(len(v), e, dual_bits[:, m], lo, hi)
        bad[N] = int(np.count_nonzero(primal == dual))
    ok = all(p == half for p in exact.values()) and not any(bad.values())
    return CriterionResult("A1", "exact crossing 1/2 and duality", ok, {
        **{f"p_{N}": str(p) for N, p in exact.items()},
        **{f"xor_failures_N{N}": b for N, b in bad.items()}})


def a2(seed: int = 0) -> CriterionResult:
    from .percolation import crossing_probability

    est = {p: crossing_probability(11, p, mode="mc", replicas=10**5, seed=seed) for p in (0.45, 0.5, 0.55)}
    mid = est[0.5]
    z = (mid.value - 0.5) / mid.stderr
    ok = abs(z) <= 3 and est[0.45].value < 0.5 < est[0.55].value
    return CriterionResult("A2", "MC crossing at N=11", ok, {
        "p045": est[0.45].value, "p050": mid.value, "stderr": mid.stderr, "z": z, "p055": est[0.55].value})


# --- Ising and currents ------------------------------------------------------------------


def a3() -> CriterionResult:
    from .gibbs import enumerate_measure, ising_model
    from .ising import chain_correlation, two_point
    from .lattice import build_chain

    worst = 0.0
    lat = build_chain(7)
    for beta in (0.2, 0.5, 1.0):
        m = enumerate_measure(ising_model(beta), lat)
        for x in range(7):
            c = two_point(m, 0, x)
            worst = max(worst, abs(c - math.tanh(beta) ** x), abs(c - chain_correlation(beta, x)))
    return CriterionResult("A3", "1D two-point tanh(beta)^x", worst <= 1e-10, {"max_error": worst})


def a4(seed: int = 0) -> CriterionResult:
    from .ising import susceptibility_scan

    betas = np.round(np.arange(0.36, 0.5201, 0.01), 3)
    chi = susceptibility_scan(32, betas, 10000, seed)
    peak = float(betas[int(np.argmax(chi))])
    return CriterionResult("A4", "susceptibility peak on 32^2 torus", 0.40 <= peak <= 0.48,
                           {"beta_peak": peak, "chi_max": float(chi.max()), "beta_c": BETA_C_2D})


def a5(seed: int = 0) -> CriterionResult:
    from .ising import critical_decay

    fit = critical_decay(64, 2000, seed)
    return CriterionResult("A5", "critical two-point decay on 64^2", 0.15 <= fit["delta"] <= 0.35,
                           {"delta": fit["delta"], "residual": fit["residual"]})


def a6() -> CriterionResult:
    from .currents import current_correlation
    from .gibbs import enumerate_measure, ising_model
    from .ising import two_point
    from .lattice import graph_from_edges

    graphs = small_connected_graphs(6)
    worst_excess, checked = -np.inf, 0
    for g in graphs:
        for beta in (0.2, 0.5, 1.0):
            m = enumerate_measure(ising_model(beta), g)
            for x, y in combinations(range(g.n_sites), 2):
                est = current_correlation(g, beta, (x, y), n_max=20)
                worst_excess = max(worst_excess, abs(est.value - two_point(m, x, y)) - est.bound)
                checked += 1
    single = graph_from_edges([(0, 1)])
    edge_err = max(abs(current_correlation(single, b, (0, 1), 20).value - math.tanh(b)) for b in (0.2, 0.5, 1.0))
    ok = worst_excess <= 0 and edge_err <= 1e-8
    return CriterionResult("A6", "random-current two-point", ok, {
        "graphs": len(graphs), "pairs_checked": checked, "max_error_minus_bound": float(worst_excess),
        "single_edge_error": edge_err})


def a7() -> CriterionResult:
    from .currents import tree_bound_check
    from .gibbs import enumerate_measure, ising_model
    from .lattice import build_rectangle

    min_slack, n = np.inf, 0
    for w, h in ((2, 2), (3, 2)):
        lat = build_rectangle(w, h)
        for beta in (0.2, 0.44, 0.8):
            m = enumerate_measure(ising_model(beta), lat)
            for xs in combinations(range(lat.n_sites), 4):
                min_slack = min(min_slack, tree_bound_check(m, *xs)[2])
                n += 1
    return CriterionResult("A7", "tree bound slack", min_slack >= 0, {"cases": n, "min_slack": float(min_slack)})


# --- FK ------------------------------------------------------------------------------------


def a8() -> CriterionResult:
    from .fk import FKParams, connection_probability, fk_exact, ising_edge_probability, self_dual_point
    from .gibbs import enumerate_measure, ising_model
    from .ising import two_point
    from .osss import fk_cube_measure, product_measure

    graphs = small_connected_graphs(6)
    rng = np.random.default_rng(12345)
    bern = 0.0
    for g in graphs:
        p = rng.uniform(0.05, 0.95, g.n_edges)
        bern = max(bern, float(np.max(np.abs(fk_cube_measure(g, FKParams(1.0, p)).probs
                                             - product_measure(p).probs))))
    es = 0.0
    for g in graphs:
        for beta in (0.2, 0.5, 1.0):
            fk = fk_exact(g, FKParams(2.0, ising_edge_probability(beta)))
            ising = enumerate_measure(ising_model(beta), g)
            for x, y in combinations(range(g.n_sites), 2):
                es = max(es, abs(connection_probability(fk, x, y) - two_point(ising, x, y)))
    sd1 = self_dual_point(1)
    sd2 = abs(self_dual_point(2) - (1 - math.exp(-2 * BETA_C_2D)))
    ok = bern <= 1e-12 and es <= 1e-10 and sd1 == 0.5 and sd2 <= 1e-12
    return CriterionResult("A8", "FK q=1 Bernoulli, Edwards-Sokal, self-dual points", ok, {
        "bernoulli_error": bern, "es_error": es, "self_dual_1": sd1, "self_dual_2_error": sd2})


def a9() -> CriterionResult:
    from .fk import FKParams
    from .osss import fk_cube_measure, is_monotonic

    graphs = small_connected_graphs(5)
    rng = np.random.default_rng(777)
    failures, n = 0, 0
    for g in graphs:
        for q in (1.0, 1.5, 2.0, 3.0, 4.0):
            for p in (np.full(g.n_edges, 0.5), rng.uniform(0.05, 0.95, g.n_edges)):
                ok, _ = is_monotonic(fk_cube_measure(g, FKParams(q, p)))
                failures += not ok
                n += 1
    return CriterionResult("A9", "FK conditionals increasing", failures == 0,
                           {"graphs": len(graphs), "measures": n, "failures": failures})


def a10(seed: int = 0) -> CriterionResult:
    from .osss import DecisionTree, osss_verify, randomized_suite, uniform_measure

    violations, min_slack = randomized_suite(1000, seed, 4)
    tight = osss_verify(uniform_measure(1), np.array([0.0, 1.0]), DecisionTree(0))
    ok = violations == 0 and min_slack >= -1e-12 and tight.slack == 0.0
    return CriterionResult("A10", "OSSS inequality", ok, {
        "violations": violations, "min_slack": min_slack, "single_edge_slack": tight.slack})


def a11(seed: int = 0) -> CriterionResult:
    from .percolation import theta

    ns = np.arange(1, 7)
    th = np.array([theta(int(n), Fraction(3, 10)).value for n in ns])
    slope = float(np.polyfit(ns, np.log(th), 1)[0])
    radii = (1, 2, 4, 8, 16, 32, 64)
    sup = {n: theta(n, 0.7, mode="mc", replicas=2000, seed=seed) for n in radii}
    low = min(e.value for e in sup.values())
    ok = slope < -0.1 and low >= 0.5
    return CriterionResult("A11", "sharpness dichotomy at q=1", ok, {
        "slope_p03": slope, "theta6_p03": float(th[-1]), "min_theta_p07": low, "theta64_p07": sup[64].value})


# --- six-vertex -------------------------------------------------------------------------


def a12() -> CriterionResult:
    from math import comb

    from .sixvertex import (TilingBoundary, cylinder_partition_function, dense_leading_eigenvalue, dense_transfer,
                            enumerate_tilings, leading_eigen, sector_states, transfer_block)

    dims_ok = all(len(sector_states(N, n)) == comb(N, n) for N in range(1, 9) for n in range(N + 1))
    c = Fraction(3, 2)
    leak = 0
    for N in (2, 4):
        V = dense_transfer(N, c)
        pop = np.array([bin(s).count("1") for s in range(2**N)])
        leak += sum(V[i, j] != 0 for i in range(2**N) for j in range(2**N) if pop[i] != pop[j])
    trace_bad = []
    for W in range(1, 9):
        for H in range(1, 17 // W + 1):
            if W * H > 16:
                continue
            tr = cylinder_partition_function(W, H, c)
            _, en = enumerate_tilings(W, H, c, TilingBoundary("torus"))
            if tr != en:
                trace_bad.append((W, H))
    eig_err, min_perron = 0.0, np.inf
    for q in (4.0, 9.0):
        cc = math.sqrt(2 + math.sqrt(q))
        for N in range(1, 7):
            for n in range(N + 1):
                blk = transfer_block(N, n, cc)
                res = leading_eigen(blk, tol=1e-13)
                eig_err = max(eig_err, abs(res.value - dense_leading_eigenvalue(blk)) / res.value)
                min_perron = min(min_perron, float(res.vector.min()))
    ok = dims_ok and leak == 0 and not trace_bad and eig_err <= 1e-10 and min_perron > 0
    return CriterionResult("A12", "six-vertex blocks, traces, spectra", ok, {
        "dims_ok": dims_ok, "off_block_entries": int(leak), "trace_mismatches": len(trace_bad),
        "max_eig_rel_error": eig_err, "min_perron_entry": min_perron})


def a13() -> CriterionResult:
    from .sixvertex import c_of_q, eigen_ratios

    c4 = c_of_q(4)
    ratios = {}
    for N in (8, 10, 12):
        r, _ = eigen_ratios(N, N // 2, c_of_q(9))
        ratios[N] = r
    ok = c4 == 2 and all(np.all(np.isfinite(r)) and np.all(np.array(r) > 0) for r in ratios.values())
    return CriterionResult("A13", "c(q) and eigenvalue ratios", ok, {
        "c_of_4": c4, **{f"r1_N{N}": float(r[1]) for N, r in ratios.items()}})


# --- Gaussian fields --------------------------------------------------------------------


def a14(seed: int = 0) -> CriterionResult:
    from .phi4 import gaussianity_report, iid_linear_statistic

    v = iid_linear_statistic(100, 10**4, seed)
    var = float(v.var(ddof=1))
    kurt = gaussianity_report(iid_linear_statistic(100, 10**5, seed))["excess_kurtosis"]
    exact = ((2 * 100 + 1) ** 2 + 1) / 2 / 100**2
    ok = abs(var - 2) <= 0.02 * 2 and abs(kurt) < 0.05
    return CriterionResult("A14", "iid CLT variance and kurtosis", ok, {
        "variance": var, "rel_error": abs(var - 2) / 2, "exact_finite_N": exact, "excess_kurtosis": kurt})


def a15() -> CriterionResult:
    from .gibbs import enumerate_measure, joint_cumulant
    from .lattice import build_chain
    from .phi4 import Phi4Params, well_mass

    lat = build_chain(4)
    k4 = {}
    for g in (0.5, 1.0, 2.0):
        for nu in (-1.0, 0.0, 1.0):
            m = enumerate_measure(Phi4Params(g, nu, lat).energy_model(), lat)
            total = lambda s: s.sum(axis=1)  # noqa: E731
            k4[(g, nu)] = joint_cumulant(m, [total] * 4)
    conc = [well_mass(g) for g in (10.0, 100.0)]  # V = s^4 - g s^2
    worst = max(k4.values())
    ok = worst <= 0 and conc[0] < conc[1]
    return CriterionResult("A15", "phi4 fourth cumulant sign and large-g concentration", ok, {
        "max_k4": float(worst), "conc_g10": conc[0], "conc_g100": conc[1]})


def a16() -> CriterionResult:
    from .phi4 import BlockSpinSpec, block_spin_law

    worst_norm, worst_sym, worst_hand = 0.0, 0.0, 0.0
    rng = np.random.default_rng(99)
    for K in range(1, 9):
        for sign in (1, -1):
            a = rng.uniform(0, 0.5, (K, K))
            a = np.triu(a, 1) + np.triu(a, 1).T
            _, pmf = block_spin_law(BlockSpinSpec(K, a, 0.5, sign))
            worst_norm = max(worst_norm, abs(pmf.sum() - 1))
            worst_sym = max(worst_sym, float(np.max(np.abs(pmf - pmf[::-1]))))
    for a in (0.0, 0.3, 1.0):
        for sign in (1, -1):
            supp, pmf = block_spin_law(BlockSpinSpec(2, a, 1.0, sign))
            same, diff = math.exp(sign * 2 * a), math.exp(-sign * 2 * a)
            Z = 2 * same + 2 * diff
            hand = np.array([same / Z, 2 * diff / Z, same / Z])
            worst_hand = max(worst_hand, float(np.max(np.abs(pmf - hand))))
    ok = worst_norm <= 1e-12 and worst_sym <= 1e-12 and worst_hand <= 1e-12
    return CriterionResult("A16", "block-spin laws", ok, {
        "norm_error": worst_norm, "symmetry_error": worst_sym, "hand_error": worst_hand})


# --- geometry -------------------------------------------------------------------------------


def a17(seed: int = 0) -> CriterionResult:
    from .lattice import IsoradialSequence, check_isoradial, isoradial_embed, swap_rows

    rng = np.random.default_rng(seed)
    worst_dev, worst_len, invol = 0.0, 0.0, True
    for _ in range(100):
        alpha = IsoradialSequence(-4, tuple(rng.uniform(-1.2, 1.2, 10)))
        emb = isoradial_embed(alpha, range(-4, 6), range(-4, 5))
        worst_dev = max(worst_dev, check_isoradial(emb)[0])
        for a, b in emb.diamond_edges():
            worst_len = max(worst_len, abs(float(np.linalg.norm(emb.positions[a] - emb.positions[b])) - 1))
        j = int(rng.integers(-4, 5))
        invol &= swap_rows(swap_rows(alpha, j), j) == alpha
    ok = worst_dev < 1e-9 and worst_len <= 1e-12 and invol
    return CriterionResult("A17", "isoradial embeddings", ok, {
        "max_radius_deviation": worst_dev, "max_edge_length_error": worst_len, "swap_involution": invol})


def _angle_winding(loop, point) -> int:
    d = np.asarray(loop) - point
    ang = np.arctan2(d[:, 1], d[:, 0])
    return int(round(np.sum(np.angle(np.exp(1j * np.diff(ang)))) / (2 * math.pi)))


def a18(seed: int = 0) -> CriterionResult:
    from .homotopy import PunctureGrid, crossings, rotation_check

    rng = np.random.default_rng(seed)
    grid = PunctureGrid(0.25, 1.0)
    bad = 0
    for _ in range(50):
        k = int(rng.integers(5, 40))
        t = np.sort(rng.uniform(0, 2 * math.pi, k))
        r = rng.uniform(0.2, 0.9, k)
        c = rng.uniform(-0.4, 0.4, 2)
        loop = np.column_stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)])
        if rng.random() < 0.5:
            loop = loop[::-1]
        loop = np.vstack([loop, loop[:1]])
        idx, sign = crossings(loop, grid)
        ws = np.bincount(idx, weights=sign, minlength=len(grid)).astype(int)
        wa = np.array([_angle_winding(loop, p) for p in grid.points])
        bad += int(np.any(ws != wa))
    rot = rotation_check(64, 64, seed)
    same = rot["d_reseeded"] == rot["d_rotated"]
    ok = bad == 0 and (same or abs(rot["z"]) <= 2.0)
    return CriterionResult("A18", "homotopy words and pi/2 rotation", ok, {
        "winding_mismatches": bad, "d_reseeded": rot["d_reseeded"], "d_rotated": rot["d_rotated"],
        "z": rot["z"]})


CRITERIA = {
    "A1": a1, "A2": a2, "A3": a3, "A4": a4, "A5": a5, "A6": a6, "A7": a7, "A8": a8, "A9": a9,
    "A10": a10, "A11": a11, "A12": a12, "A13": a13, "A14": a14, "A15": a15, "A16": a16, "A17": a17,
    "A18": a18,
}


def tier_ids(tier: str):
    if tier == "full":
        return ALL_IDS
    if tier == "fast":
        return tuple(i for i in ALL_IDS if i not in FULL_ONLY)
    raise ValueError(f"unknown tier {tier!r}")


def run_criterion(cid: str, mutate: str = "none") -> CriterionResult:
    fn = CRITERIA[cid]
    t0 = time.perf_counter()
    try:
        res = fn(mutate) if cid == "A1" else fn()
    except Exception as exc:  # a crash is a failed criterion, not an aborted suite
        res = CriterionResult(cid, fn.__name__, False, error=f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def acceptance_suite(tier: str = "fast", only=None, mutate: str = "none", echo=None) -> list:
    if mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}")
    ids = tier_ids(tier) if not only else tuple(only)
    out = []
    for cid in ids:
        res = run_criterion(cid, mutate)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
