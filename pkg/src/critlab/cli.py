"""Command-line experiment runner.

Every subcommand builds a JSON-like config, validates it against the same
schema used for ``--config`` files, runs it and prints a result envelope
(``--out json``) or a CSV table (``--out csv``).

Exit codes: 0 success, 2 invalid parameters, 3 capacity exceeded,
4 convergence failure.
"""

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import BETA_C_2D
from .errors import CapacityExceeded, ConvergenceFailure, CritlabError, InvalidParameter
from .io import (COMMANDS, ConfigError, EstimateRecord, ResultEnvelope, experiment_id, validate_config,
                 write_csv)

# --- argument parsing ---------------------------------------------------------------------


def _number(text: str):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return int(x) if x.is_integer() and "." not in text else x


def _numbers(text: str):
    vals = [_number(t) for t in text.split(",") if t.strip()]
    return vals[0] if len(vals) == 1 else vals


def _float_list(text: str):
    return [float(t) for t in text.split(",") if t.strip()]


def _bool(text: str):
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


_ARG_TYPES = {
    "p": _numbers, "beta": _numbers, "eta_grid": _float_list, "only": lambda s: s.split(","),
    "wired": _bool, "dual": _bool, "mode": str, "direction": str, "method": str, "tier": str, "mutate": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critlab", description="2D lattice model experiments")
    sub = parser.add_subparsers(dest="cmd", required=True)
    for cmd, props in COMMANDS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON config file; flags given here override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--replicas", type=_number)
        sp.add_argument("--out", choices=["json", "csv"])
        sp.add_argument("--tol", type=float)
        for key in props:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=_ARG_TYPES.get(key, _number))
    return parser


def config_from_args(ns) -> dict:
    doc = {}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("cmd", ns.cmd) != ns.cmd:
            raise ConfigError([("cmd", f"config is for {doc['cmd']!r}, not {ns.cmd!r}")])
    for k, v in vars(ns).items():
        if k != "config" and v is not None:
            doc[k] = v
    doc["cmd"] = ns.cmd
    return doc


def thread_count() -> int:
    """Replica-parallelism cap from CRITLAB_THREADS (default: available cores)."""
    raw = os.environ.get("CRITLAB_THREADS")
    if raw is None:
        return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameter(f"CRITLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InvalidParameter(f"CRITLAB_THREADS must be a positive integer, got {raw!r}")
    return n


# --- commands ---------------------------------------------------------------------------------
# Each returns (estimates, csv kind, csv rows, extra dict).


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _perco_cross(cfg):
    from .percolation import CrossingSpec, crossing_probability

    P = cfg.params
    n, mode = P.get("n", 11), P.get("mode", "mc")
    reps = cfg.replicas or 10**5
    spec = CrossingSpec(P.get("direction", "lr"))
    est, rows, extra = [], [], {}
    for p in _as_list(P.get("p", 0.5)):
        pe = Fraction(p).limit_denominator(10**12) if mode == "exact" else p
        r = crossing_probability(n, pe, mode=mode, replicas=reps, seed=cfg.seed, spec=spec,
                                 dual=P.get("dual", False))
        est.append(EstimateRecord(f"crossing[p={p}]", r.value, r.stderr, r.n))
        rows.append({"p": p, "n": n, "estimate": r.value, "stderr": r.stderr, "replicas": r.n, "seed": cfg.seed})
        if r.exact is not None:
            extra[f"exact[p={p}]"] = f"{r.exact.numerator}/{r.exact.denominator}"
    return est, "percolation", rows, extra


def _perco_theta(cfg):
    from .percolation import theta

    P = cfg.params
    n, mode = P.get("n", 6), P.get("mode", "exact")
    reps = cfg.replicas or 10**4
    est, rows = [], []
    for p in _as_list(P.get("p", 0.5)):
        pe = Fraction(p).limit_denominator(10**12) if mode == "exact" else p
        r = theta(n, pe, mode=mode, replicas=reps, seed=cfg.seed)
        est.append(EstimateRecord(f"theta[p={p}]", r.value, r.stderr, r.n))
        rows.append({"p": p, "n": n, "estimate": r.value, "stderr": r.stderr, "replicas": r.n, "seed": cfg.seed})
    return est, "percolation", rows, {}


def _ising_sample(cfg):
    from .ising import IsingParams, batch_stderr, magnetization, sample_chain
    from .lattice import build_torus

    P = cfg.params
    L, ns = P.get("l", 16), P.get("samples", 2000)
    lat = build_torus(L)
    est, rows = [], []
    for k, beta in enumerate(_as_list(P.get("beta", BETA_C_2D))):
        s = sample_chain(IsingParams(float(beta), lat), ns, cfg.seed, method=P.get("method", "wolff"),
                         thin=P.get("thin", 1), burn_in=P.get("burn_in", 200), stream=k)
        m = np.abs(magnetization(s))
        obs = {"abs_magnetization": m, "magnetization_sq": m**2}
        for name, x in obs.items():
            val, se = float(x.mean()), batch_stderr(x)
            est.append(EstimateRecord(f"{name}[beta={beta}]", val, se, ns))
            rows.append({"beta": beta, "observable": name, "estimate": val, "stderr": se, "n": ns, "seed": cfg.seed})
        chi = float(L * L * (np.mean(m**2) - np.mean(m) ** 2))
        est.append(EstimateRecord(f"susceptibility[beta={beta}]", chi, 0.0, ns))
        rows.append({"beta": beta, "observable": "susceptibility", "estimate": chi, "stderr": 0.0, "n": ns,
                     "seed": cfg.seed})
    return est, "ising", rows, {}


def _ising_corr(cfg):
    from .ising import IsingParams, fit_power_law, sample_chain, torus_correlation
    from .lattice import build_torus

    P = cfg.params
    L, ns, beta = P.get("l", 64), P.get("samples", 2000), float(P.get("beta", BETA_C_2D))
    window = (P.get("rmin", 4), P.get("rmax", 16))
    if not window[0] < window[1] <= L // 2:
        raise InvalidParameter("need rmin < rmax <= l/2")
    s = sample_chain(IsingParams(beta, build_torus(L)), ns, cfg.seed, method="wolff", thin=5, burn_in=500)
    C = torus_correlation(s, L)
    fit = fit_power_law(np.arange(len(C)), C, window)
    est = [EstimateRecord(f"C[r={r}]", float(c), 0.0, ns) for r, c in enumerate(C)]
    est.append(EstimateRecord("delta", -fit["slope"], 0.0, ns))
    rows = [{"beta": beta, "observable": f"C(r={r})", "estimate": float(c), "stderr": 0.0, "n": ns,
             "seed": cfg.seed} for r, c in enumerate(C)]
    return est, "ising", rows, {"fit": fit}


def _current_check(cfg):
    from .acceptance import small_connected_graphs
    from .currents import current_correlation
    from .gibbs import enumerate_measure, ising_model
    from .ising import two_point

    P = cfg.params
    nmax = P.get("nmax", 20)
    worst, worst_err, n = -np.inf, 0.0, 0
    for g in small_connected_graphs(P.get("max_edges", 6)):
        for beta in _as_list(P.get("beta", [0.2, 0.5, 1.0])):
            m = enumerate_measure(ising_model(beta), g)
            for x, y in combinations(range(g.n_sites), 2):
                r = current_correlation(g, beta, (x, y), n_max=nmax)
                err = abs(r.value - two_point(m, x, y))
                worst, worst_err, n = max(worst, err - r.bound), max(worst_err, err), n + 1
    extra = {"within_bound": bool(worst <= 0)}
    if cfg.tol is not None:
        extra["within_tol"] = bool(worst_err <= cfg.tol)
    return [EstimateRecord("max_abs_error", worst_err, 0.0, n),
            EstimateRecord("max_error_minus_bound", float(worst), 0.0, n)], "generic", None, extra


def _fk_sample(cfg):
    from .fk import FKParams, fk_theta, self_dual_point

    P = cfg.params
    q, n = float(P.get("q", 2.0)), P.get("n", 4)
    mode, sweeps = P.get("mode", "mc"), P.get("sweeps", 20000)
    est, rows = [], []
    for p in _as_list(P.get("p", self_dual_point(q))):
        val = fk_theta(n, FKParams(q, float(p)), mode=mode, wired=P.get("wired", False), sweeps=sweeps,
                       seed=cfg.seed, burn_in=P.get("burn_in", 1000))
        val = float(val)
        nn = sweeps if mode == "mc" else 0
        est.append(EstimateRecord(f"theta[q={q},p={p}]", val, 0.0, nn))
        rows.append({"q": q, "p": p, "n": n, "observable": "theta", "estimate": val, "stderr": 0.0,
                     "seed": cfg.seed})
    return est, "fk", rows, {}


def _fk_es_check(cfg):
    from .acceptance import small_connected_graphs
    from .fk import FKParams, connection_probability, fk_exact, ising_edge_probability
    from .gibbs import enumerate_measure, ising_model
    from .ising import two_point

    P = cfg.params
    worst, n = 0.0, 0
    for g in small_connected_graphs(P.get("max_edges", 6)):
        for beta in _as_list(P.get("beta", [0.2, 0.5, 1.0])):
            fk = fk_exact(g, FKParams(2.0, ising_edge_probability(beta)))
            m = enumerate_measure(ising_model(beta), g)
            for x, y in combinations(range(g.n_sites), 2):
                worst = max(worst, abs(connection_probability(fk, x, y) - two_point(m, x, y)))
                n += 1
    tol = cfg.tol if cfg.tol is not None else 1e-10
    return [EstimateRecord("max_es_error", worst, 0.0, n)], "generic", None, {"pass": bool(worst <= tol)}


def _sixv_spectrum(cfg):
    from .sixvertex import c_of_q, leading_eigen, transfer_block

    P = cfg.params
    N, q = P.get("n", 12), float(P.get("q", 9.0))
    rmax = P.get("rmax", 3)
    if rmax > N // 2:
        raise InvalidParameter(f"rmax must be at most n/2 = {N // 2}")
    c = c_of_q(q)
    tol = cfg.tol if cfg.tol is not None else 1e-12
    est, rows, lam0 = [], [], None
    for r in range(rmax + 1):
        n = N // 2 - r
        res = leading_eigen(transfer_block(N, n, c), tol=tol, max_iters=P.get("iters", 100000))
        lam0 = res.value if lam0 is None else lam0
        est.append(EstimateRecord(f"lambda[n={n}]", res.value, res.residual, res.iterations))
        est.append(EstimateRecord(f"ratio[r={r}]", res.value / lam0, 0.0, res.iterations))
        rows.append({"N": N, "n": n, "c": c, "lambda": res.value, "iters": res.iterations, "residual": res.residual})
    return est, "sixvertex", rows, {"c": c}


def _osss_verify(cfg):
    from .osss import randomized_suite

    P = cfg.params
    inst = P.get("instances", 1000)
    violations, min_slack = randomized_suite(inst, cfg.seed, P.get("edges", 4))
    return ([EstimateRecord("violations", violations, 0.0, inst), EstimateRecord("min_slack", min_slack, 0.0, inst)],
            "generic", None, {"instances": inst, "violations": violations, "min_slack": min_slack})


def _phi4_cumulants(cfg):
    from .lattice import build_torus
    from .phi4 import FieldStatistic, Phi4Params, gaussianity_report, phi4_chain, xi_statistic

    P = cfg.params
    L = P.get("l", 32)
    lat = build_torus(L)
    thin = P.get("thin", 10)
    n = max(1, int(P.get("sweeps", 10**5)) // thin)
    run = phi4_chain(Phi4Params(float(P.get("g", 1.0)), float(P.get("nu", -0.5)), lat), n, cfg.seed, thin=thin,
                     burn_in=P.get("burn_in", 2000))
    xi = xi_statistic(run.samples, FieldStatistic(lambda x: np.ones(len(x)), M=L, normalize=False), lat)
    rep = gaussianity_report(xi / L)
    keys = ("mean", "variance", "k3", "k4", "excess_kurtosis")
    est = [EstimateRecord(k, rep[k], rep[f"{k}_stderr"], rep["n"]) for k in keys]
    return est, "generic", None, {"report": rep, "acceptance": run.acceptance, "width": run.width}


def _blockspin_law(cfg):
    from .phi4 import BlockSpinSpec, block_spin_law

    P = cfg.params
    supp, pmf = block_spin_law(BlockSpinSpec(P.get("k", 2), P.get("a", 0.5), P.get("delta", 1.0),
                                             P.get("sign", 1)))
    est = [EstimateRecord(f"P[{s:g}]", float(w), 0.0, 0) for s, w in zip(supp, pmf)]
    return est, "generic", None, {"support": supp.tolist(), "pmf": pmf.tolist()}


def _homotopy_dist(cfg):
    from .homotopy import DEFAULT_ETAS, critical_fk_loops, ensemble_distance, match_rates, rotate_family

    P = cfg.params
    ns, M = P.get("samples", 64), P.get("m", 64)
    etas = tuple(P.get("eta_grid", DEFAULT_ETAS))
    A = critical_fk_loops(M, ns, cfg.seed)
    A2 = critical_fk_loops(M, ns, cfg.seed + 1)
    RB = [rotate_family(F, math.pi / 2) for F in critical_fk_loops(M, ns, cfg.seed + 2)]
    d_same, c_same = ensemble_distance(A, A2, etas, return_costs=True)
    d_rot, c_rot = ensemble_distance(A, RB, etas, return_costs=True)
    est = [EstimateRecord("d_reseeded", d_same, float(np.std(c_same, ddof=1) / math.sqrt(ns)) if ns > 1 else 0.0, ns),
           EstimateRecord("d_rotated", d_rot, float(np.std(c_rot, ddof=1) / math.sqrt(ns)) if ns > 1 else 0.0, ns)]
    extra = {"match_rates_reseeded": {str(k): v for k, v in match_rates(A, A2, etas).items()},
             "match_rates_rotated": {str(k): v for k, v in match_rates(A, RB, etas).items()},
             "matched_cost": {"reseeded": d_same, "rotated": d_rot}}
    return est, "generic", None, extra


def _embed_check(cfg):
    from .lattice import IsoradialSequence, check_isoradial, isoradial_embed, swap_rows
    from .rng import make_rng

    P = cfg.params
    W, rows, cols, amax = P.get("windows", 100), P.get("rows", 10), P.get("cols", 9), P.get("amax", 1.2)
    rng = make_rng(cfg.seed)
    lo = -(rows // 2)
    dev, length, invol = 0.0, 0.0, True
    for _ in range(W):
        alpha = IsoradialSequence(lo, tuple(rng.uniform(-amax, amax, rows)))
        emb = isoradial_embed(alpha, range(lo, lo + rows), range(-(cols // 2), cols - cols // 2))
        dev = max(dev, check_isoradial(emb)[0])
        for a, b in emb.diamond_edges():
            length = max(length, abs(float(np.linalg.norm(emb.positions[a] - emb.positions[b])) - 1))
        j = int(rng.integers(lo, lo + rows - 1))
        invol &= swap_rows(swap_rows(alpha, j), j) == alpha
    tol = cfg.tol if cfg.tol is not None else 1e-9
    return ([EstimateRecord("max_radius_deviation", dev, 0.0, W), EstimateRecord("max_edge_length_error", length, 0.0, W)],
            "generic", None, {"swap_involution": bool(invol), "pass": bool(dev <= tol and invol)})


def _accept(cfg):
    from .acceptance import acceptance_suite

    P = cfg.params
    results = acceptance_suite(P.get("tier", "fast"), P.get("only"), P.get("mutate", "none"),
                               echo=lambda s: print(s, file=sys.stderr, flush=True))
    est = [EstimateRecord(r.id, bool(r.passed), 0.0, 0) for r in results]
    report = [{"id": r.id, "title": r.title, "passed": bool(r.passed), "measured": r.measured,
               "seconds": round(r.seconds, 3), "error": r.error} for r in results]
    return est, "generic", None, {"report": report, "passed": sum(r.passed for r in results), "total": len(results)}


DISPATCH = {
    "perco-cross": _perco_cross, "perco-theta": _perco_theta, "ising-sample": _ising_sample,
    "ising-corr": _ising_corr, "current-check": _current_check, "fk-sample": _fk_sample,
    "fk-es-check": _fk_es_check, "sixv-spectrum": _sixv_spectrum, "osss-verify": _osss_verify,
    "phi4-cumulants": _phi4_cumulants, "blockspin-law": _blockspin_law, "homotopy-dist": _homotopy_dist,
    "embed-check": _embed_check, "accept": _accept,
}


def run(cfg):
    """Execute a validated config; returns (envelope, csv kind, csv rows)."""
    t0 = time.perf_counter()
    est, kind, rows, extra = DISPATCH[cfg.cmd](cfg)
    if not est:
        raise CritlabError("experiment produced no estimates")
    params = dict(cfg.params)
    if cfg.replicas is not None:
        params["replicas"] = cfg.replicas
    if cfg.tol is not None:
        params["tol"] = cfg.tol
    env = ResultEnvelope(experiment_id(cfg.cmd, params, cfg.seed), params, cfg.seed, est,
                         runtime_ms=round(1000 * (time.perf_counter() - t0), 3), extra=extra)
    if rows is None:
        kind = "generic"
        rows = [{"name": e.name, "value": e.value, "stderr": e.stderr, "n": e.n} for e in est]
    return env, kind, rows


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        thread_count()  # kernels are serial; the cap is validated so bad values fail early
        cfg = validate_config(config_from_args(ns))
        env, kind, rows = run(cfg)
    except ConfigError as exc:
        for path, msg in exc.violations:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return exc.exit_code
    except CapacityExceeded as exc:
        print(f"error: capacity exceeded ({exc}); dimension={exc.dimension}", file=sys.stderr)
        return exc.exit_code
    except ConvergenceFailure as exc:
        print(f"error: no convergence ({exc}); residual={exc.residual}, iterations={exc.iterations}",
              file=sys.stderr)
        return exc.exit_code
    except CritlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if cfg.out == "csv":
        sys.stdout.write(write_csv(rows, kind))
    else:
        sys.stdout.write(env.to_json() + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
