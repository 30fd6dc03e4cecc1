"""Command line front end.

Every command reads a JSON config (``--config``) and writes its artifacts to
``--out``.  Exit status: 0 on success, 1 on usage, parse or IO errors (a JSON
error object is printed), 2 when a bound, identity or certificate check
fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import EnsembleSpec, moment_from_norms, norm_samples, sample_matrix, trial_rng
from .errors import ConfigError, InsufficientTrials, SpecShatterError
from .matrixio import matrix_from_json, read_matrix
from .mc import bounds as B
from .mc.dominance import dominance_check
from .mc.engine import map_chunks
from .mc.gaps import GapExperimentConfig, run_gap_experiment
from .mc.kappa import KappaExperimentConfig, run_kappa_experiment
from .mc.smallball import QuadFormSpec, RectangularConfig, run_rectangular_experiment, run_smallball_experiment
from .mc.tails import TailExperimentConfig, geometric_grid, run_sv_tail_experiment
from .plotting import plot_grid, plot_loglog
from .pseudospectrum import (
    complex_eps_area,
    grid_sigma_min,
    limiting_ratios,
    rank_inclusion_check,
    real_axis_eps_length,
)
from .report import config_hash, to_jsonable, write_csv, write_json
from .resolvent import calibrate_convention, m11_invariance_check, merge_batches, resolvent_batch
from .spectral import eigen_decompose, gap_stats, kappa_V_upper, singular_values
from .submatrix import best_principal_submatrix, best_rectangular_submatrix

EXIT_OK, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2
SEED_ENV = "SPECSHATTER_SEED"

VERIFY_KINDS = (
    "sv-tail",
    "gap",
    "kappa",
    "smallball",
    "dominance",
    "moments",
    "resolvent",
    "rank-inclusion",
    "submatrix",
)
DETERMINISTIC = ("analyze", "pseudospec", "report")

TAIL_COLUMNS = ("eps", "count", "empirical", "band", "theoretical", "theoretical_raw", "vacuous", "verdict")


class Context:
    """Per-run settings shared by the command handlers."""

    def __init__(self, command, params, out, seed, threads, constants, base_dir):
        self.command = command
        self.params = params
        self.out = Path(out)
        self.seed = seed
        self.threads = int(threads)
        self.constants = constants
        self.base_dir = base_dir
        self.hash = config_hash(
            {"command": command, "params": params, "seed": seed, "constants": constants.to_json()}
        )

    @property
    def meta(self):
        return {"command": self.command, "config_hash": self.hash, "seed": self.seed, "version": __version__}

    def path(self, name):
        return self.out / name

    def require_seed(self):
        if self.seed is None:
            raise ConfigError(f"{self.command} is stochastic and needs a seed (--seed, config or {SEED_ENV})")
        return self.seed


# -- config helpers ----------------------------------------------------------


def _matrix_param(value, base_dir, name="matrix"):
    if value is None:
        raise ConfigError(f"missing {name}")
    if isinstance(value, str):
        path = Path(value)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"{name} file {path} does not exist")
        return read_matrix(path)
    if isinstance(value, dict) and "identity" in value:
        return np.eye(int(value["identity"]))
    if isinstance(value, dict) and "zeros" in value:
        shape = value["zeros"]
        shape = (shape, shape) if isinstance(shape, int) else tuple(shape)
        return np.zeros(shape)
    if isinstance(value, dict) and "sample" in value:
        draw = value["sample"]
        spec = EnsembleSpec.from_json(draw.get("ensemble"), base_dir)
        return sample_matrix(spec, int(draw.get("seed", 0)), int(draw.get("index", 0)))
    if isinstance(value, dict) and "columns_of_identity" in value:
        n, k = value["columns_of_identity"]
        return np.eye(int(n))[:, : int(k)]
    return matrix_from_json(value)


def _grid_param(value, name):
    if isinstance(value, dict) and "geomspace" in value:
        lo, hi, num = value["geomspace"]
        return geometric_grid(float(lo), float(hi), int(num))
    if isinstance(value, (list, tuple)) and value:
        return tuple(float(v) for v in value)
    raise ConfigError(f"{name} must be a list or {{'geomspace': [lo, hi, num]}}")


def _complex_param(value):
    if value is None:
        return 0j
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace("i", "j"))
    raise ConfigError(f"cannot parse complex value {value!r}")


def _ensemble(params, base_dir):
    if "ensemble" not in params:
        raise ConfigError("missing ensemble")
    return EnsembleSpec.from_json(params["ensemble"], base_dir)


def _get(params, key, default=None, required=False):
    if key not in params:
        if required:
            raise ConfigError(f"missing parameter {key!r}")
        return default
    return params[key]


def _status(ok):
    return EXIT_OK if ok else EXIT_ASSERT


def _tail_rows(rep):
    for i, e in enumerate(rep.eps):
        yield {
            "eps": e,
            "count": rep.counts[i],
            "empirical": rep.empirical_cdf[i],
            "band": rep.dkw_band,
            "theoretical": rep.theoretical[i],
            "theoretical_raw": rep.theoretical_raw[i],
            "vacuous": rep.vacuous[i],
            "verdict": rep.verdict[i],
        }


def _tail_summary(rep):
    out = to_jsonable(rep)
    out["ok"] = rep.ok
    out["bound_failures"] = rep.bound_failures
    return out


def _write_tail(ctx, stem, rep, extra=None, title=None):
    write_csv(ctx.path(f"{stem}.csv"), _tail_rows(rep), TAIL_COLUMNS, ctx.meta)
    payload = _tail_summary(rep)
    if extra:
        payload.update(to_jsonable(extra))
    write_json(ctx.path(f"{stem}.json"), payload, ctx.meta)
    if any(c > 0 for c in rep.counts):
        plot_loglog(ctx.path(f"{stem}.csv"), ctx.path(f"{stem}.svg"), title=title)


# -- commands ----------------------------------------------------------------


def cmd_analyze(ctx: Context):
    p = ctx.params
    M = _matrix_param(p.get("matrix"), ctx.base_dir)
    tau = p.get("tau_real")
    S = eigen_decompose(M, tau_real=tau)
    delta = float(p.get("delta", 0.0))
    out = {
        "n": S.n,
        "eigenvalues": S.eigenvalues,
        "kappas": S.kappas,
        "real_mask": S.real_mask,
        "overlap_diagonal": np.real(np.diag(S.overlap)),
        "overlap_trace": float(np.real(np.trace(S.overlap))),
        "kappa_V_upper": kappa_V_upper(S),
        "singular_values": singular_values(M),
        "tau_real": S.tau_real,
    }
    if S.n >= 2:
        out["gap_stats"] = gap_stats(S, delta)
    k = p.get("submatrix")
    if k is not None:
        X = M.real if np.isrealobj(M) else None
        if X is None or not np.allclose(X, X.T):
            X = (M.conj().T @ M).real
            out["submatrix_input"] = "gram M^T M"
        else:
            out["submatrix_input"] = "matrix"
        res = best_principal_submatrix(X, int(k), mode=p.get("submatrix_mode", "exhaustive"))
        out["submatrix"] = res
    write_json(ctx.path("analysis.json"), out, ctx.meta)
    return EXIT_OK


def cmd_pseudospec(ctx: Context):
    p = ctx.params
    M = _matrix_param(p.get("matrix"), ctx.base_dir)
    out = {}
    ok = True
    if "region" in p:
        res = p.get("resolution", [64, 64])
        res = (res, res) if isinstance(res, int) else tuple(res)
        grid = grid_sigma_min(M, p["region"], res)
        grid.to_csv(ctx.path("grid.csv"), ctx.meta)
        plot_grid(ctx.path("grid.csv"), ctx.path("grid.svg"))
        eps_list = p.get("eps", [])
        out["grid_counts"] = {repr(float(e)): grid.count(e) for e in eps_list}
    areas = []
    for e in p.get("area_eps", []):
        a = complex_eps_area(M, float(e), p.get("area_region"), int(p.get("area_resolution", 512)), detail=True)
        areas.append({"eps": float(e), "area": a.area, "area_with_strip": a.area_with_strip, "strip": a.strip})
    if areas:
        out["areas"] = areas
    lengths = []
    for e in p.get("length_eps", []):
        interval = p.get("interval")
        if interval is None:
            bound = float(np.linalg.norm(M, 2)) + 2 * float(e)
            interval = (-bound, bound)
        lengths.append({"eps": float(e), "length": real_axis_eps_length(M, float(e), interval)})
    if lengths:
        out["lengths"] = lengths
    lim = p.get("limits")
    if lim is not None:
        eps_list = lim.get("eps_list", [1e-3, 1e-4, 1e-5, 1e-6])
        lr = limiting_ratios(M, eps_list, resolution=int(lim.get("resolution", 512)))
        rtol_real = float(lim.get("real_rtol", 0.01))
        rtol_complex = float(lim.get("complex_rtol", 0.03))
        checks = {
            "real": _ratio_check(lr.real_ratios[-1], lr.real_target, rtol_real, lim.get("check_real", True)),
            "complex": _ratio_check(lr.complex_ratios[-1], lr.complex_target, rtol_complex, lim.get("check_complex", True)),
        }
        ok = all(c["pass"] is not False for c in checks.values())
        out["limits"] = {
            "eps": lr.eps,
            "real_ratios": lr.real_ratios,
            "complex_ratios": lr.complex_ratios,
            "targets": [lr.real_target, lr.complex_target],
            "real_converging": lr.real_converging,
            "complex_converging": lr.complex_converging,
            "checks": checks,
        }
    out["ok"] = ok
    write_json(ctx.path("pseudospec.json"), out, ctx.meta)
    return _status(ok)


def _ratio_check(value, target, rtol, enabled):
    if not enabled:
        return {"value": value, "target": target, "rtol": rtol, "pass": None}
    if target == 0:
        passed = abs(value) <= rtol
    else:
        passed = abs(value - target) <= rtol * abs(target)
    return {"value": value, "target": target, "rtol": rtol, "pass": bool(passed)}


def cmd_sv_tail(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    spec = _ensemble(p, ctx.base_dir)
    cfg = TailExperimentConfig(
        ensemble=spec,
        z=_complex_param(p.get("z")),
        k=int(p.get("k", 1)),
        eps_grid=_grid_param(_get(p, "eps_grid", required=True), "eps_grid"),
        trials=int(_get(p, "trials", required=True)),
        seed=seed,
        bound_id=p.get("bound_id", "real_shift_gaussian"),
        slope_range=p.get("slope_range"),
    )
    rep = run_sv_tail_experiment(cfg, ctx.constants, ctx.threads)
    ok = rep.ok
    extra = {"config": {"ensemble": spec.to_json(), "z": cfg.z, "k": cfg.k, "trials": cfg.trials, "bound_id": cfg.bound_id}}
    matched = p.get("matched_real")
    if matched is not None:
        real_cfg = TailExperimentConfig(
            ensemble=spec,
            z=complex(cfg.z.real, 0.0),
            k=cfg.k,
            eps_grid=cfg.eps_grid,
            trials=cfg.trials,
            seed=seed,
            bound_id=matched.get("bound_id", "real_shift_gaussian"),
        )
        real_rep = run_sv_tail_experiment(real_cfg, ctx.constants, ctx.threads)
        _write_tail(ctx, "sv_tail_real", real_rep, title="real shift")
        gap = None if rep.slope is None or real_rep.slope is None else rep.slope - real_rep.slope
        need = float(matched.get("min_slope_gap", 0.5))
        passed = gap is not None and gap >= need
        extra["matched_real"] = {"slope_real": real_rep.slope, "slope_gap": gap, "min_slope_gap": need, "pass": passed}
        ok = ok and passed and real_rep.ok
    extra["ok"] = ok
    _write_tail(ctx, "sv_tail", rep, extra, title=f"sigma_(n-k+1), z={cfg.z}")
    return _status(ok)


def cmd_gap(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    spec = _ensemble(p, ctx.base_dir)
    s_grid = _grid_param(_get(p, "s_grid", required=True), "s_grid")
    d_grid = p.get("delta_grid")
    cfg = GapExperimentConfig(
        ensemble=spec,
        s_grid=s_grid,
        delta_grid=None if d_grid is None else _grid_param(d_grid, "delta_grid"),
        trials=int(_get(p, "trials", required=True)),
        seed=seed,
        bound=p.get("bound", "gaussian"),
        R=float(p.get("R", 3.0)),
    )
    rep = run_gap_experiment(cfg, ctx.constants, ctx.threads)
    _write_tail(ctx, "gap", rep.gap, title="P[gap <= s]")
    _write_tail(ctx, "im_min", rep.im_min, title="P[Im_min <= delta]")
    summary = {
        "ok": rep.ok,
        "gap_ok": rep.gap.ok,
        "im_min_ok": rep.im_min.ok,
        "gap_all_vacuous": all(rep.gap.vacuous),
        "im_min_all_vacuous": all(rep.im_min.vacuous),
        "certificate": {
            "flagged": rep.flagged,
            "checked": rep.certificate_checked,
            "failures": rep.certificate_failures,
        },
        "notes": rep.notes,
        "config": {"ensemble": spec.to_json(), "trials": cfg.trials, "bound": cfg.bound},
    }
    write_json(ctx.path("gap_summary.json"), summary, ctx.meta)
    return _status(rep.ok)


def cmd_kappa(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    spec = _ensemble(p, ctx.base_dir)
    cfg = KappaExperimentConfig(
        ensemble=spec,
        real_interval=p.get("real_interval", (-2.0, 2.0)),
        complex_rect=p.get("complex_rect"),
        delta=float(p.get("delta", 0.1)),
        trials=int(_get(p, "trials", required=True)),
        seed=seed,
        eps1=float(p.get("eps1", 0.1)),
        eps2=float(p.get("eps2", 0.01)),
    )
    rep = run_kappa_experiment(cfg, ctx.constants, ctx.threads)
    payload = to_jsonable(rep)
    payload["ok"] = rep.ok
    payload["config"] = {"ensemble": spec.to_json(), "trials": cfg.trials}
    write_json(ctx.path("kappa.json"), payload, ctx.meta)
    return _status(rep.ok)


def cmd_smallball(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    ok = True
    payload = {}
    if "Z" in p:
        spec = QuadFormSpec(
            Z=_matrix_param(p["Z"], ctx.base_dir, "Z"),
            k=int(p.get("k", 1)),
            U=None if p.get("U") is None else _matrix_param(p["U"], ctx.base_dir, "U"),
            V=None if p.get("V") is None else _matrix_param(p["V"], ctx.base_dir, "V"),
            W=None if p.get("W") is None else _matrix_param(p["W"], ctx.base_dir, "W"),
            family=p.get("family", "real_ginibre"),
        )
        rep = run_smallball_experiment(spec, int(_get(p, "samples", required=True)), seed, ctx.constants, ctx.threads, p.get("rho"))
        payload["form"] = rep
        ok = ok and rep.ok
    rect = p.get("rectangular")
    if rect is not None:
        cfg = RectangularConfig(
            n=int(rect["n"]),
            j=int(rect["j"]),
            k=int(rect.get("k", 1)),
            family=rect.get("family", "real_ginibre"),
            s_grid=_grid_param(rect["s_grid"], "s_grid"),
            trials=int(rect.get("trials", 100_000)),
            seed=seed,
            slope_range=rect.get("slope_range"),
        )
        rrep = run_rectangular_experiment(cfg, ctx.constants, ctx.threads)
        _write_tail(ctx, "rectangular", rrep, title=f"sigma_k(V Y), j={cfg.j}, k={cfg.k}")
        payload["rectangular_ok"] = rrep.ok
        ok = ok and rrep.ok
    payload["ok"] = ok
    write_json(ctx.path("smallball.json"), payload, ctx.meta)
    return _status(ok)


def cmd_dominance(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    A1 = _matrix_param(p.get("A1"), ctx.base_dir, "A1")
    A2 = _matrix_param(p.get("A2"), ctx.base_dir, "A2")
    rep = dominance_check(A1, A2, float(p.get("t", 1.0)), int(_get(p, "trials", required=True)), seed, ctx.threads)
    rows = ({"i": i + 1, "max_deficit": d, "band": rep.band, "verdict": v} for i, (d, v) in enumerate(zip(rep.max_deficit, rep.verdict)))
    write_csv(ctx.path("dominance.csv"), rows, ("i", "max_deficit", "band", "verdict"), ctx.meta)
    payload = to_jsonable(rep)
    payload["ok"] = rep.ok
    write_json(ctx.path("dominance.json"), payload, ctx.meta)
    return _status(rep.ok)


def cmd_moments(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    spec = _ensemble(p, ctx.base_dir)
    ps = sorted(float(v) for v in p.get("p", [1, 2, 4, 8]))
    trials = int(_get(p, "trials", required=True))
    if trials < 100:
        raise InsufficientTrials(f"need at least 100 trials, got {trials}")
    if spec.A is not None and np.any(spec.A != 0) or spec.gamma != 1.0:
        raise ConfigError("norm moments are defined for A = 0 and gamma = 1")
    if any(q < 1 for q in ps):
        raise ConfigError("moment orders must be >= 1")
    norms = norm_samples(spec, trials, seed)
    ests = [moment_from_norms(norms, q) for q in ps]
    rows = []
    ok = True
    upper = p.get("upper_bound")
    if upper is None and spec.family == "real_ginibre":
        upper = B.GAUSSIAN_NORM_MOMENT
    for e in ests:
        applies = upper is not None and (spec.family != "real_ginibre" or e.p <= 2 * spec.n)
        passed = (e.mean_estimate + 3 * e.stderr <= upper) if applies else None
        ok = ok and passed is not False
        rows.append({"p": e.p, "estimate": e.mean_estimate, "stderr": e.stderr, "trials": e.trials, "upper": upper, "pass": passed})
    monotone = all(b.mean_estimate + 3 * b.stderr >= a.mean_estimate for a, b in zip(ests, ests[1:]))
    ok = ok and monotone
    write_csv(ctx.path("moments.csv"), rows, ("p", "estimate", "stderr", "trials", "upper", "pass"), ctx.meta)
    write_json(ctx.path("moments.json"), {"rows": rows, "monotone": monotone, "ok": ok}, ctx.meta)
    return _status(ok)


def cmd_resolvent(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    convention, scores = calibrate_convention()
    trials = int(p.get("trials", 1000))
    n_max, k_max = int(p.get("n_max", 12)), int(p.get("k_max", 3))
    parts = map_chunks(
        lambda s, c: resolvent_batch(seed, s, c, convention, n_max, k_max), trials, ctx.threads, chunk=128
    )
    batch = merge_batches(parts)
    inv = p.get("invariance", {"n": 8, "k": 2, "delta": 1.0, "trials": 1000})
    inv_rep = m11_invariance_check(int(inv["n"]), int(inv["k"]), float(inv["delta"]), int(inv["trials"]), seed, convention)
    ok = batch.ok and inv_rep.bitwise_constant and inv_rep.max_abs_correlation <= inv_rep.correlation_limit
    payload = {
        "convention": convention,
        "convention_scores": scores,
        "convention_note": "N_k is the corner of (delta i U - M)^{-1}; the block formulas are applied to M' = -M",
        "real_part_note": "the M'_12 Y U_21 term enters Re N_k^{-1} with a plus sign; the minus-sign variant is reported as printed_sign_max_mismatch",
        "trials": batch.trials,
        "max_mismatch": batch.max_mismatch,
        "batch": batch,
        "invariance": inv_rep,
        "ok": ok,
    }
    write_json(ctx.path("resolvent.json"), payload, ctx.meta)
    return _status(ok)


def cmd_rank_inclusion(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    rs = [int(r) for r in p.get("r", [2, 3])]
    pairs = int(p.get("pairs", 100))
    n = int(p.get("n", 3))
    region = p.get("region", [-2, 2, -2, 2])
    res = int(p.get("resolution", 20))
    rows = []
    for r in rs:
        worst, violations = 0.0, 0
        for t in range(pairs):
            rng = trial_rng(seed, t, stream=40 + r)
            A = rng.standard_normal((n, n)) / math.sqrt(n)
            N = n * r
            L = rng.standard_normal((N, r - 1))
            R = rng.standard_normal((r - 1, N))
            Mp = L @ R / N
            out = rank_inclusion_check(A, r, Mp, (region, (res, res)))
            worst = max(worst, out.max_violation)
            violations += int(not out.holds)
        rows.append({"r": r, "pairs": pairs, "violations": violations, "max_violation": worst})
    ok = all(row["violations"] == 0 for row in rows)
    write_csv(ctx.path("rank_inclusion.csv"), rows, ("r", "pairs", "violations", "max_violation"), ctx.meta)
    write_json(ctx.path("rank_inclusion.json"), {"rows": rows, "ok": ok}, ctx.meta)
    return _status(ok)


def cmd_submatrix(ctx: Context):
    p = ctx.params
    seed = ctx.require_seed()
    trials = int(p.get("trials", 1000))
    n = int(p.get("n", 6))
    ks = [int(k) for k in p.get("k", [1, 2, 3])]
    rows = []
    for k in ks:
        violations = interlacing = subsets = 0
        worst_margin = math.inf
        greedy_gap = 0.0
        for t in range(trials):
            rng = trial_rng(seed, t, stream=50)
            G = rng.standard_normal((n, int(p.get("wishart_dof", n))))
            X = G @ G.T
            ex = best_principal_submatrix(X, k)
            gr = best_principal_submatrix(X, k, mode="greedy")
            violations += int(ex.value < ex.bound - 1e-10)
            interlacing += ex.interlacing_violations
            subsets += ex.subsets_checked
            worst_margin = min(worst_margin, ex.value - ex.bound)
            greedy_gap = max(greedy_gap, gr.value - ex.value)
        rows.append(
            {
                "kind": "principal",
                "k": k,
                "trials": trials,
                "violations": violations,
                "interlacing_violations": interlacing,
                "subsets": subsets,
                "min_margin": worst_margin,
                "greedy_excess": greedy_gap,
            }
        )
    rect = p.get("rectangular", {"n": 8, "k": 2, "trials": 200})
    if rect:
        rn, rk, rt = int(rect["n"]), int(rect["k"]), int(rect.get("trials", 200))
        violations = interlacing = subsets = 0
        worst_margin = math.inf
        greedy_gap = 0.0
        for t in range(rt):
            R = trial_rng(seed, t, stream=51).standard_normal((rn, rk))
            ex = best_rectangular_submatrix(R)
            gr = best_rectangular_submatrix(R, mode="greedy")
            violations += int(ex.value < ex.bound - 1e-10)
            interlacing += ex.interlacing_violations
            subsets += ex.subsets_checked
            worst_margin = min(worst_margin, ex.value - ex.bound)
            greedy_gap = max(greedy_gap, gr.value - ex.value)
        rows.append(
            {
                "kind": "rectangular",
                "k": rk,
                "trials": rt,
                "violations": violations,
                "interlacing_violations": interlacing,
                "subsets": subsets,
                "min_margin": worst_margin,
                "greedy_excess": greedy_gap,
            }
        )
    ok = all(r["violations"] == 0 and r["interlacing_violations"] == 0 and r["greedy_excess"] <= 1e-10 for r in rows)
    cols = ("kind", "k", "trials", "violations", "interlacing_violations", "subsets", "min_margin", "greedy_excess")
    write_csv(ctx.path("submatrix.csv"), rows, cols, ctx.meta)
    write_json(ctx.path("submatrix.json"), {"rows": rows, "ok": ok}, ctx.meta)
    return _status(ok)


def cmd_report(ctx: Context):
    p = ctx.params
    src = _get(p, "report", required=True)
    path = Path(src)
    if not path.is_absolute() and ctx.base_dir is not None:
        path = Path(ctx.base_dir) / path
    if not path.exists():
        raise ConfigError(f"report {path} does not exist")
    kind = p.get("kind", "loglog")
    out = ctx.path(p.get("name", path.stem + ".svg"))
    if kind == "loglog":
        plot_loglog(path, out)
    elif kind == "grid":
        plot_grid(path, out)
    else:
        raise ConfigError(f"unknown plot kind {kind!r}")
    return EXIT_OK


HANDLERS = {
    "analyze": cmd_analyze,
    "pseudospec": cmd_pseudospec,
    "report": cmd_report,
    "verify.sv-tail": cmd_sv_tail,
    "verify.gap": cmd_gap,
    "verify.kappa": cmd_kappa,
    "verify.smallball": cmd_smallball,
    "verify.dominance": cmd_dominance,
    "verify.moments": cmd_moments,
    "verify.resolvent": cmd_resolvent,
    "verify.rank-inclusion": cmd_rank_inclusion,
    "verify.submatrix": cmd_submatrix,
}


# -- entry points --------------------------------------------------------------


def _resolve_seed(cli_seed, cfg_seed):
    for value in (cli_seed, cfg_seed, os.environ.get(SEED_ENV)):
        if value is not None and value != "":
            try:
                seed = int(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"seed must be an integer, got {value!r}") from exc
            if seed < 0:
                raise ConfigError("seed must be nonnegative")
            return seed
    return None


def run_config(cfg, out, seed=None, threads=1, constants=None, command=None, base_dir=None):
    """Run one configuration; returns the exit status.

    ``cfg`` is the parsed config object: either ``{"command", "seed",
    "params", "constants"}`` or a bare parameter object when ``command`` is
    given.  ``constants`` overrides the config's constants.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    command = command or cfg.get("command")
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}; expected one of {sorted(HANDLERS)}")
    if cfg.get("command") not in (None, command):
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}")
    params = cfg.get("params", {k: v for k, v in cfg.items() if k not in ("command", "seed", "constants")})
    if not isinstance(params, dict):
        raise ConfigError("params must be a JSON object")
    const = B.BoundConstants.from_json(constants if constants is not None else cfg.get("constants"))
    seed = _resolve_seed(seed, cfg.get("seed"))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(command, params, out, seed, threads, const, base_dir)
    return HANDLERS[command](ctx)


def _load_json(path, what):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError("io", f"cannot read {what} {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _UsageError("parse", f"{what} {path} is not valid JSON: {exc}") from exc


class _UsageError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def build_parser():
    parser = argparse.ArgumentParser(prog="specshatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help=f"random seed (falls back to the config, then ${SEED_ENV})")
    common.add_argument("--threads", type=int, default=1, help="worker threads; outputs do not depend on it")
    common.add_argument("--constants", help="JSON file overriding the universal constants")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="spectral summary of one matrix").add_argument(
        "--submatrix", help="also select a principal submatrix, e.g. k=2"
    )
    sub.add_parser("pseudospec", parents=[common], help="sigma_min grids, areas, lengths and limiting ratios")
    rep = sub.add_parser("report", parents=[common], help="render an SVG from a report CSV")
    rep.add_argument("report_file", nargs="?", help="report CSV (overrides the config)")
    rep.add_argument("--kind", choices=("loglog", "grid"), help="plot type")
    ver = sub.add_parser("verify", help="Monte Carlo and identity checks")
    vsub = ver.add_subparsers(dest="kind", required=True)
    for kind in VERIFY_KINDS:
        vsub.add_parser(kind, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command if args.command != "verify" else f"verify.{args.kind}"
    try:
        cfg = {} if args.config is None else _load_json(args.config, "config")
        base_dir = None if args.config is None else str(Path(args.config).resolve().parent)
        if not isinstance(cfg, dict):
            raise _UsageError("parse", "config must be a JSON object")
        cfg = dict(cfg)
        if command == "analyze" and getattr(args, "submatrix", None):
            key, _, val = args.submatrix.partition("=")
            params = dict(cfg.get("params", {k: v for k, v in cfg.items() if k not in ("command", "seed", "constants")}))
            params["submatrix"] = int(val if key == "k" else key)
            cfg = {"command": command, "seed": cfg.get("seed"), "params": params, "constants": cfg.get("constants")}
        if command == "report":
            params = dict(cfg.get("params", {k: v for k, v in cfg.items() if k not in ("command", "seed", "constants")}))
            if args.report_file:
                params["report"] = str(Path(args.report_file).resolve())
            if args.kind:
                params["kind"] = args.kind
            cfg = {"command": command, "params": params}
        constants = None if args.constants is None else _load_json(args.constants, "constants")
        status = run_config(cfg, args.out, args.seed, args.threads, constants, command=command, base_dir=base_dir)
    except _UsageError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}))
        return EXIT_USAGE
    except SpecShatterError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}))
        return EXIT_USAGE
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}))
        return EXIT_USAGE
    print(json.dumps({"command": command, "status": status, "out": str(args.out)}))
    return status


if __name__ == "__main__":
    sys.exit(main())
