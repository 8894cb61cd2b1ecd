"""Declarative run configurations: validation, stage execution, resume.

A configuration is a JSON document:

    {
      "output_root": "out",                # optional; env/CLI can override
      "coefficients": {"alpha1": -0.15},   # optional overrides
      "stages": [
        {"name": "check", "kind": "validate-coefficients"},
        {"name": "fig2", "kind": "reproduce-figure", "figure": "fig2"},
        ...
      ]
    }

Stages run in order; a manifest under the output root records completion so
a rerun with the byte-identical configuration skips finished stages.  A
changed configuration must go to a fresh output root (or the old manifest
removed) - silently mixing outputs of different configs is refused.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from pathlib import Path

import numpy as np

from .analytic import (
    AnalyticEquilibrium,
    all_equilibria,
    critical_inverse_anchoring,
    fold_pair,
    solve_type1_slopes,
    solve_type2_slopes,
    solve_type34_intercepts,
)
from .asymptotics import (
    composite_large_g,
    center_transition_width,
    layer_width,
    small_g_correction,
)
from .branchdb import BranchDatabase
from .bvp import ConvergenceError, continue_in_G, detect_fold, reconstruct_velocity
from .coefficients import (
    DEFAULT_COEFFICIENTS,
    LeslieCoefficients,
    flow_alignment_angle,
    validate,
)
from .dynamics import (
    SWEEP_DT,
    Schedule,
    TimeStepperConfig,
    equilibrium_db,
    evolve,
    find_critical_C,
    find_critical_t1,
    make_initial,
    match_steady_state,
    sweep_outcomes,
)
from .figures import FIGURE_IDS, reproduce_figure
from .grid import DEFAULT_NPOINTS
from .manifest import RunManifest, write_csv
from .stability import linearized_spectrum

__all__ = ["UsageError", "run_stage", "run_config", "STAGE_KINDS",
           "default_output_root"]

ENV_OUTPUT_ROOT = "NEMCHANNEL_OUT"


class UsageError(ValueError):
    """Configuration or argument error (CLI exit code 1)."""


def default_output_root() -> Path:
    return Path(os.environ.get(ENV_OUTPUT_ROOT, "nemchannel-out"))


def _seed_from(family: str, n: int, B: float,
               intercept_index: int = 0) -> AnalyticEquilibrium:
    k = abs(n)
    if family == "I":
        slopes = solve_type1_slopes(B)
        if k >= slopes.size:
            raise ConvergenceError(
                f"Type I slope a_{k} does not exist at B = {B:g}")
        return AnalyticEquilibrium("I", n, math.copysign(slopes[k], n) if n
                                   else 0.0, 0.0)
    if family == "II":
        slopes = solve_type2_slopes(B)
        if k >= slopes.size:
            raise ConvergenceError(
                f"Type II slope a_{k} does not exist at B = {B:g}")
        return AnalyticEquilibrium("II", n, math.copysign(slopes[k], n) if n
                                   else 0.0, math.pi / 2.0)
    if family in ("III", "IV"):
        pair = solve_type34_intercepts(B, n, family)
        if not pair:
            raise ConvergenceError(
                f"Type {family} n={n} does not exist at B = {B:g}")
        offset = 0.25 if family == "III" else 0.75
        return AnalyticEquilibrium(family, n, (n + offset) * math.pi,
                                   pair[intercept_index])
    raise UsageError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# stage executors (shared by CLI subcommands and run-config)
# ---------------------------------------------------------------------------

def _stage_validate(params: dict, out: Path, c: LeslieCoefficients) -> dict:
    report = validate(c)
    payload = dataclasses.asdict(report)
    path = out / "validation.json"
    out.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1))
    return {"files": [path], "summary": payload,
            "failed": not report.passed}


def _stage_statics_analytic(params: dict, out: Path,
                            c: LeslieCoefficients) -> dict:
    B = float(params["B"])
    a_max = float(params.get("a_max", 4.0 * math.pi))
    rows = [(e.family, e.n, e.a, e.b, e.omega)
            for e in all_equilibria(B, a_max)]
    files = [write_csv(out / "equilibria.csv",
                       ["family", "n", "a", "b", "omega"], rows)]
    fold_rows = []
    for i in range(1, 9):
        fam, lo, hi = fold_pair(i)
        fold_rows.append((fam, i, lo, hi, critical_inverse_anchoring(fam, i)))
    files.append(write_csv(out / "folds.csv",
                           ["family", "i", "lower", "upper", "B_star"],
                           fold_rows))
    return {"files": files,
            "summary": {"B": B, "count": len(rows)}}


def _stage_statics_solve(params: dict, out: Path,
                         c: LeslieCoefficients) -> dict:
    G = float(params["G"])
    B = float(params["B"])
    family = params.get("family", "I")
    n = int(params.get("n", 0))
    n_points = int(params.get("n_points", DEFAULT_NPOINTS))
    seed = _seed_from(family, n, B, int(params.get("intercept_index", 0)))
    targets = [x for x in (0.25 * G, 0.5 * G, 0.75 * G) if x > 0.0] + \
        ([G] if G > 0.0 else [])
    branch = continue_in_G(seed, B, targets, c, n_points=n_points,
                           residual_tol=params.get("residual_tol"))
    if branch.terminated_by != "bound":
        raise ConvergenceError(
            f"branch fold-terminated before reaching G = {G:g}")
    prof = branch.last.profile
    u = reconstruct_velocity(prof, G, c)
    files = [write_csv(out / "profile.csv", ["z", "theta", "u"],
                       zip(prof.z, prof.theta, u))]
    return {"files": files,
            "summary": {"omega": branch.last.omega,
                        "residual_norm": prof.residual_norm}}


def _stage_continue(params: dict, out: Path, c: LeslieCoefficients) -> dict:
    family = params.get("family", "I")
    n = int(params.get("n", 0))
    B = float(params["B"])
    targets = [float(g) for g in params["G_targets"]]
    n_points = int(params.get("n_points", DEFAULT_NPOINTS))
    seed = _seed_from(family, n, B, int(params.get("intercept_index", 0)))
    branch = continue_in_G(seed, B, targets, c, n_points=n_points,
                           residual_tol=params.get("residual_tol"))
    db = BranchDatabase(out / params.get("db", "branches"))
    db.add_branch(branch)
    rows = [(p.G, p.B, p.omega, p.profile.residual_norm)
            for p in branch.points]
    files = [write_csv(out / "branch.csv",
                       ["G", "B", "omega", "residual_norm"], rows),
             db.index_path]
    return {"files": files,
            "summary": {"points": len(branch.points),
                        "terminated_by": branch.terminated_by}}


def _stage_folds(params: dict, out: Path, c: LeslieCoefficients) -> dict:
    i = int(params["i"])
    G = float(params.get("G", 0.0))
    B_hi = float(params.get("B_hi", 2.5))
    fam, lo_n, hi_n = fold_pair(i)
    analytic = critical_inverse_anchoring(fam, abs(i)) if G == 0.0 else \
        float("nan")
    B0 = float(params.get("B_start",
                          0.8 * critical_inverse_anchoring(fam, abs(i))))
    lower = _seed_from(fam, lo_n, B0)
    upper = _seed_from(fam, hi_n, B0)
    n_points = int(params.get("n_points", DEFAULT_NPOINTS))
    b_lo = continue_in_G(lower, B0, [G] if G > 0 else [], c, n_points=n_points)
    b_up = continue_in_G(upper, B0, [G] if G > 0 else [], c, n_points=n_points)
    b_star = detect_fold((b_lo.last.profile, b_up.last.profile), G, B0, B_hi, c)
    files = [write_csv(out / "fold.csv",
                       ["i", "G", "B_star_numeric", "B_star_analytic"],
                       [(i, G, b_star, analytic)])]
    return {"files": files,
            "summary": {"B_star": b_star, "analytic": analytic}}


def _stage_stability(params: dict, out: Path, c: LeslieCoefficients) -> dict:
    family = params.get("family", "I")
    n = int(params.get("n", 0))
    B = float(params["B"])
    G = float(params.get("G", 0.0))
    k = int(params.get("k", 6))
    seed = _seed_from(family, n, B, int(params.get("intercept_index", 0)))
    if G > 0.0:
        branch = continue_in_G(seed, B, [G], c)
        prof = branch.last.profile
    else:
        prof = seed.to_profile()
    rep = linearized_spectrum(prof, B, G, k=k, c=c)
    files = [write_csv(out / "spectrum.csv", ["rank", "eigenvalue"],
                       list(enumerate(rep.spectrum_prefix, start=1)))]
    return {"files": files,
            "summary": {"leading_eigenvalue": rep.leading_eigenvalue,
                        "verdict": rep.verdict}}


def _stage_asymptotics(params: dict, out: Path,
                       c: LeslieCoefficients) -> dict:
    regime = params.get("regime", "small")
    B = float(params["B"])
    g_values = [float(g) for g in params.get(
        "G_values", [0.05, 0.1, 0.2] if regime == "small"
        else [100.0, 500.0, 1000.0])]
    rows = []
    if regime == "small":
        family = params.get("family", "II")
        n = int(params.get("n", 1))
        seed = _seed_from(family, n, B)
        corr = small_g_correction(seed, B, c)
        for G in g_values:
            branch = continue_in_G(seed, B, [G], c)
            dev = float(np.max(np.abs(branch.last.profile.theta
                                      - corr.composite(G).theta)))
            rows.append((G, dev))
        files = [write_csv(out / "small_g_error.csv", ["G", "sup_error"],
                           rows)]
        summary = {"C": corr.C, "D": corr.D}
    elif regime == "large":
        k1 = int(params.get("k1", 0))
        k2 = int(params.get("k2", 0))
        n_fine = int(params.get("n_points", 2001))
        seed = _seed_from(params.get("family", "I"), int(params.get("n", 0)), B)
        ladder = [g for g in (0.25, 0.5, 1, 2, 4, 7, 10, 20, 40, 70, 100,
                              200, 350, 500, 700, 1000) if g < max(g_values)]
        branch = continue_in_G(seed, B, sorted(set(ladder) | set(g_values)),
                               c, n_points=n_fine, residual_tol=1e-8)
        full = {p.G: p.profile for p in branch.points}
        s0 = flow_alignment_angle(c)
        sgn = (1, -1)
        for G in g_values:
            comp = composite_large_g(k1, k2, G, B, signs=sgn, c=c,
                                     n_points=n_fine)
            sup = float(np.max(np.abs(full[G].theta - comp.theta)))
            wl, wr = layer_width(comp)
            wc = center_transition_width(comp, fraction=0.05)
            rows.append((G, sup, wl, wr, wc))
        files = [write_csv(out / "large_g_error.csv",
                           ["G", "sup_error", "w_wall_left", "w_wall_right",
                            "w_center"], rows)]
        summary = {"k1": k1, "k2": k2}
    else:
        raise UsageError(f"unknown asymptotics regime {regime!r}")
    return {"files": files, "summary": summary}


def _stage_evolve(params: dict, out: Path, c: LeslieCoefficients) -> dict:
    B = float(params["B"])
    cfg = TimeStepperConfig(
        dz=float(params.get("dz", TimeStepperConfig.dz)),
        dt=float(params.get("dt", TimeStepperConfig.dt)),
        t_max=float(params.get("t_max", TimeStepperConfig.t_max)),
        steady_tol=float(params.get("steady_tol",
                                    TimeStepperConfig.steady_tol)),
        steady_window=int(params.get("steady_window",
                                     TimeStepperConfig.steady_window)))
    sched = Schedule(G=float(params["G"]),
                     t1=float(params.get("t1", 0.0)),
                     delta=(float(params["delta"]) if "delta" in params
                            else None),
                     t2=float(params.get("t2", 0.0)),
                     kappa=(float(params["kappa"]) if "kappa" in params
                            else None),
                     C=float(params.get("C", 0.0)),
                     literal_flux=bool(params.get("literal_flux", False)))
    init = make_initial(params.get("init", "linear"),
                        float(params.get("C", 0.0)), cfg.n_points)
    traj = evolve(init, sched, cfg, B=B, c=c)
    if params.get("match", True) and traj.converged:
        db = equilibrium_db(sched.G, B, c=c, n_points=cfg.n_points)
        traj.matched_branch = match_steady_state(traj.final_profile, db)
    prof = traj.final_profile
    files = [write_csv(out / "final_profile.csv", ["z", "theta"],
                       zip(prof.z, prof.theta)),
             write_csv(out / "history.csv", ["t", "omega", "rate"],
                       traj.history)]
    return {"files": files,
            "summary": {"omega": traj.final_omega,
                        "t_steady": traj.t_steady,
                        "converged": traj.converged,
                        "matched": traj.matched_branch},
            "failed": not traj.converged}


def _stage_sweep_c_star(params: dict, out: Path,
                        c: LeslieCoefficients) -> dict:
    G = float(params["G"])
    B = float(params["B"])
    cfg = TimeStepperConfig(dt=float(params.get("dt", SWEEP_DT)))
    db = equilibrium_db(G, B, c=c, n_points=cfg.n_points)
    files = []
    summary: dict = {}
    if "C_values" in params:
        rows = sweep_outcomes(G, B, [float(v) for v in params["C_values"]],
                              db, cfg, c)
        files.append(write_csv(out / "sweep.csv",
                               ["C", "branch", "omega", "t_steady"], rows))
        summary["sweep_points"] = len(rows)
    if "bracket" in params or "C_values" not in params:
        bracket = tuple(float(x) for x in params.get("bracket", (-1.9, -1.5)))
        c_star = find_critical_C(G, B, bracket, cfg, c,
                                 tol=float(params.get("tol", 1e-3)),
                                 branch_db=db)
        files.append(write_csv(out / "c_star.csv", ["G", "B", "C_star"],
                               [(G, B, c_star)]))
        summary["C_star"] = c_star
    return {"files": files, "summary": summary}


def _stage_sweep_t1_star(params: dict, out: Path,
                         c: LeslieCoefficients) -> dict:
    G_bar = float(params.get("G_bar", 40.0))
    delta = float(params.get("delta", 5.0))
    kappa = float(params.get("kappa", 5.0))
    t2 = float(params.get("t2", 0.0))
    b_values = [float(b) for b in params.get("B_values", [params["B"]]
                                             if "B" in params else [0.5])]
    c_values = [float(v) for v in params.get("C_values", [params["C"]]
                                             if "C" in params else [-3.0])]
    files = []
    summary: dict = {}
    if "t1_values" in params:
        # outcome sweep over the pressure delay at fixed (B, C)
        B, C = b_values[0], c_values[0]
        cfg = TimeStepperConfig(dt=SWEEP_DT)
        db = equilibrium_db(G_bar, B, c=c, n_points=cfg.n_points)
        rows = []
        for t1 in params["t1_values"]:
            sched = Schedule(G=G_bar, t1=float(t1), delta=delta, t2=t2,
                             kappa=kappa, C=C)
            traj = evolve(make_initial("linear", C, cfg.n_points), sched,
                          cfg, B=B, c=c)
            label = (match_steady_state(traj.final_profile, db)
                     if traj.converged else None)
            rows.append((float(t1), label, traj.final_omega, traj.t_steady))
        files.append(write_csv(out / "sweep.csv",
                               ["t1", "branch", "omega", "t_steady"], rows))
        summary["sweep_points"] = len(rows)
    else:
        rows = []
        for B in b_values:
            for C in c_values:
                t1 = find_critical_t1(C, B, G_bar, delta, kappa, t2, c=c,
                                      tol=float(params.get("tol", 1e-3)),
                                      t1_max=float(params.get("t1_max",
                                                              10.0)))
                rows.append((B, C, t1))
        files.append(write_csv(out / "t1_star.csv", ["B", "C", "t1_star"],
                               rows))
        summary["points"] = len(rows)
    return {"files": files, "summary": summary}


def _stage_reproduce_figure(params: dict, out: Path,
                            c: LeslieCoefficients) -> dict:
    fig = params["figure"]
    if fig not in FIGURE_IDS:
        raise UsageError(f"unknown figure id {fig!r}; "
                         f"known: {', '.join(FIGURE_IDS)}")
    files = reproduce_figure(fig, out, c, quick=bool(params.get("quick",
                                                                False)))
    return {"files": files, "summary": {"figure": fig,
                                        "files": [str(f) for f in files]}}


_STAGES = {
    "validate-coefficients": (_stage_validate, set()),
    "statics-analytic": (_stage_statics_analytic, {"B"}),
    "statics-solve": (_stage_statics_solve, {"G", "B"}),
    "continue": (_stage_continue, {"B", "G_targets"}),
    "folds": (_stage_folds, {"i"}),
    "stability": (_stage_stability, {"B"}),
    "asymptotics-compare": (_stage_asymptotics, {"B"}),
    "evolve": (_stage_evolve, {"G", "B"}),
    "sweep-c-star": (_stage_sweep_c_star, {"G", "B"}),
    "sweep-t1-star": (_stage_sweep_t1_star, set()),
    "reproduce-figure": (_stage_reproduce_figure, {"figure"}),
}

STAGE_KINDS = tuple(_STAGES)

_KNOWN_PARAMS = {
    "validate-coefficients": set(),
    "statics-analytic": {"B", "a_max"},
    "statics-solve": {"G", "B", "family", "n", "n_points", "intercept_index",
                      "residual_tol"},
    "continue": {"family", "n", "B", "G_targets", "n_points", "db",
                 "intercept_index", "residual_tol"},
    "folds": {"i", "G", "B_hi", "B_start", "n_points"},
    "stability": {"family", "n", "B", "G", "k", "intercept_index"},
    "asymptotics-compare": {"regime", "B", "G_values", "family", "n", "k1",
                            "k2", "n_points"},
    "evolve": {"G", "B", "C", "init", "dz", "dt", "t_max", "steady_tol",
               "steady_window", "t1", "delta", "t2", "kappa", "literal_flux",
               "match"},
    "sweep-c-star": {"G", "B", "bracket", "C_values", "dt", "tol"},
    "sweep-t1-star": {"G_bar", "delta", "kappa", "t2", "B", "C", "B_values",
                      "C_values", "t1_values", "tol", "t1_max"},
    "reproduce-figure": {"figure", "quick"},
}


def run_stage(kind: str, params: dict, out_dir: str | Path,
              c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> dict:
    """Execute one stage; returns {'files': [...], 'summary': {...}}."""
    if kind not in _STAGES:
        raise UsageError(f"unknown stage kind {kind!r}; "
                         f"known: {', '.join(STAGE_KINDS)}")
    fn, required = _STAGES[kind]
    missing = required - params.keys()
    if missing:
        raise UsageError(f"stage {kind!r} missing required parameters: "
                         f"{', '.join(sorted(missing))}")
    unknown = params.keys() - _KNOWN_PARAMS[kind]
    if unknown:
        raise UsageError(f"stage {kind!r} got unknown parameters: "
                         f"{', '.join(sorted(unknown))}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return fn(params, out, c)


def _validate_config(config: dict) -> None:
    if not isinstance(config, dict):
        raise UsageError("configuration must be a JSON object")
    unknown = config.keys() - {"output_root", "coefficients", "stages"}
    if unknown:
        raise UsageError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    stages = config.get("stages")
    if not isinstance(stages, list) or not stages:
        raise UsageError("configuration needs a non-empty 'stages' list")
    seen = set()
    for st in stages:
        if not isinstance(st, dict) or "name" not in st or "kind" not in st:
            raise UsageError("every stage needs 'name' and 'kind'")
        if st["name"] in seen:
            raise UsageError(f"duplicate stage name {st['name']!r}")
        seen.add(st["name"])
        kind = st["kind"]
        if kind not in _STAGES:
            raise UsageError(f"stage {st['name']!r}: unknown kind {kind!r}")
        params = {k: v for k, v in st.items() if k not in ("name", "kind")}
        missing = _STAGES[kind][1] - params.keys()
        if missing:
            raise UsageError(f"stage {st['name']!r} missing required "
                             f"parameters: {', '.join(sorted(missing))}")
        unknown = params.keys() - _KNOWN_PARAMS[kind]
        if unknown:
            raise UsageError(f"stage {st['name']!r} has unknown parameters: "
                             f"{', '.join(sorted(unknown))}")


def run_config(config: dict | str | Path,
               output_root: str | Path | None = None,
               c: LeslieCoefficients | None = None) -> RunManifest:
    """Validate and execute a declarative configuration with resume.

    ``output_root`` (CLI flag or environment) overrides the configuration's
    own entry.  Completed stages recorded in an existing manifest with the
    same configuration hash are skipped; a manifest from a different
    configuration is refused.
    """
    if not isinstance(config, dict):
        try:
            config = json.loads(Path(config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"configuration is not valid JSON: {exc}")
    _validate_config(config)
    root = Path(output_root) if output_root is not None else \
        Path(config.get("output_root", default_output_root()))
    if c is None:
        if "coefficients" in config:
            c = dataclasses.replace(DEFAULT_COEFFICIENTS,
                                    **config["coefficients"])
        else:
            c = DEFAULT_COEFFICIENTS

    manifest_path = root / "manifest.json"
    if manifest_path.exists():
        manifest = RunManifest.load(manifest_path)
        if not manifest.matches(config):
            raise UsageError(
                f"output root {root} holds a manifest for a different "
                "configuration; use a fresh directory or remove it")
    else:
        manifest = RunManifest(config=config, path=manifest_path)
        manifest.save()

    for st in config["stages"]:
        name, kind = st["name"], st["kind"]
        if manifest.stage_done(name):
            continue
        params = {k: v for k, v in st.items() if k not in ("name", "kind")}
        result = run_stage(kind, params, root / name, c)
        status = "failed" if result.get("failed") else "complete"
        manifest.mark_stage(name, result.get("files", []), status=status,
                            summary=result.get("summary", {}))
        if status == "failed":
            raise ConvergenceError(f"stage {name!r} failed; see manifest")
    return manifest
