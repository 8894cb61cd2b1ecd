"""Reproducible figure datasets (CSV only; no plot rendering).

Each figure id maps to a function that computes the underlying data and
writes one or more CSV files under ``out_root/<fig_id>/``.  The CSVs are the
deliverable; plotting is left to the consumer.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .analytic import (
    AnalyticEquilibrium,
    all_equilibria,
    critical_inverse_anchoring,
    solve_type1_slopes,
    solve_type2_slopes,
    solve_type34_intercepts,
    tan_eq_x_roots,
    winding_number,
)
from .asymptotics import (
    composite_large_g,
    center_transition_width,
    layer_width,
    small_g_correction,
)
from .bvp import ConvergenceError, continue_in_G, trace_fold_in_G
from .coefficients import DEFAULT_COEFFICIENTS, LeslieCoefficients, flow_alignment_angle
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
)
from .manifest import write_csv
from .stability import linearized_spectrum, theta0_eigenvalues, classify_parity

__all__ = ["FIGURE_IDS", "reproduce_figure"]


def _slope_curve(sign: float, a_max: float = 4.0 * math.pi, n: int = 2000):
    """Rows (a, B) of the branch curve B = sign * sin(2a)/a where B > 0."""
    a = np.linspace(1e-4, a_max, n)
    b = sign * np.sin(2.0 * a) / a
    rows = [(av, bv) for av, bv in zip(a, b) if bv > 0.0]
    return rows


def _fig2(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    files = [write_csv(out / "type1_slope_curve.csv", ["a", "B"],
                       _slope_curve(-1.0))]
    x = tan_eq_x_roots(4)
    rows = []
    for i, xi in zip((2, 4, 6, 8), x):
        rows.append((i, 0.5 * xi, critical_inverse_anchoring("I", i)))
    files.append(write_csv(out / "type1_folds.csv", ["i", "a_fold", "B_star"],
                           rows))
    return files


def _fig3(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    files = [write_csv(out / "type2_slope_curve.csv", ["a", "B"],
                       _slope_curve(1.0))]
    x = tan_eq_x_roots(4)
    rows = [(1, 0.0, critical_inverse_anchoring("II", 1))]
    for i, xi in zip((3, 5, 7), x):
        rows.append((i, 0.5 * xi, critical_inverse_anchoring("II", i)))
    files.append(write_csv(out / "type2_folds.csv", ["i", "a_fold", "B_star"],
                           rows))
    return files


def _fig4(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    rows = []
    for family in ("III", "IV"):
        for n in (-2, -1, 0, 1):
            for B in np.linspace(1e-3, 1.35, 400):
                pair = solve_type34_intercepts(float(B), n, family)
                if pair:
                    rows.append((family, n, B, pair[0], pair[1]))
    return [write_csv(out / "type34_intercepts.csv",
                      ["family", "n", "B", "b_lower", "b_upper"], rows)]


def _fig5(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    B = 1.0 / 3.0
    base = AnalyticEquilibrium("II", 1, float(solve_type2_slopes(B)[1]),
                               math.pi / 2.0)
    corr = small_g_correction(base, B, c)
    g_values = (2.0, 7.0)
    branch = continue_in_G(base, B, [0.5, 1.0, 2.0, 4.0, 7.0], c)
    full = {p.G: p.profile for p in branch.points}
    z = corr.theta1.z
    cols = {"z": z, "theta_base": base.a * z + base.b}
    for G in g_values:
        cols[f"theta_asym_G{G:g}"] = corr.composite(G).theta
        cols[f"theta_full_G{G:g}"] = full[G].theta
    files = [write_csv(out / "profiles.csv", list(cols),
                       zip(*cols.values()))]
    rows = []
    for G in np.linspace(0.05, 7.0, 8 if quick else 24):
        try:
            br = continue_in_G(base, B, [float(G)], c)
        except ConvergenceError:
            continue
        dev = float(np.max(np.abs(br.last.profile.theta
                                  - corr.composite(float(G)).theta)))
        rows.append((G, dev))
    files.append(write_csv(out / "sup_error.csv", ["G", "sup_error"], rows))
    return files


_LADDER = [0.25, 0.5, 1, 2, 4, 7, 10, 20, 40, 70, 100, 200, 350, 500, 700, 1000]


def _fig6(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    B = 1.0 / 3.0
    n_fine = 641 if quick else 2001
    seed = AnalyticEquilibrium("I", 0, 0.0, 0.0)
    branch = continue_in_G(seed, B, [float(g) for g in _LADDER], c,
                           n_points=n_fine, residual_tol=1e-8)
    full = {p.G: p.profile for p in branch.points}
    files = []
    s0 = flow_alignment_angle(c)
    width_rows = []
    for G in (100.0, 500.0, 1000.0):
        comp = composite_large_g(0, 0, G, B, c=c, n_points=n_fine)
        prof = full[G]
        files.append(write_csv(out / f"profile_G{G:g}.csv",
                               ["z", "theta_full", "theta_composite"],
                               zip(prof.z, prof.theta, comp.theta)))
        wl, wr = layer_width(comp, theta_outer=(s0, -s0))
        wc = center_transition_width(comp, fraction=0.05, theta_outer=-s0)
        sup = float(np.max(np.abs(prof.theta - comp.theta)))
        width_rows.append((G, wl, wr, wc, sup))
    files.append(write_csv(out / "widths.csv",
                           ["G", "w_wall_left", "w_wall_right", "w_center",
                            "sup_error"], width_rows))
    return files


def _fig7_landscape(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    B = 0.1
    targets = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
    rows = []
    slopes1 = solve_type1_slopes(B)
    slopes2 = solve_type2_slopes(B)
    seeds = []
    for n in range(-6, 7):
        if abs(n) < slopes1.size:
            a = math.copysign(slopes1[abs(n)], n) if n else 0.0
            seeds.append(AnalyticEquilibrium("I", n, a, 0.0))
    for n in (-1, 1):
        if abs(n) < slopes2.size:
            a = math.copysign(slopes2[abs(n)], n)
            seeds.append(AnalyticEquilibrium("II", n, a, math.pi / 2.0))
    for seed in seeds:
        try:
            branch = continue_in_G(seed, B, targets, c)
        except ConvergenceError:
            continue
        for p in branch.points:
            rows.append((seed.family, seed.n, p.G, p.omega))
    return [write_csv(out / "branch_windings.csv",
                      ["family", "n", "G", "omega"], rows)]


def _fig7_winding(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    G, B = 2.0, 0.1
    cfg = TimeStepperConfig(dt=SWEEP_DT)
    db = equilibrium_db(G, B, c=c, n_points=cfg.n_points)
    n_sweep = 21 if quick else 41
    cs = np.linspace(-3.5 * math.pi, 3.5 * math.pi, n_sweep)
    rows = []
    for C in cs:
        traj = evolve(make_initial("linear", float(C), cfg.n_points),
                      Schedule(G=G), cfg, B=B, c=c)
        label = match_steady_state(traj.final_profile, db) or ""
        rows.append((C, traj.final_omega, round(traj.final_omega), label))
    files = [write_csv(out / "staircase.csv",
                       ["C", "final_omega", "rounded_omega", "matched"], rows)]
    c_star = find_critical_C(G, B, (-1.9, -1.5), cfg, c)
    files.append(write_csv(out / "c_star.csv", ["G", "B", "C_star"],
                           [(G, B, c_star)]))
    return files


def _fig8(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    g_samples = (0.0, 5.0, 10.0, 15.0) if quick else (0.0, 5.0, 10.0, 15.0, 20.0)
    rows = []
    for i in (2, 4):
        curve = trace_fold_in_G(i, g_samples, B_hi=2.5, c=c)
        rows.extend((i, Gv, b_star) for Gv, b_star in curve.samples)
    return [write_csv(out / "fold_curves.csv", ["i", "G", "B_star"], rows)]


def _fig9(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    G, B = 2.0, 0.1
    cfg = TimeStepperConfig(dt=SWEEP_DT, check_interval=25)
    rows = []
    for C in (-1.0, -2.5, -6.0, -10.0):
        traj = evolve(make_initial("linear", C, cfg.n_points), Schedule(G=G),
                      cfg, B=B, c=c)
        for (t, om, rate) in traj.history:
            rows.append((C, t, om, rate))
    return [write_csv(out / "winding_histories.csv",
                      ["C", "t", "omega", "rate"], rows)]


def _fig10(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    G_bar, delta, kappa = 40.0, 5.0, 5.0
    b_values = (0.5, 0.8, 1.0)
    c_values = (-4.0, -3.0, -2.5) if quick else \
        (-4.0, -3.5, -3.0, -2.75, -2.5, -2.25, -2.0)
    rows = []
    for B in b_values:
        for C in c_values:
            t1 = find_critical_t1(C, B, G_bar, delta, kappa, c=c)
            rows.append((B, C, t1))
    return [write_csv(out / "t1_star.csv", ["B", "C", "t1_star"], rows)]


def _figB1(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    rows = []
    for B in np.linspace(0.0, 3.0, 61):
        lam = theta0_eigenvalues(float(B), k=4, c=c)
        rows.append((B, *lam))
    return [write_csv(out / "theta0_eigenvalues.csv",
                      ["B", "lambda1", "lambda2", "lambda3", "lambda4"], rows)]


def _figB2(out: Path, c: LeslieCoefficients, quick: bool) -> list[Path]:
    B = 0.001
    rows = []
    for eq in all_equilibria(B):
        if abs(eq.n) > 4:
            continue
        rep = linearized_spectrum(eq.to_profile(), B, 0.0, c=c)
        rows.append((eq.family, eq.n, eq.a, eq.b, rep.leading_eigenvalue,
                     rep.verdict, classify_parity(eq.family, eq.n)))
    return [write_csv(out / "parity_table.csv",
                      ["family", "n", "a", "b", "leading_eigenvalue",
                       "verdict", "predicted"], rows)]


_FIGURES = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7-landscape": _fig7_landscape,
    "fig8": _fig8,
    "fig7-winding": _fig7_winding,
    "fig9": _fig9,
    "fig10": _fig10,
    "figB1": _figB1,
    "figB2": _figB2,
}

FIGURE_IDS = tuple(_FIGURES)


def reproduce_figure(fig_id: str, out_root: str | Path,
                     c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                     quick: bool = False) -> list[Path]:
    """Compute and write the dataset behind one figure; returns file paths.

    ``quick`` shrinks sweep grids for smoke runs without changing formats.
    """
    if fig_id not in _FIGURES:
        raise ValueError(f"unknown figure id {fig_id!r}; "
                         f"known: {', '.join(FIGURE_IDS)}")
    out = Path(out_root) / fig_id
    out.mkdir(parents=True, exist_ok=True)
    return _FIGURES[fig_id](out, c, quick)
