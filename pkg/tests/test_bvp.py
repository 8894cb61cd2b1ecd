"""Static boundary-value solver: Newton convergence, continuation in G and B,
fold detection, and velocity reconstruction."""

import math

import numpy as np
import pytest

from nemchannel.analytic import (
    AnalyticEquilibrium,
    critical_inverse_anchoring,
    solve_type1_slopes,
    solve_type2_slopes,
    solve_type34_intercepts,
    winding_number,
)
from nemchannel.bvp import (
    OMEGA_DRIFT_TOL,
    RESIDUAL_TOL,
    ConvergenceError,
    continue_in_B,
    continue_in_G,
    detect_fold,
    reconstruct_velocity,
    solve_equilibrium,
    static_residual,
    trace_fold_in_G,
)
from nemchannel.grid import GridProfile


def _analytic_cases(B):
    """One representative equilibrium from each family at anchoring B."""
    a1 = solve_type1_slopes(B)
    a2 = solve_type2_slopes(B)
    b3 = solve_type34_intercepts(B, 0, "III")[0]
    b4 = solve_type34_intercepts(B, -1, "IV")[0]
    return [
        AnalyticEquilibrium("I", 1, float(a1[1]), 0.0),
        AnalyticEquilibrium("II", 1, float(a2[1]), math.pi / 2),
        AnalyticEquilibrium("III", 0, 0.25 * math.pi, b3),
        AnalyticEquilibrium("IV", -1, -0.25 * math.pi, b4),
    ]


def test_analytic_lines_are_discrete_equilibria():
    """Linear profiles with the transcendental slopes/intercepts satisfy the
    discretized zero-flow system to round-off."""
    B = 0.3
    for eq in _analytic_cases(B):
        res = static_residual(eq.to_profile(), 0.0, B)
        # round-off in the second difference is amplified by 1/h^2
        assert np.max(np.abs(res)) < 1e-10, eq.family


def test_zero_flow_solver_recovers_analytic_lines():
    B = 0.3
    for eq in _analytic_cases(B):
        exact = eq.to_profile()
        guess = exact.copy()
        guess.theta = guess.theta + 1e-3 * np.cos(0.5 * math.pi * guess.z)
        sol = solve_equilibrium(0.0, B, guess)
        assert np.max(np.abs(sol.theta - exact.theta)) < 1e-8, eq.family
        assert sol.residual_norm < RESIDUAL_TOL


def test_solver_stamps_residual_norm():
    sol = solve_equilibrium(2.0, 0.5, GridProfile.constant(0.0))
    assert np.isfinite(sol.residual_norm)
    assert sol.residual_norm < RESIDUAL_TOL
    recheck = float(np.max(np.abs(static_residual(sol, 2.0, 0.5))))
    assert recheck == pytest.approx(sol.residual_norm, abs=1e-14)


def test_nonconvergence_raises_with_last_iterate():
    with pytest.raises(ConvergenceError) as err:
        solve_equilibrium(2.0, 0.5, GridProfile.constant(0.3), max_iter=1)
    assert isinstance(err.value.last, GridProfile)


def test_continuation_hits_every_target():
    seed = AnalyticEquilibrium("I", 0, 0.0, 0.0)
    targets = [0.5, 1.0, 2.0]
    branch = continue_in_G(seed, 0.5, targets)
    assert branch.terminated_by == "bound"
    reached = np.array([p.G for p in branch.points])
    for t in targets:
        assert np.min(np.abs(reached - t)) < 1e-12
    assert all(p.profile.residual_norm < RESIDUAL_TOL for p in branch.points)
    assert branch.last.G == pytest.approx(2.0, abs=1e-12)
    assert branch.last.B == 0.5


def test_continuation_winding_varies_continuously():
    a = solve_type1_slopes(0.3)
    seed = AnalyticEquilibrium("I", -2, -float(a[2]), 0.0)
    branch = continue_in_G(seed, 0.3, [40.0])
    assert branch.terminated_by == "bound"
    om = np.array([p.omega for p in branch.points])
    assert np.max(np.abs(np.diff(om))) <= OMEGA_DRIFT_TOL
    assert winding_number(branch.last.profile) == pytest.approx(
        branch.last.omega, abs=1e-12)


def test_grid_convergence_is_second_order():
    """Halving the spacing at G = 2 shrinks the error by ~4 (checked on the
    nested coarse nodes against a finer reference)."""
    seed = AnalyticEquilibrium("I", 0, 0.0, 0.0)
    sols = {n: continue_in_G(seed, 0.5, [2.0], n_points=n).last.profile
            for n in (81, 161, 321, 1281)}
    ref = sols[1281]
    errs = []
    for n in (81, 161, 321):
        stride = (1281 - 1) // (n - 1)
        errs.append(np.max(np.abs(sols[n].theta - ref.theta[::stride])))
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_continuation_in_B_terminates_at_fold():
    """The first nontrivial branch pair ends at the zero-flow fold; pushing B
    past it must fold-terminate rather than silently hop branches."""
    B0 = 0.3
    bstar = critical_inverse_anchoring("I", 2)
    a = solve_type1_slopes(B0)
    seed = AnalyticEquilibrium("I", 2, float(a[2]), 0.0)
    start = continue_in_G(seed, B0, [0.0]).last
    branch = continue_in_B(start, [2.0])
    assert branch.terminated_by == "fold"
    assert branch.failed_target == 2.0
    assert branch.last.B < bstar
    assert branch.last.B == pytest.approx(bstar, abs=5e-3)


def test_detect_fold_matches_analytic_critical_anchoring():
    B0 = 0.3
    a = solve_type1_slopes(B0)
    pair = tuple(
        solve_equilibrium(0.0, B0, AnalyticEquilibrium("I", n, float(a[n]),
                                                       0.0).to_profile())
        for n in (1, 2))
    bstar = detect_fold(pair, 0.0, B0, 1.0)
    assert bstar == pytest.approx(critical_inverse_anchoring("I", 2), abs=1e-4)


def test_detect_fold_requires_fold_in_bracket():
    """A bracket below the coalescence point leaves both members alive."""
    B0 = 0.3
    a = solve_type1_slopes(B0)
    pair = tuple(
        solve_equilibrium(0.0, B0, AnalyticEquilibrium("I", n, float(a[n]),
                                                       0.0).to_profile())
        for n in (1, 2))
    with pytest.raises(ValueError, match="no fold"):
        detect_fold(pair, 0.0, B0, 0.4)


def test_trace_fold_reduces_to_analytic_at_zero_flow():
    curve = trace_fold_in_G(2, [0.0])
    assert curve.index == -2  # default sign traces the negative-slope pair
    (g, bstar), = curve.samples
    assert g == 0.0
    assert bstar == pytest.approx(critical_inverse_anchoring("I", 2), abs=1e-4)


def test_fold_asymmetry_between_slope_signs():
    """Flow breaks the a -> -a symmetry: at G = 5 the negative-slope pair
    survives weaker anchoring (larger B*) than the positive-slope pair."""
    neg = trace_fold_in_G(2, [5.0], sign=-1).samples[0][1]
    pos = trace_fold_in_G(2, [5.0], sign=+1).samples[0][1]
    assert neg == pytest.approx(0.5177, abs=5e-3)
    assert pos == pytest.approx(0.3801, abs=5e-3)
    assert neg > pos + 0.05


def test_strong_flow_keeps_negative_pair_everywhere():
    """At G = 20 the negative-slope pair persists for all B in the search
    window (unbounded fold), while the positive-slope pair still folds."""
    neg = trace_fold_in_G(2, [20.0], sign=-1).samples[0][1]
    assert math.isinf(neg)
    pos = trace_fold_in_G(2, [20.0], sign=+1, B_start=0.05).samples[0][1]
    assert pos == pytest.approx(0.2399, abs=5e-3)


def test_velocity_reconstruction():
    branch = continue_in_G(AnalyticEquilibrium("I", 0, 0.0, 0.0), 0.5, [2.0])
    u = reconstruct_velocity(branch.last.profile, 2.0)
    assert u[0] == 0.0
    assert abs(u[-1]) < 1e-6  # theta odd => g even => no net slip
    assert np.max(u) > 0.0
    # zero driving => fluid at rest
    rest = reconstruct_velocity(GridProfile.constant(0.0), 0.0)
    assert np.max(np.abs(rest)) == 0.0


def test_input_validation():
    with pytest.raises(ValueError, match="B must be positive"):
        solve_equilibrium(2.0, -0.5, GridProfile.constant(0.0))
    with pytest.raises(ValueError, match="sign"):
        trace_fold_in_G(2, [0.0], sign=3)
