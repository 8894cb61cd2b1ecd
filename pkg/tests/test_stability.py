"""Linear stability: closed-form zero-state spectrum, discretized operator,
parity rules, and propagation of verdicts to nonzero flow."""

import math

import numpy as np
import pytest

from nemchannel.analytic import (
    AnalyticEquilibrium,
    solve_type1_slopes,
    solve_type2_slopes,
    solve_type34_intercepts,
)
from nemchannel.bvp import continue_in_G
from nemchannel.grid import GridProfile
from nemchannel.stability import (
    classify_parity,
    linearized_spectrum,
    theta0_eigenvalues,
)

ZERO_STATE_EIGS_B05 = [7.36113417, 30.41278961, 71.2802678]


def test_theta0_eigenvalues_oracle():
    lam = theta0_eigenvalues(0.5, k=3)
    np.testing.assert_allclose(lam, ZERO_STATE_EIGS_B05, rtol=1e-7)


def test_theta0_eigenvalues_strong_anchoring_limit():
    lam = theta0_eigenvalues(0.0, k=2)
    # B = 0 reduces to nu = k pi / 2 exactly
    assert lam[0] == pytest.approx(11.357530761603382, abs=1e-10)
    assert lam[1] / lam[0] == pytest.approx(4.0, abs=1e-12)


def test_theta0_eigenvalues_all_positive_over_B():
    for B in (0.01, 0.5, 2.0, 10.0):
        lam = theta0_eigenvalues(B, k=4)
        assert np.all(lam > 0.0)
        assert np.all(np.diff(lam) > 0.0)


def test_discretized_spectrum_matches_oracle():
    prof = GridProfile.constant(0.0, 401)
    rep = linearized_spectrum(prof, B=0.5, G=0.0, k=3)
    np.testing.assert_allclose(rep.spectrum_prefix, ZERO_STATE_EIGS_B05,
                               rtol=1e-3)
    assert rep.verdict == "stable"
    assert rep.method == "discretized"


def test_discretized_spectrum_grid_convergence():
    """Second-order eigenvalue error: refining N halves the error twice."""
    exact = theta0_eigenvalues(0.5, k=1)[0]
    errs = []
    for n in (101, 201, 401):
        rep = linearized_spectrum(GridProfile.constant(0.0, n), B=0.5, G=0.0,
                                  k=1)
        errs.append(abs(rep.leading_eigenvalue - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


def test_residual_gate_rejects_non_equilibria():
    junk = GridProfile.linear(1.0, 0.3)  # not an equilibrium at B = 0.5
    with pytest.raises(ValueError, match="not a converged equilibrium"):
        linearized_spectrum(junk, B=0.5, G=0.0)


def test_parity_table():
    assert classify_parity("I", 0) == "stable"
    assert classify_parity("I", 1) == "unstable"
    assert classify_parity("I", -2) == "stable"
    assert classify_parity("II", 0) == "unstable"
    assert classify_parity("II", 1) == "stable"
    assert classify_parity("II", -3) == "stable"
    assert classify_parity("III", 0) == "unstable"
    assert classify_parity("IV", 5) == "unstable"


def test_parity_matches_spectrum_samples():
    """Spot-check the parity rule against the eigensolver at mild anchoring."""
    B = 0.1
    t1 = solve_type1_slopes(B)
    t2 = solve_type2_slopes(B)
    cases = [
        ("I", 0, 0.0, 0.0),
        ("I", 1, float(t1[1]), 0.0),
        ("I", -2, -float(t1[2]), 0.0),
        ("II", 0, 0.0, math.pi / 2),
        ("II", 1, float(t2[1]), math.pi / 2),
    ]
    for family, n, a, b in cases:
        prof = AnalyticEquilibrium(family, n, a, b).to_profile()
        rep = linearized_spectrum(prof, B=B, G=0.0, k=1)
        assert rep.verdict == classify_parity(family, n), (family, n)


def test_type34_unstable():
    B = 0.5
    b3 = solve_type34_intercepts(B, 0, "III")[0]
    b4 = solve_type34_intercepts(B, -1, "IV")[0]
    for family, n, a, b in (("III", 0, 0.25 * math.pi, b3),
                            ("IV", -1, -0.25 * math.pi, b4)):
        prof = AnalyticEquilibrium(family, n, a, b).to_profile()
        rep = linearized_spectrum(prof, B=B, G=0.0, k=1)
        assert rep.verdict == "unstable", family


def test_stability_propagates_under_flow():
    """Verdicts at G = 0 persist along branches continued to G in {5, 20}."""
    B = 0.1
    t1 = solve_type1_slopes(B)
    for n, a, expected in ((0, 0.0, "stable"), (1, float(t1[1]), "unstable")):
        seed = AnalyticEquilibrium("I", n, a, 0.0)
        for G in (5.0, 20.0):
            branch = continue_in_G(seed, B, [G])
            assert branch.terminated_by == "bound"
            rep = linearized_spectrum(branch.last.profile, B=B, G=G, k=1)
            assert rep.verdict == expected, (n, G)


def test_input_validation():
    prof = GridProfile.constant(0.0, 41)
    with pytest.raises(ValueError):
        linearized_spectrum(prof, B=-1.0, G=0.0)
    with pytest.raises(ValueError):
        linearized_spectrum(prof, B=0.5, G=0.0, k=0)
    with pytest.raises(ValueError):
        theta0_eigenvalues(-0.1)
