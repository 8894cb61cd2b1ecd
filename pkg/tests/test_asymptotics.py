"""Asymptotic approximations: first-order small-G corrections and the
large-G boundary-layer construction, checked against quadrature identities,
frozen values, and the full nonlinear solver."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from nemchannel.analytic import AnalyticEquilibrium, solve_type1_slopes
from nemchannel.asymptotics import (
    CENTER_L,
    WALL_L,
    LayerError,
    center_transition_width,
    composite_large_g,
    extract_outer_indices,
    layer_width,
    outer_value,
    small_g_correction,
    solve_layer,
)
from nemchannel.bvp import continue_in_G, solve_equilibrium
from nemchannel.coefficients import flow_alignment_angle, q_of
from nemchannel.grid import GridProfile, uniform_grid

SIGMA0 = 1.3419291132615485  # flow-alignment angle of the default material
B_THIRD = 1.0 / 3.0


# ---------------------------------------------------------------------------
# small G
# ---------------------------------------------------------------------------

def test_correction_constants_closed_form_for_constant_bases():
    """For the constant bases the quadratures collapse: J(z) = Q(b) z^3 / 6,
    so C has a closed form the quad-based result must reproduce."""
    q0 = float(q_of(0.0))
    corr = small_g_correction(AnalyticEquilibrium("I", 0, 0.0, 0.0), B_THIRD)
    expected_c = -q0 * (2.0 / 3.0 + B_THIRD) / (2.0 * B_THIRD + 4.0)
    assert corr.C == pytest.approx(expected_c, abs=1e-12)
    assert corr.D == pytest.approx(0.0, abs=1e-12)
    assert corr.C == pytest.approx(-0.15543853563939644, abs=1e-12)
    theta1_top = float(corr.theta1.theta[-1])
    assert theta1_top == pytest.approx(q0 / 6.0 + corr.C, abs=1e-10)
    assert theta1_top == pytest.approx(-0.03454189680875476, abs=1e-10)

    qh = float(q_of(0.5 * math.pi))
    corr2 = small_g_correction(AnalyticEquilibrium("II", 0, 0.0, 0.5 * math.pi),
                               B_THIRD)
    assert corr2.C == pytest.approx(-qh / 10.0, abs=1e-12)
    assert corr2.C == pytest.approx(0.019227313566936202, abs=1e-12)


def test_correction_constants_tilted_base_regression():
    from nemchannel.analytic import solve_type2_slopes
    a1 = float(solve_type2_slopes(B_THIRD)[1])
    corr = small_g_correction(
        AnalyticEquilibrium("II", 1, a1, 0.5 * math.pi), B_THIRD)
    assert corr.C == pytest.approx(-0.10765908806163961, abs=1e-10)
    assert corr.D == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("family,n", [("I", 0), ("I", 1), ("II", 0), ("II", 1)])
def test_correction_satisfies_linearized_robin(family, n):
    """theta1' = I(z) + C must satisfy the linearized anchoring conditions
    B theta1'(+-1) = -+ 2 cos(2 theta*(+-1)) theta1(+-1) at both walls."""
    B = B_THIRD
    if family == "I":
        a = 0.0 if n == 0 else float(solve_type1_slopes(B)[n])
        b = 0.0
    else:
        from nemchannel.analytic import solve_type2_slopes
        a = 0.0 if n == 0 else float(solve_type2_slopes(B)[n])
        b = 0.5 * math.pi
    corr = small_g_correction(AnalyticEquilibrium(family, n, a, b), B)

    def islope(zz):
        val, _ = quad(lambda s: s * q_of(a * s + b), 0.0, zz,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        return val + corr.C

    th1 = corr.theta1.theta
    top = B * islope(1.0) + 2.0 * math.cos(2.0 * (a + b)) * th1[-1]
    bot = B * islope(-1.0) - 2.0 * math.cos(2.0 * (-a + b)) * th1[0]
    assert abs(top) < 1e-8
    assert abs(bot) < 1e-8


def test_correction_tracks_full_solution_at_small_g():
    """sup |theta_full - (theta* + G theta1)| is O(G^2): small at G = 0.05
    and roughly quadrupling when G doubles.  The tilted Type II base has a
    large enough second-order term for the scaling to be visible above
    discretization noise."""
    from nemchannel.analytic import solve_type2_slopes
    a1 = float(solve_type2_slopes(B_THIRD)[1])
    seed = AnalyticEquilibrium("II", 1, a1, 0.5 * math.pi)
    corr = small_g_correction(seed, B_THIRD)
    devs = []
    for G in (0.05, 0.1):
        full = continue_in_G(seed, B_THIRD, [G]).last.profile
        devs.append(float(np.max(np.abs(full.theta - corr.composite(G).theta))))
    assert devs[0] < 1e-4
    assert 3.2 < devs[1] / devs[0] < 4.8


def test_correction_rejects_unsupported_bases():
    with pytest.raises(ValueError, match="Type I/II"):
        small_g_correction(AnalyticEquilibrium("III", 0, 0.25 * math.pi, 0.3),
                           0.5)
    with pytest.raises(ValueError, match="B must be positive"):
        small_g_correction(AnalyticEquilibrium("I", 0, 0.0, 0.0), 0.0)


# ---------------------------------------------------------------------------
# large G
# ---------------------------------------------------------------------------

def test_outer_values():
    assert flow_alignment_angle() == pytest.approx(SIGMA0, abs=1e-14)
    assert outer_value(0, 1) == pytest.approx(SIGMA0, abs=1e-14)
    assert outer_value(0, -1) == pytest.approx(-SIGMA0, abs=1e-14)
    assert outer_value(1, -1) == pytest.approx(math.pi - SIGMA0, abs=1e-14)
    with pytest.raises(ValueError):
        outer_value(0, 2)


def test_wall_layer_decay_and_frozen_wall_values():
    expected = {100.0: 1.159343, 500.0: 1.280662, 1000.0: 1.301242}
    for G, wall in expected.items():
        layer = solve_layer("left", SIGMA0, B_bar=math.sqrt(G) * B_THIRD)
        assert layer.wall_value == pytest.approx(wall, abs=1e-5)
        assert layer.tail_mismatch < 1e-4
        # monotone relaxation from the wall onto the plateau
        assert np.all(np.diff(layer.theta) > -1e-12)
        assert abs(layer.theta[-1] - SIGMA0) < 1e-14


def test_wall_layer_truncation_converged():
    b_bar = math.sqrt(100.0) * B_THIRD
    short = solve_layer("left", SIGMA0, B_bar=b_bar, L=WALL_L)
    long = solve_layer("left", SIGMA0, B_bar=b_bar, L=2.0 * WALL_L)
    assert abs(short.wall_value - long.wall_value) < 1e-6


def test_wall_layer_free_wall_limit():
    """B_bar = inf removes the anchoring flux entirely; the layer collapses
    onto the constant plateau."""
    layer = solve_layer("left", SIGMA0, B_bar=math.inf)
    assert np.max(np.abs(layer.theta - SIGMA0)) < 1e-12


def test_wall_layer_rejects_wrong_far_field_family():
    """The left-wall equation can only decay onto the sigma^+ family;
    feeding it sigma^- must fail loudly instead of returning junk."""
    with pytest.raises(LayerError):
        solve_layer("left", -SIGMA0, B_bar=math.sqrt(500.0) * B_THIRD)


def test_wall_layer_requires_positive_anchoring_scale():
    with pytest.raises(ValueError, match="B_bar"):
        solve_layer("left", SIGMA0)
    with pytest.raises(ValueError, match="side"):
        solve_layer("top", SIGMA0, B_bar=1.0)


def test_center_layer_is_odd_between_opposite_plateaus():
    layer = solve_layer("center", (SIGMA0, -SIGMA0))
    n = layer.theta.size
    assert layer.tail_mismatch < 1e-6
    assert abs(layer.theta[n // 2]) < 1e-9
    assert np.max(np.abs(layer.theta + layer.theta[::-1])) < 1e-9
    assert layer.theta[0] == pytest.approx(SIGMA0, abs=1e-14)


def test_unstretch_maps_back_to_channel():
    G = 400.0
    left = solve_layer("left", SIGMA0, B_bar=math.sqrt(G) * B_THIRD)
    z, th = left.unstretch(G)
    assert z[0] == -1.0
    assert z[-1] == pytest.approx(-1.0 + WALL_L / math.sqrt(G))
    assert th[0] == left.wall_value
    right = solve_layer("right", -SIGMA0, B_bar=math.sqrt(G) * B_THIRD)
    zr, thr = right.unstretch(G)
    assert zr[-1] == 1.0
    assert np.all(np.diff(zr) > 0.0)
    assert thr[-1] == right.wall_value


def test_composite_matches_full_solver_increasingly_well():
    """Frozen sup errors of the layer composite against full Newton solves on
    a 2001-node grid; the error must shrink as G grows."""
    expected = {100.0: 0.055038, 500.0: 0.001467, 1000.0: 0.000328}
    errs = []
    for G, err in expected.items():
        comp = composite_large_g(0, 0, G, B_THIRD, n_points=2001)
        full = solve_equilibrium(G, B_THIRD, comp, residual_tol=1e-8)
        sup = float(np.max(np.abs(full.theta - comp.theta)))
        assert sup == pytest.approx(err, rel=0.05), G
        assert extract_outer_indices(full) == (0, 0)
        errs.append(sup)
    assert errs[0] > errs[1] > errs[2]


def test_composite_input_validation():
    with pytest.raises(ValueError, match="G > 0"):
        composite_large_g(0, 0, 0.0, 0.5)


def test_layer_width_on_synthetic_exponential():
    w = 0.05
    z = uniform_grid(4001)
    amp = 0.4
    theta = SIGMA0 + amp * (np.exp(-(z + 1.0) / w) + np.exp(-(1.0 - z) / w))
    prof = GridProfile(z, theta)
    wl, wr = layer_width(prof, fraction=0.01, theta_outer=(SIGMA0, SIGMA0))
    assert wl == pytest.approx(w * math.log(100.0), rel=1e-3)
    assert wr == pytest.approx(w * math.log(100.0), rel=1e-3)
    # default plateau reference (sampled at |z| = 0.5) gives the same answer
    wl2, wr2 = layer_width(prof, fraction=0.01)
    assert wl2 == pytest.approx(wl, rel=1e-2)
    assert wr2 == pytest.approx(wr, rel=1e-2)


def test_center_width_on_synthetic_tanh():
    w = 0.05
    z = uniform_grid(4001)
    prof = GridProfile(z, SIGMA0 * np.tanh(z / w))
    width = center_transition_width(prof, fraction=0.01, theta_outer=SIGMA0)
    assert width == pytest.approx(w * math.atanh(0.99), rel=1e-2)


def test_width_measures_reject_flat_profiles():
    flat = GridProfile.constant(SIGMA0, 401)
    with pytest.raises(LayerError):
        layer_width(flat)
    with pytest.raises(LayerError):
        center_transition_width(flat)
