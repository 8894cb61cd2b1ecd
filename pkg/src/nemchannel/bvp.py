"""Finite-difference Newton solver for static equilibria at arbitrary (G, B),
parameter continuation, fold (saddle-node) detection, and velocity recovery.

The static problem is

    g(theta) theta_zz + G z m(theta) = 0,   B theta_z(+-1) = -+ sin(2 theta(+-1)),

discretized with second-order central differences on a uniform grid; the Robin
conditions enter through ghost-point elimination, so the boundary rows keep the
same second-order stencil structure as the interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded

from .analytic import AnalyticEquilibrium, winding_number
from .coefficients import (
    DEFAULT_COEFFICIENTS,
    LeslieCoefficients,
    g_of,
    g_prime_of,
    m_of,
    m_prime_of,
)
from .grid import DEFAULT_NPOINTS, GridProfile, uniform_grid

__all__ = [
    "ConvergenceError",
    "BranchPoint",
    "Branch",
    "FoldCurve",
    "static_residual",
    "solve_equilibrium",
    "continue_in_G",
    "continue_in_B",
    "detect_fold",
    "trace_fold_in_G",
    "reconstruct_velocity",
    "UPDATE_TOL",
    "RESIDUAL_TOL",
]

UPDATE_TOL = 1e-11
RESIDUAL_TOL = 1e-10
#: maximum winding-number drift per accepted continuation step before the
#: solve is treated as having hopped to a different branch
OMEGA_DRIFT_TOL = 0.25
#: sup-norm separation below which two branch members count as coalesced
COALESCE_TOL = 1e-6


class ConvergenceError(RuntimeError):
    """Newton iteration failed; carries the last iterate for diagnostics."""

    def __init__(self, message: str, last: GridProfile | None = None):
        super().__init__(message)
        self.last = last


def static_residual(profile: GridProfile, G: float, B: float,
                    c: LeslieCoefficients = DEFAULT_COEFFICIENTS, *,
                    weight: float = 1.0, hold: float = 0.0,
                    literal_flux: bool = False) -> np.ndarray:
    """Pointwise residual of the static system on the profile's own grid.

    The optional arguments evaluate the residual under a partially engaged
    anchoring flux (a held boundary slope ``hold`` blended with the Robin
    sine flux at ``weight``), matching the time stepper's boundary
    treatment; the defaults give the plain static conditions.
    """
    th = profile.theta
    z = profile.z
    h = profile.dz
    gg = g_of(th, c)
    mm = m_of(th, c)
    r = np.empty_like(th)
    r[1:-1] = gg[1:-1] * (th[:-2] - 2.0 * th[1:-1] + th[2:]) / (h * h) \
        + G * z[1:-1] * mm[1:-1]
    if B <= 0.0:
        raise ValueError("B must be positive")
    top_sign = 1.0 if literal_flux else -1.0
    flux_bot = hold * (1.0 - weight) + weight * math.sin(2.0 * th[0]) / B
    flux_top = hold * (1.0 - weight) \
        + top_sign * weight * math.sin(2.0 * th[-1]) / B
    r[0] = gg[0] * (2.0 * th[1] - 2.0 * th[0]
                    - 2.0 * h * flux_bot) / (h * h) \
        + G * z[0] * mm[0]
    r[-1] = gg[-1] * (2.0 * th[-2] - 2.0 * th[-1]
                      + 2.0 * h * flux_top) / (h * h) \
        + G * z[-1] * mm[-1]
    return r


def _jacobian_banded(th: np.ndarray, z: np.ndarray, h: float, G: float, B: float,
                     c: LeslieCoefficients) -> np.ndarray:
    """Banded (1,1) Jacobian of the static residual, in solve_banded layout."""
    n = th.size
    gg = g_of(th, c)
    gp = g_prime_of(th, c)
    mp = m_prime_of(th, c)
    hh = h * h
    d2 = np.empty(n)
    d2[1:-1] = (th[:-2] - 2.0 * th[1:-1] + th[2:]) / hh
    d2[0] = (2.0 * th[1] - 2.0 * th[0] - 2.0 * h * math.sin(2.0 * th[0]) / B) / hh
    d2[-1] = (2.0 * th[-2] - 2.0 * th[-1] - 2.0 * h * math.sin(2.0 * th[-1]) / B) / hh

    ab = np.zeros((3, n))
    # diagonal
    ab[1, :] = gp * d2 + G * z * mp
    ab[1, 1:-1] += -2.0 * gg[1:-1] / hh
    ab[1, 0] += gg[0] * (-2.0 - 4.0 * h * math.cos(2.0 * th[0]) / B) / hh
    ab[1, -1] += gg[-1] * (-2.0 - 4.0 * h * math.cos(2.0 * th[-1]) / B) / hh
    # superdiagonal (column j couples row j-1)
    ab[0, 2:] = gg[1:-1] / hh
    ab[0, 1] = 2.0 * gg[0] / hh
    # subdiagonal
    ab[2, :-2] = gg[1:-1] / hh
    ab[2, -2] = 2.0 * gg[-1] / hh
    return ab


def solve_equilibrium(G: float, B: float, guess: GridProfile,
                      c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                      update_tol: float = UPDATE_TOL,
                      residual_tol: float = RESIDUAL_TOL,
                      max_iter: int = 50) -> GridProfile:
    """Newton solve of the static system from ``guess``.

    Converged when the max-norm update drops below ``update_tol`` and the
    max-norm residual below ``residual_tol``.  Raises ConvergenceError when
    the iteration cap is hit or the line search stagnates - which is how fold
    detection learns that a guess left the branch's basin.

    Note: at fine grids the residual has a floating-point evaluation floor of
    order eps*|theta|*g/h^2; callers using N >> 161 should relax
    ``residual_tol`` accordingly (continuation does this automatically).
    """
    z = guess.z
    h = guess.dz
    th = guess.theta.copy()
    r = static_residual(GridProfile(z, th), G, B, c)
    rnorm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        ab = _jacobian_banded(th, z, h, G, B, c)
        try:
            d = solve_banded((1, 1), ab, -r)
        except np.linalg.LinAlgError as exc:  # singular at a fold
            raise ConvergenceError(f"linear solve failed: {exc}",
                                   GridProfile(z, th, rnorm)) from exc
        if not np.all(np.isfinite(d)):
            raise ConvergenceError("Newton update not finite",
                                   GridProfile(z, th, rnorm))
        upd = float(np.max(np.abs(d)))
        # backtracking line search on the residual norm
        lam = 1.0
        for _bt in range(30):
            th_new = th + lam * d
            r_new = static_residual(GridProfile(z, th_new), G, B, c)
            rnorm_new = float(np.max(np.abs(r_new)))
            if np.isfinite(rnorm_new) and (rnorm_new < rnorm or upd * lam < update_tol):
                break
            lam *= 0.5
        else:
            raise ConvergenceError("line search stagnated",
                                   GridProfile(z, th, rnorm))
        th, r, rnorm = th_new, r_new, rnorm_new
        if upd * lam < update_tol and rnorm < residual_tol:
            return GridProfile(z, th, rnorm)
    raise ConvergenceError(f"no convergence in {max_iter} iterations "
                           f"(residual {rnorm:.3e})", GridProfile(z, th, rnorm))


@dataclass
class BranchPoint:
    """One converged equilibrium along a continuation branch."""

    G: float
    B: float
    profile: GridProfile
    omega: float
    lambda0: float | None = None


@dataclass
class Branch:
    """Continuation branch seeded from a zero-flow equilibrium.

    ``terminated_by`` is 'bound' when every requested target was reached,
    'fold' when continuation step-halving underflowed (saddle-node reached),
    'open' while under construction.
    """

    family: str | None
    n: int | None
    points: list[BranchPoint] = field(default_factory=list)
    terminated_by: str = "open"
    failed_target: float | None = None

    @property
    def last(self) -> BranchPoint:
        return self.points[-1]


def _march(start_value: float, targets: list[float], solve_at, branch: Branch,
           min_step: float = 1e-6, initial_step: float = 0.25) -> None:
    """Shared continuation driver: walk through targets with adaptive steps.

    ``solve_at(value, guess)`` returns a BranchPoint or raises
    ConvergenceError; accepted points (targets and intermediates) are
    appended to ``branch``.  Steps start at ``initial_step``, halve on
    failure, and double after an un-halved full-sized step; jumping a large
    parameter gap in one Newton solve can land on a neighbouring branch
    without tripping the per-step winding-drift check, so the cap is the
    real branch-identity guard, not just a convergence aid.
    """
    current = start_value
    guess = branch.last.profile
    prev_omega = branch.last.omega
    cap = initial_step
    for target in targets:
        while abs(current - target) > 1e-14:
            gap = target - current
            attempted = min(abs(gap), cap)
            step = math.copysign(attempted, gap)
            halved = False
            while True:
                trial = current + step
                try:
                    point = solve_at(trial, guess)
                except ConvergenceError:
                    point = None
                if point is not None and abs(point.omega - prev_omega) > OMEGA_DRIFT_TOL:
                    point = None  # hopped to a different branch
                if point is not None:
                    break
                step *= 0.5
                halved = True
                if abs(step) < min_step:
                    branch.terminated_by = "fold"
                    branch.failed_target = target
                    return
            if halved:
                cap = max(2.0 * abs(step), min_step)
            elif attempted >= cap:
                cap *= 2.0
            current = trial
            guess = point.profile
            prev_omega = point.omega
            branch.points.append(point)
    branch.terminated_by = "bound"


def continue_in_G(seed: AnalyticEquilibrium, B: float, G_targets: list[float],
                  c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                  n_points: int = DEFAULT_NPOINTS,
                  residual_tol: float | None = None) -> Branch:
    """Continue the zero-flow equilibrium ``seed`` through ``G_targets``.

    Targets are attempted in order with the previous converged profile as
    guess; failures trigger step halving down to a 1e-6 floor, at which point
    the branch is marked fold-terminated at the first unreachable target.
    """
    prof0 = seed.to_profile(n_points)
    rtol = residual_tol if residual_tol is not None else RESIDUAL_TOL
    p0 = solve_equilibrium(0.0, B, prof0, c, residual_tol=rtol)
    branch = Branch(seed.family, seed.n,
                    [BranchPoint(0.0, B, p0, winding_number(p0))])

    def solve_at(gval: float, guess: GridProfile) -> BranchPoint:
        prof = solve_equilibrium(gval, B, guess, c, residual_tol=rtol)
        return BranchPoint(gval, B, prof, winding_number(prof))

    _march(0.0, list(G_targets), solve_at, branch)
    return branch


def continue_in_B(start: BranchPoint, B_targets: list[float],
                  c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                  family: str | None = None, n: int | None = None,
                  residual_tol: float | None = None) -> Branch:
    """Continue an existing equilibrium in B at fixed G; same contract as
    continue_in_G with the parameter roles swapped."""
    rtol = residual_tol if residual_tol is not None else RESIDUAL_TOL
    branch = Branch(family, n, [start])

    def solve_at(bval: float, guess: GridProfile) -> BranchPoint:
        prof = solve_equilibrium(start.G, bval, guess, c, residual_tol=rtol)
        return BranchPoint(start.G, bval, prof, winding_number(prof))

    _march(start.B, list(B_targets), solve_at, branch)
    return branch


@dataclass
class FoldCurve:
    """Samples of the fold location B*_{i,G} over a grid of G values."""

    index: int
    samples: list[tuple[float, float]] = field(default_factory=list)


def trace_fold_in_G(i: int, G_values, B_hi: float = 2.5,
                    c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                    B_start: float | None = None,
                    n_points: int = DEFAULT_NPOINTS,
                    tol: float = 1e-5, sign: int = -1) -> FoldCurve:
    """Fold location B*_{i,G} of the i-th branch pair over a list of G values.

    The Type I pair coalescing at fold i consists of the members with
    indices sign*(i-1) and sign*i (``sign`` picks the negative- or
    positive-winding pair; under flow the two fold at different anchoring).
    The pair is seeded at ``B_start`` (default 80% of the zero-flow fold),
    continued to each G, and the fold is then bisected in B.  Special
    sample values: +inf when the pair exists all the way up to ``B_hi``
    (no fold in the bracket), NaN when the pair could not be continued to
    that G at the seed anchoring at all.
    """
    from .analytic import critical_inverse_anchoring, solve_type1_slopes

    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    B0 = B_start if B_start is not None else \
        0.8 * critical_inverse_anchoring("I", i)
    slopes = solve_type1_slopes(B0)
    if i >= slopes.size:
        raise ValueError(f"branch pair for fold {i} does not exist at "
                         f"B = {B0:g}")
    curve = FoldCurve(index=sign * i)
    for G in G_values:
        lower = AnalyticEquilibrium("I", sign * (i - 1),
                                    sign * float(slopes[i - 1]), 0.0)
        upper = AnalyticEquilibrium("I", sign * i, sign * float(slopes[i]),
                                    0.0)
        try:
            b_lo = continue_in_G(lower, B0, [G] if G > 0.0 else [], c,
                                 n_points=n_points)
            b_up = continue_in_G(upper, B0, [G] if G > 0.0 else [], c,
                                 n_points=n_points)
            if b_lo.terminated_by != "bound" or b_up.terminated_by != "bound":
                # a member folded in G before reaching this flow strength
                curve.samples.append((float(G), float("nan")))
                continue
            b_star = detect_fold((b_lo.last.profile, b_up.last.profile),
                                 G, B0, B_hi, c, tol=tol)
        except ConvergenceError:
            b_star = float("nan")
        except ValueError:
            b_star = float("inf")
        curve.samples.append((float(G), b_star))
    return curve


#: largest single B step taken when probing pair existence inside detect_fold
_FOLD_PROBE_STEP = 0.25
#: sub-step size below which a failing probe counts as genuine nonexistence
_FOLD_PROBE_FLOOR = 1e-3


def detect_fold(pair: tuple[GridProfile, GridProfile], G: float,
                B_lo: float, B_hi: float,
                c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                tol: float = 1e-5) -> float:
    """Bisect for the B at which a stable/unstable branch pair coalesces.

    ``pair`` holds converged profiles of the two members at (G, B_lo).  The
    pair counts as existing at B when both members can be walked there from
    the last-good anchoring in steps of at most 0.25, with every sub-step
    converging, drifting in winding number by less than 0.25, and keeping
    the two separated by more than 1e-6 in sup norm.  Anomalous sub-steps
    are retried at half the size; only sub-steps failing below a 1e-3 floor
    conclude nonexistence (past a fold, Newton converges to the surviving
    remote branch rather than diverging, so failure-to-converge alone is
    not a reliable signal, and a single long jump can hop both members onto
    one surviving branch).

    Raises ValueError when the pair still exists at B_hi ("no fold in
    bracket").
    """
    good = [p.copy() for p in pair]
    good_B = B_lo

    def exists_at(B_target: float, state: list[GridProfile],
                  B_now: float) -> bool:
        profs = [p for p in state]
        oms = [winding_number(p) for p in profs]
        b = B_now
        while abs(b - B_target) > 1e-14:
            gap = B_target - b
            step = math.copysign(min(abs(gap), _FOLD_PROBE_STEP), gap)
            while True:
                new = []
                for prof, om in zip(profs, oms):
                    try:
                        sol = solve_equilibrium(G, b + step, prof, c)
                    except ConvergenceError:
                        new = None
                        break
                    if abs(winding_number(sol) - om) > OMEGA_DRIFT_TOL:
                        new = None
                        break
                    new.append(sol)
                if new is not None and float(np.max(np.abs(
                        new[0].theta - new[1].theta))) < COALESCE_TOL:
                    new = None
                if new is not None:
                    break
                step *= 0.5
                if abs(step) < _FOLD_PROBE_FLOOR:
                    return False
            b = b + step
            profs = new
            oms = [winding_number(p) for p in profs]
        state[0], state[1] = profs
        return True

    probe = [p.copy() for p in good]
    if exists_at(B_hi, probe, good_B):
        raise ValueError(f"no fold in bracket: pair still exists at B = {B_hi}")
    lo, hi = B_lo, B_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        trial = [p.copy() for p in good]
        if exists_at(mid, trial, good_B):
            lo = mid
            good = trial
            good_B = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def reconstruct_velocity(profile: GridProfile, G: float,
                         c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> np.ndarray:
    """Steady channel velocity u(z) = -G * int_{-1}^{z} s/g(theta(s)) ds.

    u(-1) = 0 by construction; u(1) returns to zero when g(theta(z)) is even
    in z, so u[-1] doubles as a symmetry diagnostic.  Units: K/(alpha4_hat*h),
    matching the time scaling of the dynamic problem.
    """
    integrand = -G * profile.z / g_of(profile.theta, c)
    return cumulative_trapezoid(integrand, profile.z, initial=0.0)
