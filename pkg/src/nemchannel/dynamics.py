"""Semi-implicit time integration of the director equation.

Each step treats diffusion implicitly with the mobility g and the rotational
denominator gamma1 g - m^2 frozen at the current state, the pressure source
explicitly, and the Robin boundary flux implicitly through a small per-step
Newton iteration (the boundary sine is the only nonlinearity, so it settles
in a handful of iterations).  A converged step reproduces the static
discretization exactly at a fixed point.

Steps whose inner iteration fails are never accepted: the integrator halves
dt and retries, regrowing toward the configured dt after a run of successes.
Strongly unstable wall-localized modes (rates of order (2 cos 2theta / B)^2
g / (gamma1 g - m^2), several hundred at B = 0.1) impose a genuine accuracy
limit: an implicit step with dt * |rate| > 2 damps a mode the dynamics
amplifies.  Basin sweeps therefore default to SWEEP_DT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .analytic import winding_number
from .bvp import static_residual
from .coefficients import DEFAULT_COEFFICIENTS, LeslieCoefficients, g_of, m_of
from .grid import DEFAULT_DZ, GridProfile, uniform_grid

__all__ = [
    "Schedule",
    "TimeStepperConfig",
    "TrajectoryResult",
    "SWEEP_DT",
    "make_initial",
    "evolve",
    "match_steady_state",
    "equilibrium_db",
    "sweep_outcomes",
    "find_critical_C",
    "find_critical_t1",
]

#: time step used by basin sweeps and bisections; small enough that the
#: fastest wall-localized growth rates at B >= 0.1 stay in the regime where
#: the implicit step amplifies rather than spuriously damps them.
SWEEP_DT = 0.002

_INNER_MAX_ITER = 12
_INNER_TOL = 1e-12
_INNER_DAMP_CAP = 0.5
_DT_FLOOR = 1e-7
_REGROW_AFTER = 20


@dataclass(frozen=True)
class Schedule:
    """Driving protocol: pressure amplitude and anchoring switch-on.

    With ``delta`` None the pressure is G for all t; otherwise it is 0 up to
    t1 and G tanh(delta (t - t1)) after.  With ``kappa`` None the Robin
    anchoring flux acts from the start; otherwise the boundary flux blends
    the held slope C into the anchoring flux with weight
    w = tanh(kappa (t - t2)):

        theta_z(-1) = C (1 - w) + w sin(2 theta(-1)) / B
        theta_z(+1) = C (1 - w) - w sin(2 theta(+1)) / B

    ``literal_flux`` selects the variant with the same sign of the sine term
    at both walls; the default form is the one whose w = 1 limit matches the
    static boundary conditions.
    """

    G: float
    t1: float = 0.0
    delta: float | None = None
    t2: float = 0.0
    kappa: float | None = None
    C: float = 0.0
    literal_flux: bool = False

    def pressure(self, t: float) -> float:
        if self.delta is None:
            return self.G
        if t <= self.t1:
            return 0.0
        return self.G * math.tanh(self.delta * (t - self.t1))

    def anchoring_weight(self, t: float) -> float:
        if self.kappa is None:
            return 1.0
        if t <= self.t2:
            return 0.0
        return math.tanh(self.kappa * (t - self.t2))

    @property
    def has_ramps(self) -> bool:
        return self.delta is not None or self.kappa is not None

    @property
    def ramp_guard_time(self) -> float:
        """Earliest time at which steadiness may be declared."""
        if not self.has_ramps:
            return 0.0
        return max(self.t1 if self.delta is not None else 0.0,
                   self.t2 if self.kappa is not None else 0.0) + 1.0


@dataclass(frozen=True)
class TimeStepperConfig:
    dz: float = DEFAULT_DZ
    dt: float = 0.01
    t_max: float = 5e3
    steady_tol: float = 1e-8
    steady_window: int = 10
    check_interval: int = 100

    @property
    def n_points(self) -> int:
        return int(round(2.0 / self.dz)) + 1


@dataclass
class TrajectoryResult:
    final_profile: GridProfile
    final_omega: float
    t_steady: float
    converged: bool
    matched_branch: str | None = None
    subdivisions: int = 0
    history: list[tuple[float, float, float]] = field(default_factory=list)
    """(t, omega, rate) samples taken at every steadiness check."""


def make_initial(kind: str, C: float, n_points: int | None = None) -> GridProfile:
    """Initial profiles: 'constant' C, 'linear' C z, 'linear_plus_half_pi'."""
    n = n_points if n_points is not None else TimeStepperConfig().n_points
    z = uniform_grid(n)
    if kind == "constant":
        theta = np.full(n, float(C))
    elif kind == "linear":
        theta = C * z
    elif kind == "linear_plus_half_pi":
        theta = C * z + 0.5 * math.pi
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    return GridProfile(z, theta)


def _try_step(th: np.ndarray, z: np.ndarray, dt: float, dz: float,
              G_now: float, B: float, w_next: float, sched: Schedule,
              c: LeslieCoefficients) -> np.ndarray | None:
    """One semi-implicit step; None when the inner iteration fails."""
    n = th.size
    gg = g_of(th, c)
    mm = m_of(th, c)
    denom = c.gamma1 * gg - mm * mm
    base = denom / dt * th + G_now * z * mm
    hold = sched.C * (1.0 - w_next)
    top_sign = 1.0 if sched.literal_flux else -1.0
    thn = th.copy()
    for _ in range(_INNER_MAX_ITER):
        sb = hold + w_next * math.sin(2.0 * thn[0]) / B
        sbp = w_next * 2.0 * math.cos(2.0 * thn[0]) / B
        st = hold + top_sign * w_next * math.sin(2.0 * thn[-1]) / B
        stp = top_sign * w_next * 2.0 * math.cos(2.0 * thn[-1]) / B
        r = np.empty(n)
        r[1:-1] = denom[1:-1] / dt * thn[1:-1] \
            - gg[1:-1] * (thn[:-2] - 2.0 * thn[1:-1] + thn[2:]) / (dz * dz) \
            - base[1:-1]
        r[0] = denom[0] / dt * thn[0] \
            - gg[0] * (2.0 * thn[1] - 2.0 * thn[0] - 2.0 * dz * sb) / (dz * dz) \
            - base[0]
        r[-1] = denom[-1] / dt * thn[-1] \
            - gg[-1] * (2.0 * thn[-2] - 2.0 * thn[-1] + 2.0 * dz * st) / (dz * dz) \
            - base[-1]
        ab = np.zeros((3, n))
        ab[1, :] = denom / dt
        ab[1, 1:-1] += 2.0 * gg[1:-1] / (dz * dz)
        ab[0, 2:] = -gg[1:-1] / (dz * dz)
        ab[2, :-2] = -gg[1:-1] / (dz * dz)
        ab[1, 0] += 2.0 * gg[0] / (dz * dz) + 2.0 * gg[0] * sbp / dz
        ab[0, 1] = -2.0 * gg[0] / (dz * dz)
        ab[1, -1] += 2.0 * gg[-1] / (dz * dz) - 2.0 * gg[-1] * stp / dz
        ab[2, -2] = -2.0 * gg[-1] / (dz * dz)
        d = solve_banded((1, 1), ab, -r)
        mx = float(np.max(np.abs(d)))
        lam = _INNER_DAMP_CAP / mx if mx > _INNER_DAMP_CAP else 1.0
        thn = thn + lam * d
        if not np.all(np.isfinite(thn)):
            return None
        if mx * lam < _INNER_TOL:
            return thn
    return None


def evolve(initial: GridProfile, schedule: Schedule,
           config: TimeStepperConfig = TimeStepperConfig(),
           B: float | None = None,
           c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> TrajectoryResult:
    """Integrate to steady state (or t_max) with adaptive sub-stepping.

    ``B`` must be supplied (it enters the boundary flux).  Steadiness is
    max |theta_t| < steady_tol at ``steady_window`` consecutive checks, each
    ``check_interval`` accepted steps apart, and never before the schedule
    ramps have saturated.
    """
    if B is None or B <= 0.0:
        raise ValueError("evolve needs the inverse anchoring strength B > 0")
    z = initial.z
    dz = initial.dz
    th = initial.theta.copy()
    t = 0.0
    dt = config.dt
    n_good = 0
    subdivisions = 0
    accepted = 0
    consec = 0
    history: list[tuple[float, float, float]] = []
    guard = schedule.ramp_guard_time
    converged = False

    while t < config.t_max - 1e-12:
        step_dt = min(dt, config.t_max - t)
        g_now = schedule.pressure(t)
        w_next = schedule.anchoring_weight(t + step_dt)
        new = _try_step(th, z, step_dt, dz, g_now, B, w_next, schedule, c)
        if new is None:
            dt = dt * 0.5
            subdivisions += 1
            n_good = 0
            if dt < _DT_FLOOR:
                raise RuntimeError(
                    f"time step collapsed below {_DT_FLOOR:g} at t = {t:.6g}")
            continue
        rate = float(np.max(np.abs(new - th))) / step_dt
        th = new
        t += step_dt
        accepted += 1
        n_good += 1
        if n_good >= _REGROW_AFTER and dt < config.dt:
            dt = min(2.0 * dt, config.dt)
            n_good = 0
        if accepted % config.check_interval == 0:
            omega = float((th[-1] - th[0]) / (2.0 * math.pi))
            history.append((t, omega, rate))
            if rate < config.steady_tol and t > guard:
                consec += 1
                if consec >= config.steady_window:
                    converged = True
                    break
            else:
                consec = 0

    final = GridProfile(z.copy(), th)
    if converged:
        res = static_residual(final, schedule.pressure(t), B, c,
                              literal_flux=schedule.literal_flux,
                              hold=schedule.C,
                              weight=schedule.anchoring_weight(t))
        final = GridProfile(z.copy(), th, residual_norm=float(np.max(np.abs(res))))
    return TrajectoryResult(final_profile=final,
                            final_omega=winding_number(final),
                            t_steady=t, converged=converged,
                            subdivisions=subdivisions, history=history)


# ---------------------------------------------------------------------------
# steady-state matching and critical-parameter bisections
# ---------------------------------------------------------------------------

def match_steady_state(profile: GridProfile, branch_db) -> str | None:
    """Label of the stored equilibrium closest to ``profile``.

    Candidates are filtered to winding number within 0.05 of the profile's,
    then ranked by L2 distance; None when nothing passes the filter.
    ``branch_db`` is a mapping label -> GridProfile (or anything exposing
    ``.items()`` with GridProfile values).
    """
    items = dict(branch_db.items())
    if not items:
        raise ValueError("branch database is empty: nothing to match against")
    om = winding_number(profile)
    best: tuple[float, str] | None = None
    for label, ref in items.items():
        if abs(winding_number(ref) - om) >= 0.05:
            continue
        ref_theta = np.interp(profile.z, ref.z, ref.theta)
        dist = float(np.sqrt(np.trapezoid((profile.theta - ref_theta) ** 2,
                                          profile.z)))
        if best is None or dist < best[0]:
            best = (dist, label)
    return None if best is None else best[1]


def equilibrium_db(G: float, B: float,
                   indices: tuple[int, ...] = (0, 2, -2, 4, -4, 6, -6),
                   c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                   n_points: int | None = None) -> dict[str, GridProfile]:
    """Type I equilibria a_n continued to the given (G, B).

    Returns a mapping 'I+n' -> profile for every requested index that exists
    there.  Slopes that have already folded away at this B under zero flow
    are built at a smaller anchoring value and continued in B at fixed G
    (the folds move to larger B as G grows, so states can exist at (G, B)
    without a zero-flow ancestor at the same B).
    """
    from .analytic import (AnalyticEquilibrium, critical_inverse_anchoring,
                           solve_type1_slopes)
    from .bvp import ConvergenceError, continue_in_B, continue_in_G

    n = n_points if n_points is not None else TimeStepperConfig().n_points
    db: dict[str, GridProfile] = {}
    for idx in indices:
        k = abs(idx)
        if k == 0:
            b_seed = B
        else:
            fold_i = 2 * ((k + 1) // 2)
            b_exist = critical_inverse_anchoring("I", fold_i)
            b_seed = B if B < 0.9 * b_exist else 0.8 * b_exist
        slopes = solve_type1_slopes(b_seed)
        if k >= slopes.size:
            continue
        a = math.copysign(slopes[k], idx) if idx != 0 else 0.0
        seed = AnalyticEquilibrium(family="I", n=idx, a=a, b=0.0)
        # fine ladder: large G steps can hop between branches whose winding
        # numbers differ by less than the per-step drift tolerance
        ladder = (0.5, 1.0, 2.0, 4.0, 7.0, 10.0, 15.0, 20.0, 30.0, 40.0,
                  55.0, 70.0, 100.0)
        targets = [x for x in ladder if x < G] + [G]
        try:
            branch = continue_in_G(seed, b_seed, targets, c, n_points=n)
        except ConvergenceError:
            continue
        if not branch.points or abs(branch.points[-1].G - G) > 1e-12:
            continue
        point = branch.points[-1]
        if b_seed != B:
            bb = continue_in_B(point, [B], c, family="I", n=idx)
            if not bb.points or abs(bb.points[-1].B - B) > 1e-12:
                continue
            point = bb.points[-1]
        db[f"I{idx:+d}"] = point.profile
    return db


def _outcome(C: float, G: float, B: float, db, cfg: TimeStepperConfig,
             c: LeslieCoefficients) -> str | None:
    traj = evolve(make_initial("linear", C, cfg.n_points), Schedule(G=G),
                  cfg, B=B, c=c)
    if not traj.converged:
        return None
    return match_steady_state(traj.final_profile, db)


def sweep_outcomes(G: float, B: float, C_values,
                   branch_db: dict[str, GridProfile] | None = None,
                   cfg: TimeStepperConfig | None = None,
                   c: LeslieCoefficients = DEFAULT_COEFFICIENTS
                   ) -> list[tuple[float, str | None, float, float]]:
    """Steady outcome for each initial slope under constant driving.

    Each run starts from theta = C z; the result rows are
    ``(C, matched_label, omega, t_steady)`` with label None when the run
    did not converge or matched nothing in the database.
    """
    if cfg is None:
        cfg = TimeStepperConfig(dt=SWEEP_DT)
    if branch_db is None:
        branch_db = equilibrium_db(G, B, c=c, n_points=cfg.n_points)
    rows = []
    for C in C_values:
        traj = evolve(make_initial("linear", float(C), cfg.n_points),
                      Schedule(G=G), cfg, B=B, c=c)
        label = (match_steady_state(traj.final_profile, branch_db)
                 if traj.converged else None)
        rows.append((float(C), label, traj.final_omega, traj.t_steady))
    return rows


def find_critical_C(G: float, B: float, bracket: tuple[float, float],
                    cfg: TimeStepperConfig | None = None,
                    c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                    tol: float = 1e-3,
                    branch_db: dict[str, GridProfile] | None = None) -> float:
    """Basin boundary in the initial slope C between 'I-2' and 'I+0' outcomes.

    Trajectories start from theta = C z under constant driving.  The lower
    bracket end must land on a_{-2}, the upper on a_0; bisection then
    narrows the boundary to |dC| < tol.
    """
    if cfg is None:
        cfg = TimeStepperConfig(dt=SWEEP_DT)
    if branch_db is None:
        branch_db = equilibrium_db(G, B, indices=(0, 2, -2), c=c,
                                   n_points=cfg.n_points)
    lo, hi = bracket
    out_lo = _outcome(lo, G, B, branch_db, cfg, c)
    out_hi = _outcome(hi, G, B, branch_db, cfg, c)
    if out_lo != "I-2" or out_hi != "I+0":
        raise ValueError(
            f"bracket does not straddle the a_-2 / a_0 boundary: "
            f"outcome({lo}) = {out_lo}, outcome({hi}) = {out_hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _outcome(mid, G, B, branch_db, cfg, c) == "I-2":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_critical_t1(C: float, B: float, G_bar: float, delta: float,
                     kappa: float, t2: float = 0.0,
                     cfg: TimeStepperConfig | None = None,
                     c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                     tol: float = 1e-3, t1_max: float = 10.0) -> float:
    """Critical pressure delay t1* for the ramped protocol, or NaN.

    Starting from theta = C z with the anchoring ramp at t2 and the pressure
    ramp at t1, the steady outcome for immediate pressure (t1 = 0) can
    differ from the outcome when the zero-flow state is allowed to settle
    first (t1 = t1_max).  When they differ, bisection locates the switching
    delay to |dt1| < tol; when they agree there is no critical delay and NaN
    is returned.
    """
    if cfg is None:
        cfg = TimeStepperConfig(dt=SWEEP_DT)

    def outcome(t1: float) -> int:
        sched = Schedule(G=G_bar, t1=t1, delta=delta, t2=t2, kappa=kappa, C=C)
        traj = evolve(make_initial("linear", C, cfg.n_points), sched,
                      cfg, B=B, c=c)
        return round(traj.final_omega)

    early = outcome(0.0)
    late = outcome(t1_max)
    if early == late:
        return math.nan
    lo, hi = 0.0, t1_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if outcome(mid) == early:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
