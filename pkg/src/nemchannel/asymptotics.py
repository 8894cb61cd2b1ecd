"""Small-G corrections and large-G boundary-layer constructions.

Small G: about a zero-flow equilibrium theta* = a z + b the first-order
correction solves theta1'' = z Q(a z + b) with linearized Robin conditions,
giving theta1 = J(z) + C z + D in closed quadrature form.

Large G: away from thin layers the director sits at a zero of Q, i.e. at
sigma_k^{+-} = +-arctan(sqrt(alpha2/alpha3)) + k pi.  Wall layers of width
G^{-1/2} (stretched variables eta = sqrt(G)(z+1), zeta = sqrt(G)(1-z)) and a
center transition of width G^{-1/3} (xi = G^{1/3} z) connect the plateaus to
the boundary conditions; each layer problem is a small Newton BVP on the
stretched grid.  A composite profile patches the pieces together on [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_banded

from .analytic import AnalyticEquilibrium
from .coefficients import (
    DEFAULT_COEFFICIENTS,
    LeslieCoefficients,
    flow_alignment_angle,
    q_of,
    q_prime_of,
)
from .grid import DEFAULT_NPOINTS, GridProfile, uniform_grid

__all__ = [
    "SmallGCorrection",
    "LayerSolution",
    "small_g_correction",
    "outer_value",
    "solve_layer",
    "composite_large_g",
    "extract_outer_indices",
    "layer_width",
    "center_transition_width",
    "LayerError",
]

_QUAD_KW = dict(epsabs=1e-10, epsrel=1e-11, limit=200)


class LayerError(RuntimeError):
    """A layer solve failed to converge or to decay onto its far field."""


# ---------------------------------------------------------------------------
# small G
# ---------------------------------------------------------------------------

@dataclass
class SmallGCorrection:
    """First-order correction theta1 = J(z) + C z + D about a linear base."""

    base: AnalyticEquilibrium
    theta1: GridProfile
    C: float
    D: float

    def composite(self, G: float) -> GridProfile:
        """theta* + G * theta1 on the correction's grid."""
        z = self.theta1.z
        theta = self.base.a * z + self.base.b + G * self.theta1.theta
        return GridProfile(z.copy(), theta)


def small_g_correction(base: AnalyticEquilibrium, B: float,
                       c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                       n_points: int = DEFAULT_NPOINTS) -> SmallGCorrection:
    """Quadrature solution of the first-order small-G problem.

    I(r) = int_0^r s Q(a s + b) ds and J(z) = int_0^z I(r) dr; the nested
    integral is collapsed to the single integral J(z) = int_0^z (z-s) s
    Q(a s + b) ds.  C and D follow from the linearized Robin conditions with
    kappa = (-1)^k cos(2a) (k = 0 for Type I bases, 1 for Type II).
    """
    if base.family not in ("I", "II"):
        raise ValueError("first-order correction is defined for Type I/II bases only")
    a, b = base.a, base.b
    kappa = math.cos(2.0 * a) * (1.0 if base.family == "I" else -1.0)
    if abs(kappa) < 1e-12:
        raise ValueError("cos(2a) = 0: the intercept constant D is singular here")
    if B <= 0.0:
        raise ValueError("B must be positive")

    def iq(r: float) -> float:
        val, _ = quad(lambda s: s * q_of(a * s + b, c), 0.0, r, **_QUAD_KW)
        return val

    def jq(z: float) -> float:
        val, _ = quad(lambda s: (z - s) * s * q_of(a * s + b, c), 0.0, z, **_QUAD_KW)
        return val

    i_top, i_bot = iq(1.0), iq(-1.0)
    j_top, j_bot = jq(1.0), jq(-1.0)
    C = (2.0 * kappa * (j_bot - j_top) - B * (i_top + i_bot)) / (2.0 * B + 4.0 * kappa)
    D = -0.5 * (j_top + j_bot) + B * (i_bot - i_top) / (4.0 * kappa)

    z = uniform_grid(n_points)
    theta1 = np.array([jq(zz) for zz in z]) + C * z + D
    return SmallGCorrection(base, GridProfile(z, theta1), C, D)


# ---------------------------------------------------------------------------
# large G
# ---------------------------------------------------------------------------

def outer_value(k: int, sign: int,
                c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> float:
    """Outer plateau sigma_k^{+-} = sign * arctan(sqrt(alpha2/alpha3)) + k pi."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return sign * flow_alignment_angle(c) + k * math.pi


#: default truncation lengths for wall and center layers
WALL_L = 10.0
CENTER_L = 12.0


@dataclass
class LayerSolution:
    """Solution of one stretched boundary-layer problem.

    ``coord`` holds the stretched variable (eta, zeta or xi), ``theta`` the
    angle on it.  ``sigma_far`` is the matched outer value (a pair for the
    center layer); ``tail_mismatch`` measures how well the profile has
    flattened onto sigma before the truncation point.
    """

    side: str
    coord: np.ndarray
    theta: np.ndarray
    sigma_far: float | tuple[float, float]
    L: float
    B_bar: float | None = None
    tail_mismatch: float = field(default=float("nan"))

    @property
    def wall_value(self) -> float:
        return float(self.theta[0])

    def unstretch(self, G: float) -> tuple[np.ndarray, np.ndarray]:
        """Map the stretched grid back to channel coordinates z."""
        if self.side == "left":
            return -1.0 + self.coord / math.sqrt(G), self.theta
        if self.side == "right":
            return 1.0 - self.coord[::-1] / math.sqrt(G), self.theta[::-1]
        return self.coord / G ** (1.0 / 3.0), self.theta


def _newton_banded(theta, residual, jacobian, max_iter=60, tol=1e-12):
    """Small damped-Newton driver shared by the layer problems."""
    for _ in range(max_iter):
        r = residual(theta)
        ab = jacobian(theta)
        d = solve_banded((1, 1), ab, -r)
        if not np.all(np.isfinite(d)):
            raise LayerError("layer Newton update not finite")
        mx = float(np.max(np.abs(d)))
        lam = min(1.0, 1.0 / mx) if mx > 1.0 else 1.0
        theta = theta + lam * d
        if mx * lam < tol:
            return theta
    raise LayerError(f"layer Newton did not converge (last update {mx:.2e})")


def solve_layer(side: str, sigma_far, B_bar: float | None = None,
                L: float | None = None, spacing: float = 0.05,
                c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                initial: np.ndarray | None = None) -> LayerSolution:
    """Solve one of the three stretched layer problems.

    left/right: theta'' = -+ Q(theta) on [0, L], Robin B_bar theta'(0) =
    sin(2 theta(0)) at the wall (B_bar = inf means free, theta'(0) = 0) and
    theta(L) = sigma_far; started from the constant sigma_far unless an
    ``initial`` guess is given.

    center: theta'' = xi Q(theta) on [-L, L] with Dirichlet values
    sigma_far = (sigma_left, sigma_right); started from a tanh ramp between
    the two plateaus (a straight-line start stalls the Newton iteration).
    """
    if side not in ("left", "right", "center"):
        raise ValueError("side must be left, right or center")
    if L is None:
        L = CENTER_L if side == "center" else WALL_L

    if side == "center":
        s_lo, s_hi = sigma_far
        n = 2 * int(round(L / spacing)) + 1
        x = np.linspace(-L, L, n)
        h = x[1] - x[0]
        if initial is None:
            mean, half = 0.5 * (s_lo + s_hi), 0.5 * (s_lo - s_hi)
            initial = mean - half * np.tanh(x)

        def residual(th):
            r = np.empty(n)
            r[1:-1] = (th[:-2] - 2.0 * th[1:-1] + th[2:]) / (h * h) \
                - x[1:-1] * q_of(th[1:-1], c)
            r[0] = th[0] - s_lo
            r[-1] = th[-1] - s_hi
            return r

        def jacobian(th):
            ab = np.zeros((3, n))
            ab[1, 1:-1] = -2.0 / (h * h) - x[1:-1] * q_prime_of(th[1:-1], c)
            ab[0, 2:] = 1.0 / (h * h)
            ab[2, :-2] = 1.0 / (h * h)
            ab[1, 0] = 1.0
            ab[1, -1] = 1.0
            ab[0, 1] = 0.0
            ab[2, -2] = 0.0
            return ab

        theta = _newton_banded(initial.astype(float), residual, jacobian)
        tail = max(abs(theta[int(0.05 * n)] - s_lo), abs(theta[-int(0.05 * n)] - s_hi))
        return LayerSolution("center", x, theta, (float(s_lo), float(s_hi)),
                             L, None, float(tail))

    if B_bar is None or B_bar <= 0.0:
        raise ValueError("wall layers need B_bar > 0 (math.inf for free walls)")
    # left: theta'' = -Q  (residual theta'' + Q); right: theta'' = +Q
    sgn = 1.0 if side == "left" else -1.0
    n = int(round(L / spacing)) + 1
    x = np.linspace(0.0, L, n)
    h = x[1] - x[0]
    if initial is None:
        initial = np.full(n, float(sigma_far))
    robin = 0.0 if math.isinf(B_bar) else 1.0 / B_bar

    def residual(th):
        r = np.empty(n)
        r[1:-1] = (th[:-2] - 2.0 * th[1:-1] + th[2:]) / (h * h) + sgn * q_of(th[1:-1], c)
        r[0] = (2.0 * th[1] - 2.0 * th[0]
                - 2.0 * h * math.sin(2.0 * th[0]) * robin) / (h * h) \
            + sgn * q_of(th[0], c)
        r[-1] = th[-1] - sigma_far
        return r

    def jacobian(th):
        ab = np.zeros((3, n))
        ab[1, 1:-1] = -2.0 / (h * h) + sgn * q_prime_of(th[1:-1], c)
        ab[0, 2:] = 1.0 / (h * h)
        ab[2, :-2] = 1.0 / (h * h)
        ab[1, 0] = (-2.0 - 4.0 * h * math.cos(2.0 * th[0]) * robin) / (h * h) \
            + sgn * q_prime_of(th[0], c)
        ab[0, 1] = 2.0 / (h * h)
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        return ab

    theta = _newton_banded(initial.astype(float), residual, jacobian)
    tail = float(abs(theta[int(0.9 * (n - 1))] - sigma_far))
    if tail > 1e-4:
        raise LayerError(
            f"{side} layer failed to flatten onto sigma={sigma_far:.6g} "
            f"(tail mismatch {tail:.2e}); increase L or check the far field")
    return LayerSolution(side, x, theta, float(sigma_far), L, B_bar, tail)


def extract_outer_indices(profile: GridProfile,
                          c: LeslieCoefficients = DEFAULT_COEFFICIENTS
                          ) -> tuple[int, int]:
    """Read (k1, k2) off a full large-G solve.

    The left plateau is snapped to the sigma^+ family and the right plateau
    to sigma^- (the families the left/right layer equations can decay onto);
    theta(-+0.5) is used as the plateau sample, which is safely outside the
    wall layers for G >= 100.
    """
    th_l = float(np.interp(-0.5, profile.z, profile.theta))
    th_r = float(np.interp(0.5, profile.z, profile.theta))
    s0 = flow_alignment_angle(c)
    k1 = round((th_l - s0) / math.pi)
    k2 = round((th_r + s0) / math.pi)
    return k1, k2


def composite_large_g(k1: int, k2: int, G: float, B: float,
                      signs: tuple[int, int] = (1, -1),
                      c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                      n_points: int = DEFAULT_NPOINTS,
                      L_wall: float = WALL_L, L_center: float = CENTER_L
                      ) -> GridProfile:
    """Patch outer plateaus and the three layers into a profile on [-1, 1].

    The left outer value is sigma_{k1}^{signs[0]}, the right
    sigma_{k2}^{signs[1]}.  Layers occupy the regions where their stretched
    coordinate is below the truncation length; the center region is capped at
    |z| <= 0.5 so it can never swallow the walls.
    """
    if G <= 0.0:
        raise ValueError("composite construction needs G > 0")
    s_left = outer_value(k1, signs[0], c)
    s_right = outer_value(k2, signs[1], c)
    b_bar = math.sqrt(G) * B

    left = solve_layer("left", s_left, b_bar, L=L_wall, c=c)
    right = solve_layer("right", s_right, b_bar, L=L_wall, c=c)
    center = None
    if abs(s_left - s_right) > 1e-14:
        center = solve_layer("center", (s_left, s_right), L=L_center, c=c)

    z = uniform_grid(n_points)
    theta = np.where(z < 0.0, s_left, s_right)
    z_c = min(L_center * G ** (-1.0 / 3.0), 0.5)
    if center is not None:
        zc, tc = center.unstretch(G)
        mask = np.abs(z) <= z_c
        theta[mask] = np.interp(z[mask], zc, tc)
    e_wall = min(L_wall / math.sqrt(G), 1.0 - z_c)
    zl, tl = left.unstretch(G)
    mask = z <= -1.0 + e_wall
    theta[mask] = np.interp(z[mask], zl, tl)
    zr, tr = right.unstretch(G)
    mask = z >= 1.0 - e_wall
    theta[mask] = np.interp(z[mask], zr, tr)
    return GridProfile(z, theta)


def _first_crossing(dist: np.ndarray, x: np.ndarray, level: float) -> float:
    """Linear-interpolated first x at which dist drops below level."""
    below = np.nonzero(dist < level)[0]
    if below.size == 0:
        raise LayerError("profile never reaches the outer plateau at this fraction")
    j = below[0]
    if j == 0:
        return float(x[0])
    x0, x1 = x[j - 1], x[j]
    d0, d1 = dist[j - 1], dist[j]
    return float(x0 + (d0 - level) * (x1 - x0) / (d0 - d1))


def layer_width(profile: GridProfile, fraction: float = 0.01,
                theta_outer: tuple[float, float] | None = None
                ) -> tuple[float, float]:
    """Wall-layer widths (left, right): distance from each wall at which
    |theta - theta_outer| first falls below fraction * |wall - outer|.

    ``theta_outer`` defaults to the plateau values sampled at z = -+0.5,
    which sit outside the layers once they are thin.  Passing the matched
    outer values explicitly gives the cleanest scaling measurements.  Raises
    when there is no layer to measure (wall value equal to the plateau).
    """
    z, th = profile.z, profile.theta
    half = z.size // 2
    if theta_outer is None:
        left_ref = float(np.interp(-0.5, z, th))
        right_ref = float(np.interp(0.5, z, th))
    else:
        left_ref, right_ref = theta_outer

    drop_l = abs(th[0] - left_ref)
    drop_r = abs(th[-1] - right_ref)
    if drop_l < 1e-10 or drop_r < 1e-10:
        raise LayerError("no wall layer: boundary value equals the plateau")
    w_l = _first_crossing(np.abs(th[:half] - left_ref), z[:half] + 1.0,
                          fraction * drop_l)
    w_r = _first_crossing(np.abs(th[half:] - right_ref)[::-1],
                          (1.0 - z[half:])[::-1], fraction * drop_r)
    return w_l, w_r


def center_transition_width(profile: GridProfile, fraction: float = 0.01,
                            theta_outer: float | None = None) -> float:
    """Half-width of the center transition of a two-plateau profile.

    Measured walking right from z = 0 until |theta - theta_outer| falls
    below fraction * |theta(0) - theta_outer|, where theta_outer defaults to
    the plateau value sampled at z = 0.5.
    """
    z, th = profile.z, profile.theta
    half = z.size // 2
    zr, thr = z[half:], th[half:]
    if theta_outer is None:
        theta_outer = float(np.interp(0.5, z, th))
    drop = abs(th[half] - theta_outer)
    if drop < 1e-10:
        raise LayerError("no center transition: profile is flat at z = 0")
    return _first_crossing(np.abs(thr - theta_outer), zr - zr[0], fraction * drop)
