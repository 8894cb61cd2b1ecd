"""Closed-form equilibria of the zero-flow problem and their fold values.

With no pressure gradient the static problem is solved exactly by straight
lines theta = a*z + b.  The weak-anchoring boundary conditions restrict
(a, b) to four families:

    Type I   : B*a = -sin(2a), b = 0 (mod pi)
    Type II  : B*a =  sin(2a), b = pi/2 (mod pi)
    Type III : a = (n + 1/4)*pi, cos(2b) = -B*(n + 1/4)*pi
    Type IV  : a = (n + 3/4)*pi, cos(2b) =  B*(n + 3/4)*pi

Nonzero Type I/II slopes exist only below critical inverse-anchoring values
B*_i at which a branch pair coalesces; those are computed here from the
stationary points of sin(2a)/a (roots of tan x = x with x = 2a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .grid import DEFAULT_NPOINTS, GridProfile

__all__ = [
    "AnalyticEquilibrium",
    "solve_type1_slopes",
    "solve_type2_slopes",
    "solve_type34_intercepts",
    "critical_inverse_anchoring",
    "fold_pair",
    "winding_number",
    "director_field",
    "tan_eq_x_roots",
    "type1_equilibria",
    "type2_equilibria",
    "type34_equilibria",
    "all_equilibria",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AnalyticEquilibrium:
    """A zero-flow equilibrium theta = a*z + b.

    ``n`` is the branch label: for Types I/II the position of |a| in the
    ascending root list (sign of n = sign of a); for Types III/IV the integer
    defining the slope.
    """

    family: str
    n: int
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.family not in ("I", "II", "III", "IV"):
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def omega(self) -> float:
        """Winding number (theta(1) - theta(-1)) / (2 pi) = a / pi."""
        return self.a / math.pi

    def to_profile(self, n_points: int = DEFAULT_NPOINTS) -> GridProfile:
        return GridProfile.linear(self.a, self.b, n_points)


def tan_eq_x_roots(count: int) -> np.ndarray:
    """First ``count`` positive roots of tan(x) = x.

    Solved as sin(x) - x cos(x) = 0 on (k*pi, k*pi + pi/2), which avoids the
    tangent poles; there is exactly one root per bracket.
    """
    roots = []
    for k in range(1, count + 1):
        lo, hi = k * math.pi, k * math.pi + math.pi / 2.0
        roots.append(brentq(lambda x: math.sin(x) - x * math.cos(x),
                            lo + 1e-12, hi - 1e-12, xtol=1e-14, rtol=8.9e-16))
    return np.asarray(roots)


def _breakpoints(a_max: float) -> np.ndarray:
    """Partition of (0, a_max] on which sin(2a)/a is piecewise monotone.

    Zeros of sin(2a) (multiples of pi/2) alone are not enough: the interior
    extrema sit at a = x_k/2 with tan(x_k) = x_k, and both kinds of points are
    needed so each subinterval brackets at most one slope root.
    """
    pts = list(np.arange(1, int(a_max / (math.pi / 2.0)) + 2) * (math.pi / 2.0))
    n_stat = int(2.0 * a_max / math.pi) + 2
    pts.extend(0.5 * x for x in tan_eq_x_roots(n_stat))
    pts = sorted(p for p in pts if 0.0 < p < a_max - 1e-12)
    pts.append(a_max)
    return np.asarray(pts)


def _slope_roots(B: float, a_max: float, sign: float) -> list[float]:
    """Roots of B*a = sign*sin(2a) in (0, a_max], via phi(a) = sign*sin(2a)/a = B."""

    def phi(a: float) -> float:
        return sign * math.sin(2.0 * a) / a

    roots: list[float] = []
    lo = 0.0
    f_lo = 2.0 * sign  # limit of phi at a -> 0+
    for hi in _breakpoints(a_max):
        f_hi = phi(hi)
        if (f_lo - B) * (f_hi - B) < 0.0:
            roots.append(brentq(lambda a: phi(a) - B, max(lo, 1e-300), hi,
                                xtol=1e-13, rtol=8.9e-16))
        elif f_hi == B and hi < a_max:  # root exactly at a breakpoint
            roots.append(hi)
        lo, f_lo = hi, f_hi
    return roots


def solve_type1_slopes(B: float, a_max: float = 4.0 * math.pi,
                       include_negative: bool = False) -> np.ndarray:
    """Slopes of Type I equilibria (B*a = -sin 2a) in [0, a_max], ascending.

    a_0 = 0 is always present.  With ``include_negative`` the mirrored
    negative roots are prepended.
    """
    if B <= 0.0:
        raise ValueError("B must be positive")
    pos = _slope_roots(B, a_max, sign=-1.0)
    roots = np.concatenate(([0.0], pos))
    if include_negative:
        roots = np.concatenate((-roots[:0:-1], roots))
    return roots


def solve_type2_slopes(B: float, a_max: float = 4.0 * math.pi,
                       include_negative: bool = False) -> np.ndarray:
    """Slopes of Type II equilibria (B*a = sin 2a); same contract as Type I."""
    if B <= 0.0:
        raise ValueError("B must be positive")
    pos = _slope_roots(B, a_max, sign=1.0)
    roots = np.concatenate(([0.0], pos))
    if include_negative:
        roots = np.concatenate((-roots[:0:-1], roots))
    return roots


def solve_type34_intercepts(B: float, n: int, family: str) -> list[float]:
    """Intercepts b in [0, pi) for Type III/IV at index n; empty if none exist.

    Returns the two roots of cos(2b) = -+ B*(n + 1/4 or 3/4)*pi per period;
    they coincide when the argument sits exactly at +-1.
    """
    if B <= 0.0:
        raise ValueError("B must be positive")
    if family == "III":
        arg = -B * (n + 0.25) * math.pi
    elif family == "IV":
        arg = B * (n + 0.75) * math.pi
    else:
        raise ValueError("family must be 'III' or 'IV'")
    if abs(arg) > 1.0:
        return []
    b1 = 0.5 * math.acos(arg)
    b2 = math.pi - b1
    if b2 >= math.pi:  # arg == 1: both roots collapse to b = 0
        b2 = 0.0
    return sorted((b1, b2))


def critical_inverse_anchoring(family: str, i: int) -> float:
    """Critical B*_i at which the i-th Type I/II branch pair coalesces.

    B*_1 = 2 (the Type II branch merging into the constant at a -> 0); for
    i >= 2, B*_i = 2|sin x_{i-1}|/x_{i-1} with x_k the k-th root of
    tan x = x.  Even i are Type I pairs, odd i Type II; B*_{-i} = B*_i.
    """
    i = abs(i)
    if i == 0:
        raise ValueError("pair index 0 has no fold (constant branches persist)")
    if family not in ("I", "II"):
        raise ValueError("fold values exist for families 'I' and 'II' only")
    if (i % 2 == 0) != (family == "I"):
        raise ValueError(f"family {family} has no pair with index {i} "
                         "(Type I pairs have even upper index, Type II odd)")
    if i == 1:
        return 2.0
    x = tan_eq_x_roots(i - 1)[-1]
    return 2.0 * abs(math.sin(x)) / x


def fold_pair(i: int) -> tuple[str, int, int]:
    """(family, lower index, upper index) of the branch pair that folds at B*_i."""
    i_abs = abs(i)
    if i_abs == 0:
        raise ValueError("pair index must be nonzero")
    family = "I" if i_abs % 2 == 0 else "II"
    lo, hi = i_abs - 1, i_abs
    if i < 0:
        lo, hi = -lo, -hi
    return family, lo, hi


def winding_number(profile: GridProfile) -> float:
    """(theta(1) - theta(-1)) / (2 pi)."""
    return float(profile.theta[-1] - profile.theta[0]) / _TWO_PI


def director_field(profile: GridProfile, z) -> np.ndarray:
    """Director (sin theta, 0, cos theta) at position(s) z, shape (..., 3).

    n and -n describe the same physical state; callers must treat them as
    equivalent.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < -1.0) or np.any(z > 1.0):
        raise ValueError("z must lie in [-1, 1]")
    theta = np.interp(z, profile.z, profile.theta)
    return np.stack((np.sin(theta), np.zeros_like(theta), np.cos(theta)), axis=-1)


def type1_equilibria(B: float, a_max: float = 4.0 * math.pi,
                     include_negative: bool = True) -> list[AnalyticEquilibrium]:
    eqs = []
    for k, a in enumerate(solve_type1_slopes(B, a_max)):
        eqs.append(AnalyticEquilibrium("I", k, float(a), 0.0))
        if include_negative and k > 0:
            eqs.append(AnalyticEquilibrium("I", -k, float(-a), 0.0))
    return sorted(eqs, key=lambda e: e.a)


def type2_equilibria(B: float, a_max: float = 4.0 * math.pi,
                     include_negative: bool = True) -> list[AnalyticEquilibrium]:
    eqs = []
    for k, a in enumerate(solve_type2_slopes(B, a_max)):
        eqs.append(AnalyticEquilibrium("II", k, float(a), math.pi / 2.0))
        if include_negative and k > 0:
            eqs.append(AnalyticEquilibrium("II", -k, float(-a), math.pi / 2.0))
    return sorted(eqs, key=lambda e: e.a)


def type34_equilibria(B: float, family: str, a_max: float = 4.0 * math.pi
                      ) -> list[AnalyticEquilibrium]:
    """All Type III or IV equilibria with |slope| <= a_max."""
    offset = 0.25 if family == "III" else 0.75
    eqs = []
    n = math.floor(-a_max / math.pi - offset)
    while (n + offset) * math.pi <= a_max:
        a = (n + offset) * math.pi
        for b in solve_type34_intercepts(B, n, family):
            eqs.append(AnalyticEquilibrium(family, n, a, b))
        n += 1
    return eqs


def all_equilibria(B: float, a_max: float = 4.0 * math.pi,
                   families: tuple[str, ...] = ("I", "II", "III", "IV")
                   ) -> list[AnalyticEquilibrium]:
    eqs: list[AnalyticEquilibrium] = []
    if "I" in families:
        eqs.extend(type1_equilibria(B, a_max))
    if "II" in families:
        eqs.extend(type2_equilibria(B, a_max))
    for fam in ("III", "IV"):
        if fam in families:
            eqs.extend(type34_equilibria(B, fam, a_max))
    return eqs
