"""Linear stability of equilibria.

Perturbations theta = theta* + e^{-lambda t} Z(z) of the dissipative equation
satisfy

    lambda Z = -[g(theta*) Z'' + (g'(theta*) theta*_zz + G z m'(theta*)) Z]
               / (gamma1 g(theta*) - m(theta*)^2)

with Robin conditions B Z'(+-1) = -+ 2 cos(2 theta*(+-1)) Z(+-1).  Positive
lambda means decay, so an equilibrium is stable when the smallest eigenvalue
is positive.  For theta* = 0 the spectrum is also available in closed form as
roots of a pair of transcendental equations (even/odd modes), used as the
oracle for the discretized solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals
from scipy.optimize import brentq

from .coefficients import (
    DEFAULT_COEFFICIENTS,
    LeslieCoefficients,
    f_of,
    g_of,
    g_prime_of,
    m_of,
    m_prime_of,
)
from .grid import GridProfile

__all__ = [
    "StabilityReport",
    "TOL_MARGIN",
    "linearized_spectrum",
    "theta0_eigenvalues",
    "classify_parity",
]

#: |lambda_0| below this is reported as marginal rather than stable/unstable
TOL_MARGIN = 1e-8


@dataclass
class StabilityReport:
    """Leading part of the linearized spectrum and the resulting verdict.

    Sign convention: perturbations decay like e^{-lambda t}, so
    ``leading_eigenvalue > 0`` means stable.
    """

    leading_eigenvalue: float
    spectrum_prefix: list[float]
    verdict: str
    method: str


def _verdict(lambda0: float) -> str:
    if lambda0 > TOL_MARGIN:
        return "stable"
    if lambda0 < -TOL_MARGIN:
        return "unstable"
    return "marginal"


def linearized_spectrum(equilibrium: GridProfile, B: float, G: float,
                        k: int = 6,
                        c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
                        residual_gate: float = 1e-6) -> StabilityReport:
    """Discretized eigenproblem about an equilibrium profile.

    The input must be a converged solution of the static system at (G, B);
    its residual is re-evaluated and gated at ``residual_gate``.  theta*_zz is
    taken from the static equation itself (theta*_zz = -G z m/g), which is
    exact for converged input and avoids differentiating grid noise.
    """
    from .bvp import static_residual  # local import: bvp does not need us

    if k < 1:
        raise ValueError("k must be >= 1")
    if B <= 0.0:
        raise ValueError("B must be positive")
    res = float(np.max(np.abs(static_residual(equilibrium, G, B, c))))
    if not np.isfinite(res) or res > residual_gate:
        raise ValueError(
            f"input is not a converged equilibrium (residual {res:.3e})")

    th = equilibrium.theta
    z = equilibrium.z
    h = equilibrium.dz
    n = th.size
    gg = g_of(th, c)
    mm = m_of(th, c)
    denom = c.gamma1 * gg - mm * mm
    theta_zz = -G * z * mm / gg
    coeff = g_prime_of(th, c) * theta_zz + G * z * m_prime_of(th, c)

    lap = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    lap[idx, idx] = -2.0
    lap[idx, idx - 1] = 1.0
    lap[idx, idx + 1] = 1.0
    lap[0, 0] = -2.0 - 4.0 * h * math.cos(2.0 * th[0]) / B
    lap[0, 1] = 2.0
    lap[-1, -1] = -2.0 - 4.0 * h * math.cos(2.0 * th[-1]) / B
    lap[-1, -2] = 2.0
    lap /= h * h

    a = -(gg[:, None] * lap + np.diag(coeff)) / denom[:, None]
    w = eigvals(a)
    lam = np.sort(w.real)
    lambda0 = float(lam[0])
    return StabilityReport(lambda0, [float(v) for v in lam[:k]],
                           _verdict(lambda0), "discretized")


def theta0_eigenvalues(B: float, k: int = 3,
                       c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> np.ndarray:
    """First k eigenvalues of the theta* = 0 linearization, in closed form.

    With nu = sqrt(lambda/F(0)), even modes solve B nu sin(nu) = 2 cos(nu)
    (one root per (j pi, j pi + pi/2)) and odd modes 2 sin(nu) =
    -B nu cos(nu) (one root per (j pi + pi/2, (j+1) pi)); their union is
    tan(2 nu) = -4 B nu / (4 - B^2 nu^2).  All roots are positive, so the
    zero state is stable for every B; at B = 0 they reduce to nu = k pi / 2.
    """
    if B < 0.0:
        raise ValueError("B must be nonnegative")
    if k < 1:
        raise ValueError("k must be >= 1")
    f0 = float(f_of(0.0, c))
    if B == 0.0:
        nu = np.arange(1, k + 1) * (0.5 * math.pi)
        return f0 * nu * nu

    def even(nu: float) -> float:
        return B * nu * math.sin(nu) - 2.0 * math.cos(nu)

    def odd(nu: float) -> float:
        return 2.0 * math.sin(nu) + B * nu * math.cos(nu)

    roots: list[float] = []
    j = 0
    while len(roots) < k:
        lo, hi = j * math.pi, j * math.pi + 0.5 * math.pi
        roots.append(brentq(even, lo + 1e-14, hi, xtol=1e-14, rtol=8.9e-16))
        lo, hi = j * math.pi + 0.5 * math.pi, (j + 1) * math.pi
        roots.append(brentq(odd, lo, hi, xtol=1e-14, rtol=8.9e-16))
        j += 1
    nu = np.asarray(roots[:k])
    return f0 * nu * nu


def classify_parity(family: str, n: int) -> str:
    """Expected verdict from the zero-flow classification table.

    Type I branches are stable iff n is even, Type II iff n is odd; Types
    III and IV are always unstable.
    """
    if family == "I":
        return "stable" if n % 2 == 0 else "unstable"
    if family == "II":
        return "stable" if n % 2 != 0 else "unstable"
    if family in ("III", "IV"):
        return "unstable"
    raise ValueError(f"unknown family {family!r}")
