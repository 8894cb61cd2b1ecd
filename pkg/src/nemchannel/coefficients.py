"""Material coefficients and the angle-dependent viscosity functions.

Everything downstream (static solves, stability, asymptotics, dynamics) is
driven by four scalar functions of the director angle theta:

    m(theta) = alpha2*cos^2(theta) - alpha3*sin^2(theta)
    g(theta) = alpha1*cos^2(theta)*sin^2(theta)
               + ((alpha5-alpha2)*cos^2(theta) + (alpha3+alpha6)*sin^2(theta) + 1)/2
    Q(theta) = -m(theta)/g(theta)
    F(theta) = g(theta) / (gamma1*g(theta) - m(theta)^2)

together with the dimensionless pressure gradient ``G = h^3 G_dim / K`` and
inverse anchoring strength ``B = 2 K / (A h)``.  The default coefficient set
is the 5CB-like table used throughout; it violates the Parodi relation by
about 0.083, which is reported as a warning rather than an error.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "LeslieCoefficients",
    "DimensionalScales",
    "ValidationReport",
    "DEFAULT_COEFFICIENTS",
    "m_of",
    "g_of",
    "q_of",
    "f_of",
    "m_prime_of",
    "g_prime_of",
    "q_prime_of",
    "flow_alignment_angle",
    "nondimensionalize",
    "validate",
    "load_coefficients",
]


@dataclass(frozen=True)
class LeslieCoefficients:
    """Dimensionless Leslie viscosities (alpha4 scaled to 1).

    gamma1, gamma2 and the Parodi residual are derived quantities and are
    exposed as read-only properties so they can never drift out of sync
    with the alphas.
    """

    alpha1: float = -0.1549
    alpha2: float = -0.9859
    alpha3: float = -0.0535
    alpha4: float = 1.0
    alpha5: float = 0.7324
    alpha6: float = -0.39

    @property
    def gamma1(self) -> float:
        return self.alpha3 - self.alpha2

    @property
    def gamma2(self) -> float:
        return self.alpha6 - self.alpha5

    @property
    def parodi_residual(self) -> float:
        """alpha2 + alpha3 - alpha6 + alpha5 (zero when Parodi holds)."""
        return self.alpha2 + self.alpha3 - self.alpha6 + self.alpha5

    def as_dict(self) -> dict[str, float]:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha3": self.alpha3,
            "alpha4": self.alpha4,
            "alpha5": self.alpha5,
            "alpha6": self.alpha6,
        }


DEFAULT_COEFFICIENTS = LeslieCoefficients()


def m_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """Anisotropic coupling m(theta); pi-periodic and even."""
    ct = np.cos(theta)
    st = np.sin(theta)
    return c.alpha2 * ct * ct - c.alpha3 * st * st


def g_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """Effective viscosity g(theta); strictly positive for valid coefficients."""
    ct2 = np.cos(theta) ** 2
    st2 = np.sin(theta) ** 2
    return c.alpha1 * ct2 * st2 + 0.5 * (
        (c.alpha5 - c.alpha2) * ct2 + (c.alpha3 + c.alpha6) * st2 + 1.0
    )


def m_prime_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """d m / d theta = -(alpha2 + alpha3) sin(2 theta)."""
    return -(c.alpha2 + c.alpha3) * np.sin(2.0 * theta)


def g_prime_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """d g / d theta, from the differentiated trig form (no finite differences)."""
    return 0.5 * c.alpha1 * np.sin(4.0 * theta) + 0.5 * (
        (c.alpha3 + c.alpha6) - (c.alpha5 - c.alpha2)
    ) * np.sin(2.0 * theta)


def q_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """Q(theta) = -m/g.  Raises if g is not positive at any requested angle."""
    g = g_of(theta, c)
    if np.any(np.asarray(g) <= 0.0):
        raise ValueError("g(theta) <= 0: coefficients outside the validity region")
    return -m_of(theta, c) / g


def q_prime_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """d Q / d theta = -(m' g - m g') / g^2."""
    g = g_of(theta, c)
    return -(m_prime_of(theta, c) * g - m_of(theta, c) * g_prime_of(theta, c)) / (g * g)


def f_of(theta, c: LeslieCoefficients = DEFAULT_COEFFICIENTS):
    """Effective diffusivity F(theta) = g/(gamma1*g - m^2); strictly positive."""
    g = g_of(theta, c)
    m = m_of(theta, c)
    denom = c.gamma1 * g - m * m
    if np.any(np.asarray(denom) <= 0.0):
        raise ValueError(
            "gamma1*g - m^2 <= 0: coefficients violate the dissipation inequalities"
        )
    return g / denom


def flow_alignment_angle(c: LeslieCoefficients = DEFAULT_COEFFICIENTS) -> float:
    """arctan(sqrt(alpha2/alpha3)), the angle in (0, pi/2) where m vanishes."""
    ratio = c.alpha2 / c.alpha3
    if ratio <= 0.0:
        raise ValueError("alpha2/alpha3 must be positive for a flow-alignment angle")
    return math.atan(math.sqrt(ratio))


@dataclass(frozen=True)
class DimensionalScales:
    """Dimensional inputs: elastic constant K [N], anchoring strength A [N/m],
    half-depth h [m], pressure-gradient magnitude G [N/m^3]."""

    K: float
    A: float
    h: float
    G: float = 0.0

    def __post_init__(self) -> None:
        if self.K <= 0 or self.A <= 0 or self.h <= 0:
            raise ValueError("K, A and h must all be positive")


def nondimensionalize(scales: DimensionalScales) -> tuple[float, float]:
    """Return ``(G, B) = (h^3 G_dim / K, 2 K / (A h))``."""
    G = scales.h**3 * scales.G / scales.K
    B = 2.0 * scales.K / (scales.A * scales.h)
    return G, B


@dataclass
class ValidationReport:
    """Outcome of the coefficient validity scan."""

    passed: bool
    min_g: float
    min_denominator: float
    parodi_residual: float
    warnings: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


_PARODI_WARN_TOL = 1e-10


def validate(
    c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
    n_grid: int = 1000,
    slack: float = 1e-12,
) -> ValidationReport:
    """Scan theta in [0, pi] for positivity of g and gamma1*g - m^2.

    The Parodi residual is reported as a warning only (the default table
    violates it and is used verbatim regardless).
    """
    theta = np.linspace(0.0, np.pi, n_grid)
    g = g_of(theta, c)
    m = m_of(theta, c)
    denom = c.gamma1 * g - m * m
    min_g = float(g.min())
    min_denom = float(denom.min())

    failures = []
    if min_g <= slack:
        failures.append(f"min g(theta) = {min_g:.6g} is not positive")
    if min_denom <= slack:
        failures.append(f"min gamma1*g - m^2 = {min_denom:.6g} is not positive")
    if c.alpha2 / c.alpha3 <= 0:
        failures.append("alpha2/alpha3 <= 0: no flow-alignment angle")

    warns = []
    if abs(c.parodi_residual) > _PARODI_WARN_TOL:
        msg = f"Parodi relation violated: alpha2+alpha3-alpha6+alpha5 = {c.parodi_residual:.4g}"
        warns.append(msg)
        warnings.warn(msg, stacklevel=2)

    return ValidationReport(
        passed=not failures,
        min_g=min_g,
        min_denominator=min_denom,
        parodi_residual=c.parodi_residual,
        warnings=warns,
        failures=failures,
    )


def load_coefficients(path: str | Path) -> LeslieCoefficients:
    """Load coefficients from a JSON file with keys alpha1..alpha6.

    Missing keys fall back to the defaults; unknown keys are rejected.
    """
    data = json.loads(Path(path).read_text())
    allowed = {f"alpha{i}" for i in range(1, 7)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown coefficient keys: {sorted(unknown)}")
    base = DEFAULT_COEFFICIENTS.as_dict()
    base.update({k: float(v) for k, v in data.items()})
    return LeslieCoefficients(**base)
