"""Uniform-grid director profiles on the channel cross-section [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]

__all__ = ["GridProfile", "uniform_grid", "DEFAULT_DZ", "DEFAULT_NPOINTS"]

#: grid spacing shared by statics and dynamics (161 nodes on [-1, 1])
DEFAULT_DZ = 0.0125
DEFAULT_NPOINTS = 161


def uniform_grid(n_points: int = DEFAULT_NPOINTS) -> FloatArray:
    """Uniform grid with endpoints exactly -1 and 1."""
    if n_points < 3:
        raise ValueError("need at least 3 grid points")
    return np.linspace(-1.0, 1.0, n_points)


@dataclass
class GridProfile:
    """theta sampled on a uniform grid over [-1, 1].

    ``residual_norm`` is the max-norm residual of the static system on this
    grid; NaN until a solver populates it.
    """

    z: FloatArray
    theta: FloatArray
    residual_norm: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        self.z = np.asarray(self.z, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.z.shape != self.theta.shape or self.z.ndim != 1:
            raise ValueError("z and theta must be 1-d arrays of equal length")
        if self.z[0] != -1.0 or self.z[-1] != 1.0:
            raise ValueError("grid must span [-1, 1] with exact endpoints")
        dz = np.diff(self.z)
        if np.max(np.abs(dz - dz[0])) > 1e-15 * max(1.0, abs(dz[0])) + 1e-15:
            raise ValueError("grid spacing must be uniform")

    @property
    def n_points(self) -> int:
        return self.z.size

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    def copy(self) -> "GridProfile":
        return GridProfile(self.z.copy(), self.theta.copy(), self.residual_norm)

    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0,
               n_points: int = DEFAULT_NPOINTS) -> "GridProfile":
        """Profile theta = slope*z + intercept."""
        z = uniform_grid(n_points)
        return cls(z, slope * z + intercept)

    @classmethod
    def constant(cls, value: float, n_points: int = DEFAULT_NPOINTS) -> "GridProfile":
        z = uniform_grid(n_points)
        return cls(z, np.full(n_points, float(value)))
