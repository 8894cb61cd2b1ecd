"""File-backed store for continuation branches.

Layout under a root directory:

    index.json          one record per stored point (family, n, G, B, omega,
                        residual_norm, relative CSV path)
    points/p0000.csv    z,theta profile data, 17 significant digits

The index is the single mutable object; it is rewritten atomically after
every mutation, so a database directory is always loadable.  ``verify``
re-evaluates the static residual of every stored profile and compares it to
the recorded norm.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bvp import Branch, BranchPoint, static_residual
from .coefficients import DEFAULT_COEFFICIENTS, LeslieCoefficients
from .grid import GridProfile

__all__ = ["BranchDatabase", "PointRecord", "write_profile_csv",
           "read_profile_csv"]

_FMT = "%.17g"


def write_profile_csv(path: Path, profile: GridProfile) -> None:
    rows = np.column_stack([profile.z, profile.theta])
    np.savetxt(path, rows, fmt=_FMT, delimiter=",", header="z,theta",
               comments="")


def read_profile_csv(path: Path, residual_norm: float = float("nan")
                     ) -> GridProfile:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return GridProfile(np.ascontiguousarray(data[:, 0]),
                       np.ascontiguousarray(data[:, 1]),
                       residual_norm=residual_norm)


@dataclass
class PointRecord:
    id: str
    family: str | None
    n: int | None
    G: float
    B: float
    omega: float
    residual_norm: float
    file: str

    @property
    def label(self) -> str:
        fam = self.family if self.family is not None else "?"
        idx = f"{self.n:+d}" if self.n is not None else "?"
        return f"{fam}{idx}"


class BranchDatabase:
    """Single-writer directory store for branch points."""

    def __init__(self, root: str | os.PathLike, create: bool = True):
        self.root = Path(root)
        self.index_path = self.root / "index.json"
        self.points_dir = self.root / "points"
        if create:
            self.points_dir.mkdir(parents=True, exist_ok=True)
        self.records: list[PointRecord] = []
        if self.index_path.exists():
            raw = json.loads(self.index_path.read_text())
            self.records = [PointRecord(**rec) for rec in raw["points"]]
        elif not create:
            raise FileNotFoundError(f"no branch database at {self.root}")

    # -- mutation ----------------------------------------------------------

    def _flush(self) -> None:
        tmp = self.index_path.with_suffix(".json.tmp")
        payload = {"points": [vars(r) for r in self.records]}
        tmp.write_text(json.dumps(payload, indent=1))
        tmp.replace(self.index_path)

    def add_point(self, point: BranchPoint, family: str | None,
                  n: int | None) -> PointRecord:
        pid = f"p{len(self.records):05d}"
        rel = f"points/{pid}.csv"
        write_profile_csv(self.root / rel, point.profile)
        rec = PointRecord(pid, family, n, float(point.G), float(point.B),
                          float(point.omega),
                          float(point.profile.residual_norm), rel)
        self.records.append(rec)
        self._flush()
        return rec

    def add_branch(self, branch: Branch) -> list[PointRecord]:
        recs = [self.add_point(p, branch.family, branch.n)
                for p in branch.points]
        return recs

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.records)

    def select(self, family: str | None = None, n: int | None = None,
               G: float | None = None, B: float | None = None,
               atol: float = 1e-12) -> list[PointRecord]:
        out = []
        for r in self.records:
            if family is not None and r.family != family:
                continue
            if n is not None and r.n != n:
                continue
            if G is not None and abs(r.G - G) > atol:
                continue
            if B is not None and abs(r.B - B) > atol:
                continue
            out.append(r)
        return out

    def load(self, record: PointRecord) -> GridProfile:
        return read_profile_csv(self.root / record.file, record.residual_norm)

    def profiles_at(self, G: float, B: float,
                    atol: float = 1e-12) -> dict[str, GridProfile]:
        """label -> profile mapping usable with match_steady_state."""
        out: dict[str, GridProfile] = {}
        for r in self.select(G=G, B=B, atol=atol):
            out[r.label] = self.load(r)
        return out

    # -- integrity ---------------------------------------------------------

    def verify(self, c: LeslieCoefficients = DEFAULT_COEFFICIENTS,
               tol: float = 1e-12) -> list[str]:
        """Re-evaluate every stored residual; return list of failures.

        A record fails when the recomputed static residual norm differs from
        the stored one by more than ``tol`` (the profile CSV round-trips at
        17 significant digits, so the evaluation is reproducible to within
        rounding of the last digit).
        """
        failures = []
        for r in self.records:
            prof = self.load(r)
            rnorm = float(np.max(np.abs(static_residual(prof, r.G, r.B, c))))
            if abs(rnorm - r.residual_norm) > tol:
                failures.append(
                    f"{r.id} ({r.label} G={r.G:g} B={r.B:g}): stored "
                    f"{r.residual_norm:.3e}, recomputed {rnorm:.3e}")
        return failures
