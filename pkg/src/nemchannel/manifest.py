"""Run manifests: reproducibility records for CLI runs and pipelines.

A manifest ties together the declarative configuration (hashed canonically),
the package version, the stage completion state, and the produced files, so
a rerun with an identical configuration can skip completed stages and a
changed configuration invalidates the old state.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__all__ = ["RunManifest", "config_hash", "write_csv"]

_FMT = "%.17g"


def config_hash(config: dict) -> str:
    """Stable hash of a JSON-serializable configuration."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    """Write rows of floats (or str) as CSV with 17-significant-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, str):
                    cells.append(v)
                elif v is None:
                    cells.append("")
                else:
                    cells.append(_FMT % float(v))
            fh.write(",".join(cells) + "\n")
    return path


@dataclass
class RunManifest:
    """Completion record for a configured run."""

    config: dict
    path: Path
    hash: str = ""
    created: str = ""
    stages: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def __post_init__(self):
        self.path = Path(self.path)
        if not self.hash:
            self.hash = config_hash(self.config)
        if not self.created:
            self.created = datetime.now(timezone.utc).isoformat()

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        raw = json.loads(path.read_text())
        return cls(config=raw["config"], path=path, hash=raw["hash"],
                   created=raw["created"], stages=raw.get("stages", {}),
                   outputs=raw.get("outputs", []))

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"hash": self.hash, "created": self.created,
                   "config": self.config, "stages": self.stages,
                   "outputs": self.outputs}
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=1, default=_jsonable))
        tmp.replace(self.path)

    # -- stage bookkeeping -------------------------------------------------

    def stage_done(self, name: str) -> bool:
        entry = self.stages.get(name)
        if not entry or entry.get("status") != "complete":
            return False
        return all(Path(p).exists() for p in entry.get("outputs", []))

    def mark_stage(self, name: str, outputs: list[str | Path],
                   status: str = "complete", **extra) -> None:
        outs = [str(p) for p in outputs]
        self.stages[name] = {"status": status, "outputs": outs, **extra}
        for o in outs:
            if o not in self.outputs:
                self.outputs.append(o)
        self.save()

    def matches(self, config: dict) -> bool:
        return self.hash == config_hash(config)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)!r}")
