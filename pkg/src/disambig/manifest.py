"""Run manifests: what ran, on what inputs, with which knobs.

Every CLI command that writes results first writes a manifest next to
them, so any output directory is self-describing and reproducible. The
manifest is written before the heavy work starts (a directory holding a
manifest but no results marks an interrupted run) and rewritten with
per-stage timings once the run finishes.
"""

from __future__ import annotations

import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .kernels import COMPILED
from .util import atomic_write_json, sha256_hex


def _fingerprint(path: Path) -> str:
    if path.is_file():
        return sha256_hex(path.read_bytes())
    if path.is_dir():
        parts = []
        for child in sorted(path.glob("*.json")):
            if child.name == "manifest.json":
                continue
            parts.append(child.name.encode("utf-8"))
            parts.append(child.read_bytes())
        return sha256_hex(b"\x00".join(parts))
    return "missing"


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    inputs: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    started_at: str = ""
    package_version: str = __version__
    python_version: str = sys.version.split()[0]
    numpy_version: str = np.__version__
    platform: str = platform.platform()
    compiled_kernels: bool = COMPILED

    @classmethod
    def collect(cls, command: str, config: dict, seed: int, inputs: dict[str, str | Path]) -> "RunManifest":
        """Snapshot the environment plus a content hash of each input."""
        return cls(
            command=command,
            config=config,
            seed=seed,
            inputs={str(k): _fingerprint(Path(v)) for k, v in inputs.items()},
            started_at=datetime.now(timezone.utc).isoformat(),
        )

    def record_timing(self, stage: str, seconds: float) -> None:
        self.timings[stage] = round(seconds, 6)

    def write(self, path: str | Path) -> None:
        atomic_write_json(path, asdict(self))
