"""Run configuration and run manifests.

Configs are plain JSON files mirroring PipelineConfig field names; command
line flags override file values, and the HEMO_SEED / HEMO_JOBS environment
variables sit between the two. Seeds are always explicit — nothing falls
back to wall-clock time.

Every command writes a manifest.json next to its outputs: the resolved
config, sha256 checksums of the inputs it consumed, the tool version and
per-stage timings. Reruns with identical config and inputs reproduce
identical output tables.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


@dataclass
class PipelineConfig:
    # paths
    images: str | None = None
    annotations: str | None = None
    output: str | None = None
    # imaging
    polarity: str = "dark"  # cells darker than background
    background_window: int | None = None
    se_radius: int = 2
    morph_iterations: int = 2
    connectivity: int = 8
    min_area: int = 64
    # features
    patch_pad: int = 2
    # resampling
    resample_variant: str | None = None
    smote_k: int = 5
    k_far: int = 3
    small_class_threshold: int = 500
    # classifier
    weight_scheme: str | None = None
    c: float = 1.0
    gamma: float | None = None
    tol: float = 1e-3
    max_passes: int = 200
    # evaluation
    k_folds: int = 5
    match_threshold: float = 0.70
    class_scheme: str = "five"
    # run control
    seed: int = 0
    jobs: int = 1


_ENV_OVERRIDES = {"HEMO_SEED": ("seed", int), "HEMO_JOBS": ("jobs", int)}


def load_config(path: str | None, overrides: dict | None = None) -> PipelineConfig:
    """File values, then environment, then explicit flag overrides."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(data)
    for env_name, (key, cast) in _ENV_OVERRIDES.items():
        if env_name in os.environ:
            values[key] = cast(os.environ[env_name])
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return PipelineConfig(**values)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def checksum_inputs(paths: list[Path]) -> dict[str, str]:
    sums = {}
    for p in sorted(paths):
        p = Path(p)
        if p.is_dir():
            for f in sorted(p.rglob("*")):
                if f.is_file():
                    sums[str(f)] = _sha256(f)
        elif p.is_file():
            sums[str(p)] = _sha256(p)
    return sums


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict[str, str]
    version: str = __version__
    timings: dict[str, float] = field(default_factory=dict)

    def write(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)


class StageTimer:
    """Accumulates wall-clock per named stage for the manifest."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def time(self, stage: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[stage] = round(
                    timer.timings.get(stage, 0.0) + time.perf_counter() - self.t0, 3
                )

        return _Ctx()
