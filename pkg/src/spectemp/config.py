"""Pipeline configuration with deterministic hashing.

One flat dataclass carries every knob of the pipeline.  Values resolve in
the order: built-in defaults, then a JSON config file, then command-line
flags.  The canonical JSON serialization is hashed so artifacts can embed
a short fingerprint of the exact configuration that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import InvalidConfig

__all__ = ["PipelineConfig", "load_config"]


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with working defaults."""

    seed: int = 42

    # representation geometry
    timesteps: int = 24
    start_row_index: int = 4000
    sampling_ratio: float = 0.3
    win_dur_ratio: float = 0.04
    trim_alpha: float = 0.02

    # interval search
    energy_fraction: float = 0.95
    beta: float = 0.5
    gamma: float = 3.0
    n_candidates: int = 32
    lambda_r: float = 0.5
    lambda_m: float = 0.001
    nperseg: int = 4096

    # descriptors
    sampen_m: int = 2
    sampen_r: float = 0.2
    permen_order: int = 3
    permen_delay: int = 1
    higuchi_kmax: int = 10
    descriptor_max_len: int = 8000
    overlap_n_mc: int = 100_000

    # spectral features
    delta_bins: int = 5
    guard_bins: int = 1
    n_scales: int = 32
    ceemdan_min_len: int = 64
    ceemdan_ensemble: int = 50
    ceemdan_noise: float = 0.2

    # classification
    n_splits: int = 5
    epochs: int = 300
    eta: float = 0.05
    lam: float = 1e-4
    batch_size: int = 32
    max_steps: int = 60_000
    knn_k: int = 5

    # synthetic generator
    fs: float = 4000.0
    duration: float = 10.0
    n_trials: int = 40
    noise_snr_db: float = 25.0

    def validate(self) -> None:
        if self.n_splits < 2:
            raise InvalidConfig("n_splits must be >= 2")
        if not 0 < self.sampling_ratio <= 1:
            raise InvalidConfig("sampling_ratio must be in (0, 1]")
        if not 0 <= self.trim_alpha < 0.5:
            raise InvalidConfig("trim_alpha must be in [0, 0.5)")
        if not 0 < self.win_dur_ratio < 1:
            raise InvalidConfig("win_dur_ratio must be in (0, 1)")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """Short stable fingerprint of the full configuration."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Resolve a config from defaults, an optional JSON file, and overrides.

    Unknown keys in the file or overrides raise :class:`InvalidConfig` so
    typos do not silently fall back to defaults.
    """
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise InvalidConfig(f"{path}: config must be a JSON object")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg
