"""Run configuration: tolerances, default dimensions, output settings."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .errors import DomainError

#: environment variable pointing at a JSON config file
CONFIG_ENV_VAR = "STIEFELGEO_CONFIG"


@dataclass(frozen=True)
class Config:
    """Tolerances and defaults used across the toolkit.

    All tolerances are absolute unless noted otherwise.  Everything can be
    overridden per call; this object only bundles the defaults.
    """

    tol_orth: float = 1e-10        # orthonormality of frames and points
    tol_tan: float = 1e-10         # tangency residual ||U^T D + D^T U||
    tol_skew: float = 1e-10        # skew-symmetry residual
    tol_spec: float = 1e-9         # spectral reconstruction residual
    tol_shoot: float = 1e-9        # endpoint residual of the shooting log
    tol_freq: float = 1e-8         # frequency merging, relative to max frequency
    tol_ratio: float = 1e-9        # rational-ratio acceptance, scaled by 1/q^2
    d_max: int = 1_000_000         # denominator cap for ratio detection
    default_n: int = 4
    default_p: int = 2
    seed: int = 42
    output_dir: str = "reports"
    output_format: str = "json"    # "json" or "csv" for the primary report
    max_iter: int = 200            # shooting solver iteration budget
    max_halvings: int = 30         # step-halving budget per iteration
    fd_step_scale: float = 1e-6    # jacobian step = fd_step_scale * (1 + |x|)
    multi_start_scale: float = 0.3 # perturbation radius factor for multi-starts

    def __post_init__(self):
        for name in ("tol_orth", "tol_tan", "tol_skew", "tol_spec", "tol_shoot",
                     "tol_freq", "tol_ratio", "fd_step_scale", "multi_start_scale"):
            if getattr(self, name) <= 0:
                raise DomainError(f"config field {name!r} must be positive")
        if self.d_max < 100:
            raise DomainError("config field 'd_max' must be at least 100")
        if self.output_format not in ("json", "csv"):
            raise DomainError("config field 'output_format' must be 'json' or 'csv'")
        if self.max_iter < 1 or self.max_halvings < 1:
            raise DomainError("iteration budgets must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "Config":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_env(cls) -> "Config":
        """Default config, overridden by the file named in STIEFELGEO_CONFIG."""
        path = os.environ.get(CONFIG_ENV_VAR)
        if path:
            return cls.from_json(path)
        return cls()


DEFAULT_CONFIG = Config()
