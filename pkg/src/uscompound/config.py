"""JSON configuration holding every tunable of the pipeline.

Unknown keys are rejected so a typo cannot silently fall back to a
default.  CLI flags override config values, and dumping the effective
config and re-running with it is a no-op.
"""

from __future__ import annotations

import copy
import json

from .boundary import BoundaryParams
from .compound import PyramidParams
from .confidence import DEFAULT_ABSORPTION, DEFAULT_DECAY
from .errors import SpecError

__all__ = ["DEFAULTS", "load_config", "merge_config", "Config"]

DEFAULTS = {
    "pyramid": {
        "K": 5,
    },
    "compound": {
        "gamma": 0.05,
        "enhance_layer": 3,
        "enhancement_enabled": True,
        "phi_overrides": None,
    },
    "boundary": {
        "alpha": 15,
        "beta": 20,
        "min_size": 50,
        "grad_threshold": 10.0 / 255.0,
        "t1": 30.0,
        "t2": 2.0,
        "median_denoise": True,
    },
    "confidence": {
        "decay": DEFAULT_DECAY,
        "absorption": DEFAULT_ABSORPTION,
    },
}


def merge_config(base: dict, override: dict, path: str = "") -> dict:
    """Deep-merge `override` into a copy of `base`, rejecting unknown keys."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise SpecError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise SpecError(f"config key {where!r} must be a table")
            out[key] = merge_config(base[key], value, where)
        else:
            out[key] = value
    return out


class Config:
    """Effective configuration resolved from defaults plus overrides."""

    def __init__(self, values: dict | None = None):
        self.values = merge_config(DEFAULTS, values or {})

    def pyramid_params(self) -> PyramidParams:
        c = self.values["compound"]
        phi = c["phi_overrides"]
        return PyramidParams(
            levels=self.values["pyramid"]["K"],
            gamma=c["gamma"],
            enhance_layer=c["enhance_layer"],
            enhancement_enabled=c["enhancement_enabled"],
            phi_overrides=tuple(phi) if phi is not None else None,
        )

    def boundary_params(self) -> BoundaryParams:
        return BoundaryParams(**self.values["boundary"])

    @property
    def decay(self) -> float:
        return self.values["confidence"]["decay"]

    @property
    def absorption(self) -> float:
        return self.values["confidence"]["absorption"]

    def dump(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True)


def load_config(path) -> Config:
    with open(path) as f:
        try:
            values = json.load(f)
        except json.JSONDecodeError as e:
            raise SpecError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(values, dict):
        raise SpecError(f"{path}: config must be a JSON object")
    return Config(values)
