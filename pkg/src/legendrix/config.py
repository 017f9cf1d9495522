"""Experiment configuration: one JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .forward import ForwardConfig
from .inverse import InverseOptions
from .potentials import KINDS, Potential, default_potential
from .reduction import MODELS


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


DEFAULT_MU_GRID = {
    "sphere_s1": {"lo": 0.2, "hi": 3.0, "n": 200},
    "cp2_su2": {"lo": 0.05, "hi": 0.45, "n": 200},
}

ROUNDTRIP_TOL = {"sphere_s1": 1e-3, "cp2_su2": 5e-3}

TOLERANCE_KEYS = {"route_tol", "margin", "multistart", "roundtrip_tol", "trim"}


@dataclass
class ExperimentConfig:
    model: str = "sphere_s1"
    potential: dict = field(default_factory=lambda: {"kind": "zero", "params": {}})
    mu_grid: dict = field(default_factory=dict)
    seeds: int = 0
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "out"

    def validate(self, inversion: bool = False) -> "ExperimentConfig":
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {sorted(MODELS)}, got {self.model!r}")
        kind = self.potential.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"potential.kind must be one of {list(KINDS)}, got {kind!r}")
        if not self.mu_grid:
            self.mu_grid = dict(DEFAULT_MU_GRID[self.model])
        try:
            lo, hi, n = float(self.mu_grid["lo"]), float(self.mu_grid["hi"]), int(self.mu_grid["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"mu_grid needs numeric lo, hi, n: {exc}") from None
        if not lo > 0:
            raise ConfigError("mu_grid.lo must be > 0")
        if not hi > lo:
            raise ConfigError("mu_grid.hi must exceed mu_grid.lo")
        if n < 5:
            raise ConfigError("mu_grid.n must be >= 5")
        unknown = set(self.tolerances) - TOLERANCE_KEYS
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}; allowed {sorted(TOLERANCE_KEYS)}")
        try:
            pot = self.make_potential()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if inversion and kind == "table" and not pot.strictly_monotone:
            raise ConfigError("table potential must be strictly monotone for inversion")
        if not isinstance(self.seeds, int) or self.seeds < 0:
            raise ConfigError("seeds must be a non-negative integer")
        return self

    def make_potential(self) -> Potential:
        kind = self.potential.get("kind", "zero")
        params = self.potential.get("params") or {}
        if not params:
            return default_potential(self.model, kind)
        return Potential(kind, params)

    def mu_values(self) -> np.ndarray:
        g = self.mu_grid
        return np.linspace(float(g["lo"]), float(g["hi"]), int(g["n"]))

    def forward_config(self) -> ForwardConfig:
        t = self.tolerances
        return ForwardConfig(
            multistart=int(t.get("multistart", ForwardConfig.multistart)),
            margin=float(t.get("margin", ForwardConfig.margin)),
            seed=self.seeds,
        )

    def inverse_options(self) -> InverseOptions:
        t = self.tolerances
        return InverseOptions(
            route_tol=float(t.get("route_tol", InverseOptions.route_tol)),
            trim=int(t.get("trim", InverseOptions.trim)),
        )

    def roundtrip_tol(self) -> float:
        return float(self.tolerances.get("roundtrip_tol", ROUNDTRIP_TOL[self.model]))

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read ``path`` (JSON) if given, then apply non-``None`` overrides."""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(data) - known - {"schema_version"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    data.pop("schema_version", None)
    cfg = ExperimentConfig(**data)
    cfg.mu_grid = dict(cfg.mu_grid)
    cfg.potential = dict(cfg.potential)
    for key in ("lo", "hi", "n"):
        v = overrides.pop(f"mu_{key}", None)
        if v is not None:
            if not cfg.mu_grid:
                cfg.mu_grid = dict(DEFAULT_MU_GRID.get(overrides.get("model") or cfg.model, {}))
            cfg.mu_grid[key] = v
    kind = overrides.pop("potential", None)
    if kind is not None:
        cfg.potential = {"kind": kind, "params": {}}
    for key, v in overrides.items():
        if v is not None:
            setattr(cfg, key, v)
    return cfg
