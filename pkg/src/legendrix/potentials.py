"""Reduced potentials ``V_red(z)`` addressable from configuration files."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

KINDS = ("zero", "affine", "arctan", "cosine", "table")


@dataclass(frozen=True)
class Potential:
    """A named, vectorized scalar potential on the reduced coordinate.

    Kinds and parameters:

    * ``zero``
    * ``affine``: ``a + b z``
    * ``arctan``: ``a + b arctan(z)``
    * ``cosine``: ``a + b cos(z)``
    * ``table``: monotone cubic through ``z``, ``v`` arrays
    """

    kind: str = "zero"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "table":
            z = np.asarray(self.params.get("z", []), dtype=float)
            v = np.asarray(self.params.get("v", []), dtype=float)
            if z.ndim != 1 or z.shape != v.shape or len(z) < 2:
                raise ValueError("table potential needs matching 1D arrays 'z' and 'v' (>= 2 points)")
            if np.any(np.diff(z) <= 0):
                raise ValueError("table potential: z must be strictly increasing")
            object.__setattr__(self, "_interp", PchipInterpolator(z, v, extrapolate=True))

    def _p(self, name, default):
        return float(self.params.get(name, default))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(z)
        elif self.kind == "affine":
            out = self._p("a", 0.0) + self._p("b", 1.0) * z
        elif self.kind == "arctan":
            out = self._p("a", 0.0) + self._p("b", 1.0) * np.arctan(z)
        elif self.kind == "cosine":
            out = self._p("a", 0.0) + self._p("b", 1.0) * np.cos(z)
        else:
            out = self._interp(z)
        return out if out.ndim else float(out)

    @property
    def strictly_monotone(self) -> bool:
        if self.kind in ("affine", "arctan"):
            return self._p("b", 1.0) != 0.0
        if self.kind == "table":
            return bool(np.all(np.diff(self.params["v"]) > 0) or np.all(np.diff(self.params["v"]) < 0))
        return False

    def to_dict(self) -> dict:
        params = {k: (list(map(float, v)) if np.ndim(v) else float(v)) for k, v in sorted(self.params.items())}
        return {"kind": self.kind, "params": params}


def default_potential(model_name: str, kind: str) -> Potential:
    """Ground-truth potentials used by the roundtrip experiments."""
    if kind == "affine" and model_name == "sphere_s1":
        return Potential("affine", {"a": 1.0, "b": 0.5})
    return Potential(kind)
