"""Spectral invariants of equivariant Schrodinger operators.

Forward map ``(metric, V_red) -> F(mu)``, its generalized Legendre inverse,
Morse certification on coadjoint orbits and weight-space quantum checks.
"""

from .forward import ForwardConfig, SpectralCurve, minimize_F, spectral_curve
from .inverse import InverseOptions, ReconstructionResult, invert_1d
from .lie import LieAlgebraModel, build_algebra
from .morse import MorseConfig, QuadraticForm, critical_points, is_morse
from .potentials import Potential
from .reduction import CP2SU2, ModelManifold, RotatingSphere, effective_W

__version__ = "0.1.0"

__all__ = [
    "CP2SU2",
    "ForwardConfig",
    "InverseOptions",
    "LieAlgebraModel",
    "ModelManifold",
    "MorseConfig",
    "Potential",
    "QuadraticForm",
    "ReconstructionResult",
    "RotatingSphere",
    "SpectralCurve",
    "build_algebra",
    "critical_points",
    "effective_W",
    "invert_1d",
    "is_morse",
    "minimize_F",
    "spectral_curve",
]
