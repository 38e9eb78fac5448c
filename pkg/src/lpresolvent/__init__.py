"""Numerical checks of uniform L^p resolvent estimates on the flat torus and the round S^3."""

from .fields import SpectralField, grid_lp_norm, holder_conjugate, lp_norm, random_field
from .geometry import (
    DampingField,
    SphereZonalGeometry,
    TorusGeometry,
    build_sphere_zonal,
    build_torus,
    constant_damping,
    cosine_damping,
    zonal_damping,
)
from .regions import DampedRegion, HalfPlane, ParabolicExterior

__version__ = "0.1.0"

__all__ = [
    "SpectralField",
    "grid_lp_norm",
    "holder_conjugate",
    "lp_norm",
    "random_field",
    "DampingField",
    "SphereZonalGeometry",
    "TorusGeometry",
    "build_sphere_zonal",
    "build_torus",
    "constant_damping",
    "cosine_damping",
    "zonal_damping",
    "DampedRegion",
    "HalfPlane",
    "ParabolicExterior",
]
