"""Functions on the model manifolds and the norms used to measure them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import GeometryError, ModelGeometry, TorusGeometry

__all__ = [
    "SpectralField",
    "synthesize",
    "analyze",
    "lp_norm",
    "grid_lp_norm",
    "holder_conjugate",
    "sobolev_scl_norm",
    "mode_field",
    "random_field",
]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A function held as eigenbasis coefficients, with grid samples on demand."""

    geometry: ModelGeometry
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = self.geometry.check_coeffs(np.asarray(self.coeffs, dtype=complex))
        object.__setattr__(self, "coeffs", coeffs)

    @cached_property
    def samples(self) -> np.ndarray:
        return self.geometry.to_grid(self.coeffs)

    @classmethod
    def from_samples(cls, geom: ModelGeometry, samples) -> "SpectralField":
        return cls(geom, geom.from_grid(np.asarray(samples, dtype=complex)))

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.geometry, coeffs)

    def conj(self) -> "SpectralField":
        return SpectralField.from_samples(self.geometry, np.conj(self.samples))

    def __mul__(self, scalar) -> "SpectralField":
        return self.with_coeffs(scalar * self.coeffs)

    __rmul__ = __mul__

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def l2_coeff_norm(self) -> float:
        """L2 norm from the coefficients (Parseval with the geometry's basis scale)."""
        scale = self.geometry.volume if isinstance(self.geometry, TorusGeometry) else 1.0
        return float(np.sqrt(scale * np.sum(np.abs(self.coeffs) ** 2)))


def synthesize(geom: ModelGeometry, coeffs) -> np.ndarray:
    return geom.to_grid(np.asarray(coeffs, dtype=complex))


def analyze(geom: ModelGeometry, samples) -> np.ndarray:
    return geom.from_grid(np.asarray(samples, dtype=complex))


def grid_lp_norm(geom: ModelGeometry, samples: np.ndarray, p: float) -> float:
    """``(int |u|^p dV)^(1/p)`` by the geometry's quadrature; grid max for ``p = inf``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mod = np.abs(samples)
    if np.isinf(p):
        return float(mod.max())
    # rescale by the max so that large p cannot overflow
    peak = mod.max()
    if peak == 0:
        return 0.0
    return float(peak * np.sum(geom.weights * (mod / peak) ** p) ** (1.0 / p))


def lp_norm(u: SpectralField, p: float) -> float:
    return grid_lp_norm(u.geometry, u.samples, p)


def holder_conjugate(p: float) -> float:
    """Exponent ``p'`` with ``1/p + 1/p' = 1``."""
    if not 1 < p < np.inf:
        raise ValueError(f"Holder conjugate needs 1 < p < inf, got {p}")
    return p / (p - 1)


def sobolev_scl_norm(u: SpectralField, s: float, p: float, h: float) -> float:
    """Semiclassical Sobolev norm ``||(1 - h^2 Delta)^(s/2) u||_{L^p}``."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if s == 0:
        return lp_norm(u, p)
    mult = (1.0 + h**2 * u.geometry.eigenvalues) ** (s / 2)
    return lp_norm(u.with_coeffs(mult * u.coeffs), p)


def mode_field(geom: ModelGeometry, k, amplitude: complex = 1.0) -> SpectralField:
    """Single eigenmode: torus wavevector ``k`` or sphere degree ``k``."""
    coeffs = np.zeros(geom.coef_shape, dtype=complex)
    if isinstance(geom, TorusGeometry):
        coeffs[geom.mode_index(k)] = amplitude
    else:
        if not 0 <= int(k) < geom.coef_shape[0]:
            raise GeometryError(f"degree {k} outside the zonal basis")
        coeffs[int(k)] = amplitude
    return SpectralField(geom, coeffs)


def random_field(geom: ModelGeometry, rng: np.random.Generator, band_limited: bool = True) -> SpectralField:
    """Complex Gaussian coefficients; torus Nyquist modes are zeroed by default."""
    coeffs = rng.standard_normal(geom.coef_shape) + 1j * rng.standard_normal(geom.coef_shape)
    if band_limited and isinstance(geom, TorusGeometry):
        coeffs = coeffs * geom.band_mask
    return SpectralField(geom, coeffs)
