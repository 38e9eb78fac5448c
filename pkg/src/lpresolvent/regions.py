"""Spectral-region geometry: parabolic exterior, half plane, damped region."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

__all__ = [
    "RegionError",
    "ParabolicExterior",
    "HalfPlane",
    "DampedRegion",
    "RegionSpec",
    "Disk",
    "in_parabolic_exterior",
    "in_half_plane",
    "z_to_lambda",
    "in_damped_region",
    "contains",
    "admissible_p_range",
    "scaling_exponent",
    "boundary_scan",
    "disks_around",
]


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise RegionError(f"excluded disk radius must be positive, got {self.radius}")

    def contains(self, tau: complex) -> bool:
        return abs(tau - self.center) < self.radius


@dataclass(frozen=True)
class ParabolicExterior:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise RegionError("delta must be positive")


@dataclass(frozen=True)
class HalfPlane:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise RegionError("delta must be positive")


@dataclass(frozen=True)
class DampedRegion:
    """Two half-bands ``|Re tau| >= L`` outside the strip, plus ``|Re tau| <= L`` minus ``V``."""

    delta: float
    L: float
    A_plus: float
    A_minus: float
    V: tuple[Disk, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.delta > 0:
            raise RegionError("delta must be positive")
        if not self.L > 0:
            raise RegionError("L must be positive")
        if self.A_minus > self.A_plus:
            raise RegionError(f"A_minus={self.A_minus} exceeds A_plus={self.A_plus}")
        object.__setattr__(self, "V", tuple(self.V))

    @property
    def upper_level(self) -> float:
        return self.A_plus + self.delta

    @property
    def lower_level(self) -> float:
        return self.A_minus - self.delta


RegionSpec = Union[ParabolicExterior, HalfPlane, DampedRegion]


def in_parabolic_exterior(lam: complex, delta: float) -> bool:
    """``(Im lam)^2 >= 4 delta^2 (Re lam + delta^2)``."""
    lam = complex(lam)
    lhs = lam.imag**2
    rhs = 4 * delta**2 * (lam.real + delta**2)
    # tolerance scaled to the magnitude of the terms: boundary points from z^2 round
    return lhs - rhs >= -1e-12 * max(1.0, abs(lhs), abs(rhs))


def in_half_plane(z: complex, delta: float) -> bool:
    return complex(z).imag >= delta


def z_to_lambda(z: complex) -> complex:
    return complex(z) ** 2


def in_damped_region(tau: complex, spec: DampedRegion) -> bool:
    tau = complex(tau)
    far = abs(tau.real) >= spec.L
    if far and tau.imag >= spec.upper_level:
        return True
    if far and tau.imag <= spec.lower_level:
        return True
    if abs(tau.real) <= spec.L:
        return not any(d.contains(tau) for d in spec.V)
    return False


def contains(spec: RegionSpec, point: complex) -> bool:
    """Membership of a scan point in its region (``z`` for the Laplace regions)."""
    if isinstance(spec, ParabolicExterior):
        return in_parabolic_exterior(point, spec.delta)
    if isinstance(spec, HalfPlane):
        return in_half_plane(point, spec.delta)
    return in_damped_region(point, spec)


def admissible_p_range(n: int) -> tuple[Fraction, Fraction]:
    """Closed exponent interval ``[2n/(n+2), 2(n+1)/(n+3)]``."""
    if int(n) != n or n < 3:
        raise RegionError(f"dimension must be an integer >= 3, got {n}")
    n = int(n)
    return Fraction(2 * n, n + 2), Fraction(2 * (n + 1), n + 3)


def scaling_exponent(p, n: int):
    """Power of ``|z|`` in the ``L^p -> L^p'`` resolvent bound: ``2n(1/p - 1/2) - 2``."""
    lo, hi = admissible_p_range(n)
    if not lo <= p <= hi:
        warnings.warn(f"p={p} outside the admissible range [{lo}, {hi}] for n={n}", stacklevel=2)
    if isinstance(p, (int, Fraction)):
        return 2 * n * (Fraction(1) / p - Fraction(1, 2)) - 2
    return 2 * n * (1.0 / p - 0.5) - 2


def boundary_scan(spec: RegionSpec, which: str, count: int, span: tuple[float, float],
                  level: float | None = None) -> list[complex]:
    """Evenly spaced points (endpoints included) on a named boundary segment.

    Segments: ``crucial-line`` (``Im z = delta``, half plane or parabolic exterior),
    ``parabola`` (image of the crucial line under ``z -> z^2``), ``upper-band``,
    ``lower-band``, ``compact-line`` (``Im tau = level`` restricted to
    ``|Re tau| <= L``) and ``edge`` (``Re tau = L``, ``span`` in ``Im tau``).
    """
    if count < 2:
        raise RegionError("a scan needs at least two points")
    t = np.linspace(span[0], span[1], count)
    if isinstance(spec, (HalfPlane, ParabolicExterior)):
        line = [complex(x, spec.delta) for x in t]
        if which == "crucial-line":
            return line
        if which == "parabola":
            return [z_to_lambda(z) for z in line]
    elif isinstance(spec, DampedRegion):
        if which == "upper-band":
            return [complex(x, spec.upper_level) for x in t]
        if which == "lower-band":
            return [complex(x, spec.lower_level) for x in t]
        if which == "compact-line":
            if level is None:
                level = 0.5 * (spec.A_plus + spec.A_minus)
            return [complex(x, level) for x in np.clip(t, -spec.L, spec.L)]
        if which == "edge":
            return [complex(spec.L, y) for y in t]
    raise RegionError(f"unknown segment {which!r} for {type(spec).__name__}")


def disks_around(eigenvalues: Iterable[complex], L: float, radius: float = 0.1) -> tuple[Disk, ...]:
    """Excluded neighbourhood ``V``: disks around eigenvalues with ``|Re tau| <= L + radius``."""
    return tuple(Disk(complex(t), radius) for t in eigenvalues if abs(complex(t).real) <= L + radius)
