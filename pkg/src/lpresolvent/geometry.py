"""Model manifolds with exactly known Laplace spectra.

Two geometries are provided:

* :class:`TorusGeometry` -- the flat torus ``T^n = [0, 2pi)^n`` discretised by an
  equispaced grid of ``N^n`` points. Coefficients are indexed by the full discrete
  Fourier mode set (FFT ordering), so the transform pair is square and invertible.
  Modes with every ``|k_j| <= N/2 - 1`` form the *band*; the remaining Nyquist modes
  exist only so that arbitrary grid data has a coefficient representation.
* :class:`SphereZonalGeometry` -- functions on ``S^3`` depending only on the polar
  angle, expanded in normalised Chebyshev-U (Gegenbauer ``C^(1)``) polynomials with
  a Gauss rule for the ``sin^2`` weight.

Both expose the same small protocol used by the rest of the package:
``eigenvalues``, ``to_grid``, ``from_grid``, ``weights``, ``integrate`` and
``multiply`` (de-aliased multiplication by a :class:`DampingField`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import optimize

__all__ = [
    "GeometryError",
    "ModelGeometry",
    "TorusGeometry",
    "SphereZonalGeometry",
    "DampingField",
    "build_torus",
    "build_sphere_zonal",
    "integrate",
    "trig_damping",
    "cosine_damping",
    "constant_damping",
    "zonal_damping",
]


class GeometryError(ValueError):
    """Invalid geometry parameters or mismatched grid data."""


class ModelGeometry:
    """Common behaviour of the model manifolds."""

    kind: str
    eigenvalues: np.ndarray
    grid_shape: tuple[int, ...]
    coef_shape: tuple[int, ...]
    volume: float

    @property
    def mode_count(self) -> int:
        return int(np.prod(self.coef_shape))

    @property
    def weights(self) -> np.ndarray:
        raise NotImplementedError

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def multiply(self, damping: "DampingField", coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_grid(self, samples) -> np.ndarray:
        samples = np.asarray(samples)
        if samples.shape != self.grid_shape:
            raise GeometryError(
                f"grid samples have shape {samples.shape}, expected {self.grid_shape}"
            )
        return samples

    def check_coeffs(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        if coeffs.shape != self.coef_shape:
            raise GeometryError(
                f"coefficients have shape {coeffs.shape}, expected {self.coef_shape}"
            )
        return coeffs

    def integrate(self, samples) -> float | complex:
        samples = self.check_grid(samples)
        return np.sum(self.weights * samples)

    def inner(self, f_samples: np.ndarray, g_samples: np.ndarray) -> complex:
        """Quadrature inner product ``int f conj(g) dV``."""
        return complex(np.sum(self.weights * f_samples * np.conj(g_samples)))


@dataclass(frozen=True, eq=False)
class TorusGeometry(ModelGeometry):
    """Flat torus ``[0, 2pi)^n`` with ``N`` grid points per axis.

    Basis functions are the unnormalised exponentials ``exp(i k.x)``, so a field
    with coefficients ``c`` is ``u(x) = sum_k c_k exp(i k.x)`` and
    ``||u||_2^2 = (2pi)^n sum |c_k|^2``.
    """

    n: int
    N: int
    kind: str = field(default="torus", init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise GeometryError(f"torus dimension must be an integer >= 3, got {self.n}")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise GeometryError(f"modes per axis must be an even integer >= 8, got {self.N}")

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Integer wavenumbers along one axis, FFT ordering."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(int)

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.frequencies] * self.n), indexing="ij"))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return sum(k.astype(float) ** 2 for k in self.wavevectors)

    @cached_property
    def band_mask(self) -> np.ndarray:
        limit = self.N // 2 - 1
        return np.all([np.abs(k) <= limit for k in self.wavevectors], axis=0)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def coef_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def volume(self) -> float:
        return (2 * np.pi) ** self.n

    @property
    def cell_volume(self) -> float:
        return (2 * np.pi / self.N) ** self.n

    @property
    def weights(self) -> float:
        return self.cell_volume

    @cached_property
    def axis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    @cached_property
    def points(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of the grid, each of shape ``grid_shape``."""
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    def mode_index(self, k) -> tuple[int, ...]:
        """Position of wavevector ``k`` in the FFT-ordered coefficient array."""
        k = tuple(int(v) for v in k)
        if len(k) != self.n:
            raise GeometryError(f"wavevector {k} has wrong dimension")
        if any(v < -self.N // 2 or v >= self.N // 2 for v in k):
            raise GeometryError(f"wavevector {k} outside the resolved mode set")
        return tuple(v % self.N for v in k)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = self.check_coeffs(coeffs)
        return np.fft.ifftn(coeffs) * self.N**self.n

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        samples = self.check_grid(samples)
        return np.fft.fftn(samples) / self.N**self.n

    def padded_size(self, damping_band: int) -> int:
        # M >= N + band keeps aliases of the product out of the retained modes
        size = max(3 * self.N // 2, self.N + damping_band)
        return size + size % 2

    def multiply(self, damping: "DampingField", coeffs: np.ndarray) -> np.ndarray:
        """Galerkin product ``Pi(a u)`` formed on an oversampled grid."""
        coeffs = self.check_coeffs(coeffs)
        if damping.is_constant:
            return damping.mean * coeffs
        M = self.padded_size(damping.band)
        idx = np.ix_(*([self.frequencies % M] * self.n))
        padded = np.zeros((M,) * self.n, dtype=complex)
        padded[idx] = coeffs
        values = np.fft.ifftn(padded) * M**self.n
        values *= damping.samples_on(M)
        product = np.fft.fftn(values) / M**self.n
        return product[idx]


@dataclass(frozen=True, eq=False)
class SphereZonalGeometry(ModelGeometry):
    """Zonal sector of the round ``S^3``.

    The basis ``Z_k(theta) = sin((k+1) theta) / (pi sqrt(2) sin theta)`` is
    orthonormal for ``dV = 4 pi sin^2(theta) dtheta`` and ``-Delta Z_k = k(k+2) Z_k``.
    Nodes are ``theta_j = j pi / (n_theta + 1)``, the Gauss rule for the weight
    ``sqrt(1 - t^2)`` in ``t = cos(theta)``; it integrates polynomials in ``t`` of
    degree ``< 2 n_theta`` exactly.
    """

    K: int
    n_theta: int
    kind: str = field(default="sphere", init=False)

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 4:
            raise GeometryError(f"max degree must be an integer >= 4, got {self.K}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 4 * self.K:
            raise GeometryError(
                f"n_theta={self.n_theta} under-resolves degree K={self.K}; need >= {4 * self.K}"
            )

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.arange(self.K + 1)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k = self.degrees.astype(float)
        return k * (k + 2)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.pi * np.arange(1, self.n_theta + 1) / (self.n_theta + 1)

    @cached_property
    def weights(self) -> np.ndarray:
        return 4 * np.pi * (np.pi / (self.n_theta + 1)) * np.sin(self.theta) ** 2

    @cached_property
    def basis(self) -> np.ndarray:
        """Matrix of ``Z_k(theta_j)``, shape ``(n_theta, K + 1)``."""
        return self.zonal(self.theta)

    def zonal(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)[..., None]
        k = self.degrees
        s = np.sin(theta)
        small = np.abs(s) < 1e-12
        safe = np.where(small, 1.0, s)
        vals = np.sin((k + 1) * theta) / safe
        # limits at the poles: (k+1) at theta=0, (-1)^k (k+1) at theta=pi
        pole = np.where(np.cos(theta) > 0, 1.0, (-1.0) ** k) * (k + 1)
        vals = np.where(small, pole, vals)
        return vals / (np.pi * np.sqrt(2.0))

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.n_theta,)

    @property
    def coef_shape(self) -> tuple[int, ...]:
        return (self.K + 1,)

    @property
    def volume(self) -> float:
        return 2 * np.pi**2

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = self.check_coeffs(coeffs)
        return self.basis @ coeffs

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        samples = self.check_grid(samples)
        return self.basis.T @ (self.weights * samples)

    def gram(self) -> np.ndarray:
        return self.basis.T @ (self.weights[:, None] * self.basis)

    def multiply(self, damping: "DampingField", coeffs: np.ndarray) -> np.ndarray:
        coeffs = self.check_coeffs(coeffs)
        if damping.is_constant:
            return damping.mean * coeffs
        return self.from_grid(damping.samples * self.to_grid(coeffs))


def build_torus(n: int, N: int) -> TorusGeometry:
    """Flat torus ``T^n`` with ``N`` equispaced points per axis."""
    return TorusGeometry(n, N)


def build_sphere_zonal(K: int, n_theta: int | None = None) -> SphereZonalGeometry:
    """Zonal sector of ``S^3`` up to degree ``K`` (default ``n_theta = 4K``)."""
    return SphereZonalGeometry(K, 4 * K if n_theta is None else n_theta)


def integrate(geom: ModelGeometry, samples) -> float | complex:
    """Quadrature approximation of ``int_M samples dV``."""
    return geom.integrate(samples)


@dataclass(frozen=True, eq=False)
class DampingField:
    """A real damping coefficient ``a`` on a model geometry.

    On the torus ``terms`` maps wavevectors to Fourier coefficients of a finite
    trigonometric polynomial. On the sphere ``func`` is a function of the polar
    angle. ``sup``/``inf`` are exact when supplied, otherwise located numerically.
    """

    geometry: ModelGeometry
    terms: Mapping[tuple[int, ...], complex] | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    sup: float = np.nan
    inf: float = np.nan
    label: str = ""

    def __post_init__(self):
        if (self.terms is None) == (self.func is None):
            raise GeometryError("damping needs exactly one of terms or func")
        if self.terms is not None:
            for k, c in self.terms.items():
                partner = self.terms.get(tuple(-v for v in k), 0.0)
                if abs(np.conj(c) - partner) > 1e-14 * max(1.0, abs(c)):
                    raise GeometryError(f"trigonometric damping not real: term {k}")
        imag = np.max(np.abs(self._raw_samples.imag)) if self._raw_samples.size else 0.0
        if imag > 1e-12:
            raise GeometryError(f"damping has imaginary residue {imag:.3e}")
        if np.isnan(self.sup) or np.isnan(self.inf):
            lo, hi = self._locate_extrema()
            if np.isnan(self.sup):
                object.__setattr__(self, "sup", hi)
            if np.isnan(self.inf):
                object.__setattr__(self, "inf", lo)
        if self.inf > self.sup:
            raise GeometryError("damping inf exceeds sup")

    @cached_property
    def is_constant(self) -> bool:
        if self.terms is not None:
            return all(not any(k) or c == 0 for k, c in self.terms.items())
        return bool(np.ptp(self.samples) == 0)

    @cached_property
    def mean(self) -> float:
        if self.terms is not None:
            zero = (0,) * self.geometry.n
            return float(np.real(self.terms.get(zero, 0.0)))
        return float(self.geometry.integrate(self.samples) / self.geometry.volume)

    @cached_property
    def band(self) -> int:
        if self.terms is None:
            return 0
        return max((max(abs(v) for v in k) for k in self.terms), default=0)

    def evaluate(self, x) -> np.ndarray:
        """Values at points: torus ``x[..., n]`` coordinates, sphere polar angles."""
        if self.terms is not None:
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1], dtype=complex)
            for k, c in self.terms.items():
                out += c * np.exp(1j * (x @ np.asarray(k, dtype=float)))
            return out.real
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    @cached_property
    def _raw_samples(self) -> np.ndarray:
        geom = self.geometry
        if self.terms is not None:
            x = np.stack(geom.points, axis=-1)
            out = np.zeros(geom.grid_shape, dtype=complex)
            for k, c in self.terms.items():
                out += c * np.exp(1j * (x @ np.asarray(k, dtype=float)))
            return out
        return np.asarray(self.func(geom.theta), dtype=complex)

    @cached_property
    def samples(self) -> np.ndarray:
        return self._raw_samples.real.copy()

    def samples_on(self, M: int) -> np.ndarray:
        """Samples on an ``M``-point-per-axis torus grid (cached per size)."""
        cache = self.__dict__.setdefault("_padded_cache", {})
        if M not in cache:
            axis = 2 * np.pi * np.arange(M) / M
            x = np.stack(np.meshgrid(*([axis] * self.geometry.n), indexing="ij"), axis=-1)
            cache[M] = self.evaluate(x)
        return cache[M]

    def _locate_extrema(self) -> tuple[float, float]:
        geom = self.geometry
        if self.terms is not None:
            fine = 4 * max(8, 2 * self.band)
            vals = self.samples_on(fine)
            axis = 2 * np.pi * np.arange(fine) / fine
            starts = {
                "max": np.unravel_index(np.argmax(vals), vals.shape),
                "min": np.unravel_index(np.argmin(vals), vals.shape),
            }
            hi, lo = float(vals.max()), float(vals.min())
            for which, idx in starts.items():
                sign = -1.0 if which == "max" else 1.0
                x0 = axis[list(idx)]
                res = optimize.minimize(lambda x: sign * float(self.evaluate(x)), x0, tol=1e-14)
                if which == "max":
                    hi = max(hi, -res.fun)
                else:
                    lo = min(lo, res.fun)
            return lo, hi
        theta = np.linspace(0.0, np.pi, 4001)
        vals = self.evaluate(theta)
        hi, lo = float(vals.max()), float(vals.min())
        for which, sign in (("max", -1.0), ("min", 1.0)):
            i = int(np.argmax(vals) if which == "max" else np.argmin(vals))
            lo_b, hi_b = theta[max(i - 1, 0)], theta[min(i + 1, theta.size - 1)]
            res = optimize.minimize_scalar(
                lambda t: sign * float(self.evaluate(np.array([t]))[0]),
                bounds=(lo_b, hi_b),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if which == "max":
                hi = max(hi, -res.fun)
            else:
                lo = min(lo, res.fun)
        return lo, hi


def trig_damping(geom: TorusGeometry, terms, sup=np.nan, inf=np.nan, label="") -> DampingField:
    terms = {tuple(int(v) for v in k): complex(c) for k, c in dict(terms).items()}
    return DampingField(geom, terms=terms, sup=sup, inf=inf, label=label)


def cosine_damping(geom: TorusGeometry, offset: float, cosines) -> DampingField:
    """``offset + sum_j amp_j cos(k_j . x)`` from ``[(k_j, amp_j), ...]``."""
    terms: dict[tuple[int, ...], complex] = {(0,) * geom.n: complex(offset)}
    parts = [f"{offset:g}"]
    for k, amp in cosines:
        k = tuple(int(v) for v in k)
        mk = tuple(-v for v in k)
        terms[k] = terms.get(k, 0.0) + amp / 2
        terms[mk] = terms.get(mk, 0.0) + amp / 2
        parts.append(f"{amp:g}cos{list(k)}")
    return trig_damping(geom, terms, label=" + ".join(parts))


def constant_damping(geom: ModelGeometry, c: float) -> DampingField:
    if isinstance(geom, TorusGeometry):
        return trig_damping(geom, {(0,) * geom.n: c}, sup=c, inf=c, label=f"{c:g}")
    return DampingField(geom, func=lambda t: np.full(np.shape(t), float(c)), sup=c, inf=c,
                        label=f"{c:g}")


def zonal_damping(geom: SphereZonalGeometry, func, sup=np.nan, inf=np.nan, label="") -> DampingField:
    return DampingField(geom, func=func, sup=sup, inf=inf, label=label)
