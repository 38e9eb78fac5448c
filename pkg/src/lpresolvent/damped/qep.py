"""Eigenvalues of the quadratic pencil ``P(tau) = L + 2 i tau A - tau^2`` on a truncated basis."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from ..geometry import DampingField, ModelGeometry, SphereZonalGeometry, TorusGeometry

__all__ = [
    "QepError",
    "Pencil",
    "QepSpectrum",
    "BandReport",
    "assemble_qep",
    "qep_eigenvalues",
    "check_band_localization",
    "StripReport",
    "check_strip_theorem",
    "reflection_distance",
    "write_spectrum_csv",
]

log = logging.getLogger(__name__)

MAX_DENSE_MODES = 1500
RESIDUAL_TRUST = 1e-8
TAIL_FRACTION = 0.2
TAIL_MASS_TRUST = 1e-4


class QepError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Pencil:
    """Truncated ``L`` (diagonal Laplacian) and ``A`` (multiplication by ``a``)."""

    geometry: ModelGeometry
    damping: DampingField
    truncation: int
    modes: np.ndarray
    L: np.ndarray
    A: np.ndarray

    @property
    def size(self) -> int:
        return self.L.shape[0]

    def apply(self, tau: complex, u: np.ndarray) -> np.ndarray:
        return self.L @ u + 2j * tau * (self.A @ u) - tau**2 * u


def _torus_modes(n: int, trunc: int) -> np.ndarray:
    axis = np.arange(-trunc, trunc + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def assemble_qep(geom: ModelGeometry, a: DampingField, truncation: int) -> Pencil:
    """Dense pencil on modes ``|k|_inf <= truncation`` (torus) or degrees ``<= truncation`` (sphere)."""
    if isinstance(geom, TorusGeometry):
        modes = _torus_modes(geom.n, truncation)
        if len(modes) > MAX_DENSE_MODES:
            raise QepError(f"{len(modes)} modes exceed the dense limit {MAX_DENSE_MODES}")
        lam = np.sum(modes.astype(float) ** 2, axis=1)
        A = np.zeros((len(modes), len(modes)), dtype=complex)
        diff = modes[:, None, :] - modes[None, :, :]
        for k, c in a.terms.items():
            hit = np.all(diff == np.asarray(k), axis=-1)
            A[hit] += c
    elif isinstance(geom, SphereZonalGeometry):
        if truncation > geom.K:
            raise QepError(f"truncation {truncation} exceeds the zonal basis degree {geom.K}")
        modes = np.arange(truncation + 1)[:, None]
        lam = geom.eigenvalues[: truncation + 1]
        S = geom.basis[:, : truncation + 1]
        A = (S.T @ (geom.weights[:, None] * a.samples[:, None] * S)).astype(complex)
    else:
        raise QepError(f"unsupported geometry {type(geom).__name__}")
    return Pencil(geom, a, truncation, modes, np.diag(lam).astype(complex), A)


@dataclass
class QepSpectrum:
    pencil: Pencil
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    tail_mass: np.ndarray
    trusted: np.ndarray
    polished: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def trusted_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.trusted]

    def rows(self):
        for tau, res, ok in zip(self.eigenvalues, self.residuals, self.trusted):
            yield tau.real, tau.imag, res, bool(ok)


def _relative_residual(pencil: Pencil, tau: complex, u: np.ndarray) -> float:
    r = np.linalg.norm(pencil.apply(tau, u))
    return float(r / ((abs(tau) ** 2 + abs(tau) + 1) * np.linalg.norm(u)))


def _polish(pencil: Pencil, tau: complex, u: np.ndarray) -> complex:
    """Root of the scalar quadratic ``u* P(t) u = 0`` nearest ``tau``.

    With ``u`` unit, ``L`` and ``A`` Hermitian, the roots are
    ``i alpha +- sqrt(l - alpha^2)`` where ``alpha = u*Au`` and ``l = u*Lu``.
    The discriminant is formed as ``u*(L - alpha A)u`` so that it vanishes exactly
    when ``u`` lies in a degenerate block.
    """
    u = u / np.linalg.norm(u)
    Au = pencil.A @ u
    alpha = float(np.real(np.vdot(u, Au)))
    disc = float(np.real(np.vdot(u, pencil.L @ u - alpha * Au)))
    root = np.sqrt(complex(disc))
    candidates = (1j * alpha + root, 1j * alpha - root)
    return min(candidates, key=lambda t: abs(t - tau))


def qep_eigenvalues(pencil: Pencil, polish: bool = True) -> QepSpectrum:
    """All ``2m`` eigenvalues via the companion matrix ``[[0, I], [L, 2iA]]``.

    ``scipy.linalg.eig`` (LAPACK Hessenberg reduction + shifted QR) does the dense
    solve. Each eigenvalue is then polished by the quadratic Rayleigh quotient of
    its eigenvector and the polished value kept when its residual is no worse.
    """
    m = pencil.size
    eye = np.eye(m, dtype=complex)
    companion = np.block([[np.zeros((m, m), dtype=complex), eye], [pencil.L, 2j * pencil.A]])
    try:
        values, vecs = scipy.linalg.eig(companion, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise QepError(f"dense eigensolve failed: {exc}") from exc

    lam = np.real(np.diag(pencil.L))
    tail = np.argsort(lam)[-max(1, math.ceil(TAIL_FRACTION * m)):]
    taus = np.empty(2 * m, dtype=complex)
    us = np.empty((m, 2 * m), dtype=complex)
    residuals = np.empty(2 * m)
    polished = np.zeros(2 * m, dtype=bool)
    for j in range(2 * m):
        tau = values[j]
        top, bottom = vecs[:m, j], vecs[m:, j]
        # bottom half is tau * u: the larger half carries more significant digits
        u = bottom if np.linalg.norm(bottom) > np.linalg.norm(top) else top
        u = u / np.linalg.norm(u)
        res = _relative_residual(pencil, tau, u)
        if polish:
            cand = _polish(pencil, tau, u)
            res_c = _relative_residual(pencil, cand, u)
            if res_c <= res and abs(cand - tau) <= 1e-6 * (1 + abs(tau)):
                tau, res, polished[j] = cand, res_c, True
        taus[j], us[:, j], residuals[j] = tau, u, res
    tail_mass = np.sum(np.abs(us[tail, :]) ** 2, axis=0)
    trusted = (residuals <= RESIDUAL_TRUST) & (tail_mass <= TAIL_MASS_TRUST)
    return QepSpectrum(pencil, taus, us, residuals, tail_mass, trusted, polished)


def reflection_distance(eigenvalues) -> float:
    """Max distance in the optimal matching of the multiset with its ``-conj`` reflection."""
    tau = np.asarray(eigenvalues, dtype=complex)
    if tau.size == 0:
        return 0.0
    cost = np.abs(tau[:, None] + np.conj(tau)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass
class BandReport:
    passed: bool
    checked: int
    violations: list[tuple[complex, str]]
    band: tuple[float, float]
    widened: tuple[float, float]


def check_band_localization(spec: QepSpectrum, a: DampingField, re_zero: float = 1e-6,
                            slack: float = 1e-8) -> BandReport:
    """Trusted eigenvalues lie in ``inf a <= Im tau <= sup a`` (widened on ``Re tau = 0``)."""
    taus = spec.trusted_eigenvalues
    if taus.size == 0:
        raise QepError("no trusted eigenvalues to check")
    band = (a.inf, a.sup)
    widened = (2 * min(a.inf, 0.0), 2 * max(a.sup, 0.0))
    violations = []
    for tau in taus:
        lo, hi = band if abs(tau.real) > re_zero else widened
        if not lo - slack <= tau.imag <= hi + slack:
            violations.append((complex(tau), f"Im tau={tau.imag:.12g} outside [{lo:g}, {hi:g}]"))
    return BandReport(not violations, int(taus.size), violations, band, widened)


@dataclass
class StripReport:
    passed: bool
    checked: int
    exceptions: list[complex]
    strip: tuple[float, float]
    window: tuple[float, float]
    vacuous: bool


def check_strip_theorem(spec: QepSpectrum, A_bounds, eps: float, window: tuple[float, float]) -> StripReport:
    """Trusted eigenvalues with ``|Re tau|`` in ``window`` lie in ``A_minus - eps < Im tau < A_plus + eps``.

    ``A_bounds`` is a ``(A_minus, A_plus)`` pair or anything with those attributes.
    An empty window passes vacuously with a warning.
    """
    if not eps > 0:
        raise QepError("strip half-width eps must be positive")
    if hasattr(A_bounds, "A_plus"):
        A_minus, A_plus = A_bounds.A_minus, A_bounds.A_plus
    else:
        A_minus, A_plus = A_bounds
    lo, hi = window
    taus = spec.trusted_eigenvalues
    inside = taus[(np.abs(taus.real) >= lo) & (np.abs(taus.real) <= hi)]
    strip = (A_minus - eps, A_plus + eps)
    bad = [complex(t) for t in inside if not strip[0] < t.imag < strip[1]]
    if inside.size == 0:
        log.warning("no trusted eigenvalue with |Re tau| in [%g, %g]; strip check is vacuous", lo, hi)
    return StripReport(not bad, int(inside.size), bad, strip, (lo, hi), inside.size == 0)


def write_spectrum_csv(spec: QepSpectrum, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["re_tau", "im_tau", "residual", "trusted"])
        for re, im, res, ok in spec.rows():
            writer.writerow([f"{re:.15e}", f"{im:.15e}", f"{res:.6e}", int(ok)])
    return path
