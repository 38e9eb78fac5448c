"""Laplace and damped-wave operators on the model geometries and their inverses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from ..fields import SpectralField
from ..geometry import DampingField, ModelGeometry, SphereZonalGeometry, TorusGeometry

__all__ = [
    "SingularityError",
    "NearEigenvalueError",
    "laplace_apply",
    "laplace_resolve",
    "l2_resolvent_norm_exact",
    "damped_apply",
    "damped_resolve",
    "galerkin_damping_matrix",
    "DampedFactorization",
    "GridOperator",
    "identity_operator",
    "multiplier_operator",
    "laplace_resolvent_operator",
    "damped_resolvent_operator",
]

SINGULAR_DISTANCE = 1e-12


class SingularityError(ArithmeticError):
    """Spectral parameter on (or numerically at) the spectrum."""


class NearEigenvalueError(ArithmeticError):
    """Damped solve failed to reach tolerance; ``tau`` is likely near an eigenvalue."""

    def __init__(self, message: str, residual: float = np.nan):
        super().__init__(message)
        self.residual = residual


def _spectral_distance(geom: ModelGeometry, z: complex) -> float:
    return float(np.min(np.abs(geom.eigenvalues - complex(z) ** 2)))


def laplace_apply(geom: ModelGeometry, z: complex, u: SpectralField) -> SpectralField:
    """``(-Delta - z^2) u``."""
    return u.with_coeffs((geom.eigenvalues - complex(z) ** 2) * u.coeffs)


def laplace_resolve(geom: ModelGeometry, z: complex, f: SpectralField) -> SpectralField:
    """Diagonal solve of ``(-Delta - z^2) u = f``."""
    if _spectral_distance(geom, z) < SINGULAR_DISTANCE:
        raise SingularityError(f"z^2 = {complex(z) ** 2} lies on the spectrum")
    return f.with_coeffs(f.coeffs / (geom.eigenvalues - complex(z) ** 2))


def l2_resolvent_norm_exact(geom: ModelGeometry, z: complex) -> float:
    """``1 / dist(z^2, Spec)`` over the resolved spectrum."""
    d = _spectral_distance(geom, z)
    if d < SINGULAR_DISTANCE:
        raise SingularityError(f"z^2 = {complex(z) ** 2} lies on the spectrum")
    return 1.0 / d


def _damped_coeffs(geom, a: DampingField, tau: complex, c: np.ndarray) -> np.ndarray:
    return (geom.eigenvalues - tau**2) * c + 2j * tau * geom.multiply(a, c)


def damped_apply(geom: ModelGeometry, a: DampingField, tau: complex, u: SpectralField) -> SpectralField:
    """``P(tau) u = (-Delta + 2 i tau a - tau^2) u`` with a de-aliased product."""
    return u.with_coeffs(_damped_coeffs(geom, a, complex(tau), u.coeffs))


def damped_resolve(
    geom: ModelGeometry,
    a: DampingField,
    tau: complex,
    f: SpectralField,
    tol: float = 1e-10,
    restart: int = 50,
    maxiter: int = 2000,
    spectrum: Sequence[complex] | None = None,
) -> SpectralField:
    """Solve ``P(tau) u = f`` by right-preconditioned restarted GMRES.

    The preconditioner is the diagonal ``-Delta - tau^2 + 2 i tau mean(a)``.
    On return ``||P(tau) u - f||_2 <= tol ||f||_2``; otherwise
    :class:`NearEigenvalueError` carries the attained residual.
    """
    tau = complex(tau)
    if spectrum is not None and len(spectrum):
        gap = float(np.min(np.abs(np.asarray(spectrum) - tau)))
        if gap < 10 * tol:
            raise NearEigenvalueError(f"tau={tau} within {gap:.2e} of a computed eigenvalue")
    b = f.coeffs.ravel()
    fnorm = np.linalg.norm(b)
    if fnorm == 0:
        return f.with_coeffs(np.zeros_like(f.coeffs))
    if a.is_constant:
        diag = geom.eigenvalues - tau**2 + 2j * tau * a.mean
        if np.min(np.abs(diag)) < SINGULAR_DISTANCE:
            raise NearEigenvalueError(f"tau={tau} is an eigenvalue for constant damping", np.inf)
        return f.with_coeffs(f.coeffs / diag)

    shape = geom.coef_shape
    diag = (geom.eigenvalues - tau**2 + 2j * tau * a.mean).ravel()
    diag = np.where(np.abs(diag) < SINGULAR_DISTANCE, 1.0, diag)

    def matvec(y):
        x = (y / diag).reshape(shape)
        return _damped_coeffs(geom, a, tau, x).ravel()

    op = LinearOperator((b.size, b.size), matvec=matvec, dtype=complex)
    y = np.zeros_like(b)
    residual = np.inf
    # a few outer passes guard against GMRES stopping on its recursive residual
    for _ in range(3):
        y, _info = gmres(op, b, x0=y, rtol=0.5 * tol, atol=0.0, restart=restart, maxiter=maxiter)
        residual = np.linalg.norm(matvec(y) - b) / fnorm
        if residual <= tol:
            return f.with_coeffs((y / diag).reshape(shape))
    raise NearEigenvalueError(
        f"damped solve at tau={tau} stalled at relative residual {residual:.2e}", residual
    )


def galerkin_damping_matrix(geom: ModelGeometry, a: DampingField):
    """Matrix of ``c -> Pi(a u)`` on flattened coefficients (sparse on the torus).

    On the torus the Galerkin product is the convolution with the Fourier
    coefficients of ``a``, truncated to the resolved index set.
    """
    if isinstance(geom, TorusGeometry):
        if a.terms is None:
            raise ValueError("the sparse Galerkin matrix needs a trigonometric damping")
        size = geom.mode_count
        shape = geom.coef_shape
        freq = np.stack(np.meshgrid(*([geom.frequencies] * geom.n), indexing="ij"), axis=-1).reshape(-1, geom.n)
        half = geom.N // 2
        rows, cols, vals = [], [], []
        src = np.arange(size)
        for k, c in a.terms.items():
            if c == 0:
                continue
            target = freq + np.asarray(k)
            keep = np.all((target >= -half) & (target < half), axis=1)
            flat = np.ravel_multi_index(tuple((target[keep] % geom.N).T), shape)
            rows.append(flat)
            cols.append(src[keep])
            vals.append(np.full(flat.size, complex(c)))
        if not rows:
            return sp.csc_matrix((size, size), dtype=complex)
        return sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
        )
    if isinstance(geom, SphereZonalGeometry):
        eye = np.eye(geom.mode_count)
        return np.column_stack([geom.multiply(a, e) for e in eye]).astype(complex)
    raise TypeError(f"unsupported geometry {type(geom).__name__}")


class DampedFactorization:
    """LU factorisation of ``P(tau)`` for repeated solves at one ``tau``.

    Every solve is checked against the FFT-based :func:`damped_apply`, so the
    factorised matrix and the operator cannot silently disagree.
    """

    def __init__(self, geom: ModelGeometry, a: DampingField, tau: complex, tol: float = 1e-10,
                 matrix=None):
        self.geometry, self.damping, self.tau, self.tol = geom, a, complex(tau), tol
        A = galerkin_damping_matrix(geom, a) if matrix is None else matrix
        lam = geom.eigenvalues.ravel().astype(complex)
        tau = self.tau
        try:
            if sp.issparse(A):
                P = (sp.diags(lam - tau**2) + 2j * tau * A).tocsc()
                self._lu = splu(P)
                self._solve = self._lu.solve
            else:
                P = np.diag(lam - tau**2) + 2j * tau * A
                lu = scipy.linalg.lu_factor(P, check_finite=False)
                self._solve = lambda b: scipy.linalg.lu_solve(lu, b, check_finite=False)
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            raise NearEigenvalueError(f"P(tau) is singular at tau={tau}: {exc}", np.inf) from exc

    def solve(self, f: SpectralField) -> SpectralField:
        geom = self.geometry
        b = f.coeffs.ravel()
        fnorm = np.linalg.norm(b)
        if fnorm == 0:
            return f.with_coeffs(np.zeros_like(f.coeffs))
        x = self._solve(b.astype(complex)).reshape(geom.coef_shape)
        residual = np.linalg.norm(_damped_coeffs(geom, self.damping, self.tau, x) - f.coeffs) / fnorm
        if not residual <= self.tol:
            raise NearEigenvalueError(
                f"factorised solve at tau={self.tau} has relative residual {residual:.2e}", residual
            )
        return f.with_coeffs(x)


@dataclass(frozen=True, eq=False)
class GridOperator:
    """A linear map on grid samples together with its quadrature adjoint."""

    geometry: ModelGeometry
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    label: str = ""


def _coefficient_multiplier(geom: ModelGeometry, mult: np.ndarray, label: str) -> GridOperator:
    mult = np.asarray(mult)
    conj = np.conj(mult)
    return GridOperator(
        geom,
        lambda g: geom.to_grid(mult * geom.from_grid(g)),
        lambda g: geom.to_grid(conj * geom.from_grid(g)),
        label,
    )


def identity_operator(geom: ModelGeometry) -> GridOperator:
    return GridOperator(geom, lambda g: np.array(g, dtype=complex), lambda g: np.array(g, dtype=complex),
                        "identity")


def multiplier_operator(geom: ModelGeometry, mult) -> GridOperator:
    """Eigenbasis multiplier ``c_k -> m_k c_k``."""
    return _coefficient_multiplier(geom, np.broadcast_to(mult, geom.coef_shape), "multiplier")


def laplace_resolvent_operator(geom: ModelGeometry, z: complex) -> GridOperator:
    """``(-Delta - z^2)^{-1}``; the adjoint is the resolvent at ``conj(z^2)``."""
    if _spectral_distance(geom, z) < SINGULAR_DISTANCE:
        raise SingularityError(f"z^2 = {complex(z) ** 2} lies on the spectrum")
    return _coefficient_multiplier(geom, 1.0 / (geom.eigenvalues - complex(z) ** 2), f"R(z={z})")


def damped_resolvent_operator(geom: ModelGeometry, a: DampingField, tau: complex,
                              method: str = "auto", **solver) -> GridOperator:
    """``P(tau)^{-1}``; its adjoint is ``P(-conj(tau))^{-1}`` because ``a`` is real.

    ``method='krylov'`` calls :func:`damped_resolve` for every application;
    ``'direct'`` factors ``P(tau)`` once, which pays off over the many solves of a
    Boyd iteration. ``'auto'`` picks direct whenever the Galerkin matrix is available.
    """
    tau = complex(tau)
    mirror = -np.conj(tau)
    if method == "auto":
        direct_ok = isinstance(geom, SphereZonalGeometry) or a.terms is not None
        method = "direct" if direct_ok else "krylov"
    if method == "direct":
        spectrum = solver.get("spectrum")
        tol = solver.get("tol", 1e-10)
        if spectrum is not None and len(spectrum):
            gap = float(np.min(np.abs(np.asarray(spectrum) - tau)))
            if gap < 10 * tol:
                raise NearEigenvalueError(f"tau={tau} within {gap:.2e} of a computed eigenvalue")
        A = galerkin_damping_matrix(geom, a)
        forward = DampedFactorization(geom, a, tau, tol, A)
        backward = DampedFactorization(geom, a, mirror, tol, A)

        def apply(fac, g):
            return fac.solve(SpectralField(geom, geom.from_grid(g))).samples

        return GridOperator(geom, lambda g: apply(forward, g), lambda g: apply(backward, g),
                            f"P(tau={tau})^-1")
    if method != "krylov":
        raise ValueError(f"unknown solve method {method!r}")

    def solve(at, g):
        f = SpectralField(geom, geom.from_grid(g))
        return damped_resolve(geom, a, at, f, **solver).samples

    return GridOperator(geom, lambda g: solve(tau, g), lambda g: solve(mirror, g), f"P(tau={tau})^-1")
