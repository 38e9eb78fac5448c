"""Hamilton flow of ``p = |xi|^2`` and long-time averages of the damping along it."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from ..geometry import DampingField, ModelGeometry, SphereZonalGeometry, TorusGeometry

__all__ = [
    "FlowError",
    "FlowAverageResult",
    "geodesic_flow",
    "time_average",
    "rational_directions",
    "quasi_random_directions",
    "estimate_A_bounds",
    "DEFAULT_LADDER",
]

log = logging.getLogger(__name__)

DEFAULT_LADDER = (4.0, 8.0, 16.0, 32.0, 64.0)
SHELL_TOL = 1e-12
LADDER_TOL = 1e-6


class FlowError(ValueError):
    pass


def _check_shell(xi: np.ndarray, energy: float) -> None:
    norm2 = np.sum(np.asarray(xi) ** 2, axis=-1)
    if np.any(np.abs(norm2 - energy) > SHELL_TOL * max(1.0, energy)):
        raise FlowError(f"covector off the energy shell |xi|^2 = {energy}")


def geodesic_flow(geom: ModelGeometry, x, xi, t, energy: float = 1.0):
    """``exp(t H_p)(x, xi)``; speed ``2|xi|`` since ``dx/dt = dp/dxi = 2 xi``.

    Torus points are coordinates in ``[0, 2pi)^n``; sphere points are unit vectors
    in ``R^4`` with ``xi`` tangent at ``x``. ``t`` may be an array (leading axes).
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_shell(xi, energy)
    t = np.asarray(t, dtype=float)[..., None]
    if isinstance(geom, TorusGeometry):
        x_t = np.mod(x + 2 * t * xi, 2 * np.pi)
        return x_t, np.broadcast_to(xi, x_t.shape).copy()
    if isinstance(geom, SphereZonalGeometry):
        if np.any(np.abs(np.sum(x * x, axis=-1) - 1) > SHELL_TOL):
            raise FlowError("sphere point is not a unit vector")
        if np.any(np.abs(np.sum(x * xi, axis=-1)) > SHELL_TOL):
            raise FlowError("covector is not tangent to the sphere")
        speed = math.sqrt(energy)
        e = xi / speed
        angle = 2 * speed * t
        x_t = np.cos(angle) * x + np.sin(angle) * e
        xi_t = speed * (-np.sin(angle) * x + np.cos(angle) * e)
        return x_t, xi_t
    raise FlowError(f"unsupported geometry {type(geom).__name__}")


def _damping_on(geom: ModelGeometry, a: DampingField, points: np.ndarray) -> np.ndarray:
    if isinstance(geom, SphereZonalGeometry):
        return a.evaluate(np.arccos(np.clip(points[..., 0], -1.0, 1.0)))
    return a.evaluate(points)


def default_quad_points(T: float, frequency: float) -> int:
    # Gauss-Legendre needs roughly half a node per radian of phase plus headroom
    return int(math.ceil(frequency * T)) + 32


def time_average(geom: ModelGeometry, a: DampingField, x, xi, T: float,
                 quad_points: int | None = None, energy: float = 1.0) -> np.ndarray:
    """``(1/2T) int_{-T}^{T} a(exp(t H_p)(x, xi)) dt`` by Gauss-Legendre in ``t``."""
    if not T > 0:
        raise FlowError(f"averaging time must be positive, got {T}")
    if quad_points is None:
        if isinstance(geom, TorusGeometry):
            wave = max((float(np.linalg.norm(k)) for k in a.terms), default=1.0) or 1.0
        else:
            wave = 16.0
        quad_points = default_quad_points(T, 2 * math.sqrt(energy) * wave)
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    t = T * nodes.reshape((-1,) + (1,) * (np.ndim(x) - 1))
    pts, _ = geodesic_flow(geom, x, xi, t, energy)
    vals = _damping_on(geom, a, pts)
    return 0.5 * np.tensordot(weights, vals, axes=(0, 0))


def rational_directions(n: int, height: int) -> np.ndarray:
    """Unit vectors ``k/|k|`` for nonzero integer ``k`` with ``|k|_inf <= height``, deduplicated."""
    seen = {}
    for k in itertools.product(range(-height, height + 1), repeat=n):
        if not any(k):
            continue
        g = math.gcd(*k)
        prim = tuple(v // g for v in k)
        seen.setdefault(prim, None)
    dirs = np.array(list(seen), dtype=float)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def quasi_random_directions(n: int, count: int, seed: int) -> np.ndarray:
    """Scrambled-Sobol Gaussian directions normalised to the unit sphere."""
    if count <= 0:
        return np.zeros((0, n))
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    u = sob.random(count)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class FlowAverageResult:
    T_ladder: tuple[float, ...]
    sup_sequence: list[float]
    inf_sequence: list[float]
    A_plus: float
    A_minus: float
    cauchy_gap: float
    sample_count: int
    values: np.ndarray = field(repr=False)
    damping_sup: float = np.nan
    damping_inf: float = np.nan
    monotone: bool = True
    warnings: list[str] = field(default_factory=list)


def _torus_averages(geom: TorusGeometry, a: DampingField, dirs: np.ndarray, base: np.ndarray,
                    T: float, quad_points: int | None) -> np.ndarray:
    """``<a>_T`` for every (direction, base point) pair.

    Along a torus line each Fourier term only picks up the factor
    ``(1/2T) int exp(2 i t k.xi) dt``, so the time quadrature is done once per
    (direction, term) and the base points enter through ``exp(i k.x)``.
    """
    ks = np.array(list(a.terms), dtype=float)
    cs = np.array(list(a.terms.values()), dtype=complex)
    if quad_points is None:
        quad_points = default_quad_points(T, 2 * np.max(np.linalg.norm(ks, axis=1), initial=1.0))
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    phase = 2 * T * (dirs @ ks.T)  # (D, terms)
    factor = 0.5 * np.einsum("q,dkq->dk", weights, np.exp(1j * phase[..., None] * nodes))
    waves = np.exp(1j * base @ ks.T)  # (B, terms)
    return np.real((factor * cs) @ waves.T)


def _sphere_samples(count_theta: int, count_psi: int):
    theta = np.pi * (np.arange(count_theta) + 0.5) / count_theta
    theta = np.concatenate([[0.0], theta, [np.pi]])
    psi = np.pi * np.arange(count_psi) / max(count_psi - 1, 1)
    th, ps = np.meshgrid(theta, psi, indexing="ij")
    th, ps = th.ravel(), ps.ravel()
    x = np.stack([np.cos(th), np.sin(th), np.zeros_like(th), np.zeros_like(th)], axis=1)
    xi = np.stack([-np.sin(th) * np.cos(ps), np.cos(th) * np.cos(ps), np.sin(ps), np.zeros_like(th)], axis=1)
    return x, xi


def estimate_A_bounds(
    geom: ModelGeometry,
    a: DampingField,
    T_ladder=DEFAULT_LADDER,
    direction_samples: int = 256,
    point_samples: int = 16,
    seed: int = 0,
    rational_height: int = 3,
    quad_points: int | None = None,
) -> FlowAverageResult:
    """Sup and inf of ``<a>_T`` over a deterministic sample of ``p^{-1}(1)``.

    Torus: all rational directions ``k/|k|`` with ``|k|_inf <= rational_height``
    plus ``direction_samples`` quasi-random unit covectors, over a
    ``point_samples^n`` grid of base points. Frozen-coordinate orbits carry the
    extremes for separable damping and are only hit by the rational directions.
    Sphere: polar angle and launch angle grids (``point_samples`` by
    ``direction_samples``). ``A_plus``/``A_minus`` are the last-rung values.
    """
    ladder = tuple(float(t) for t in T_ladder)
    if any(t <= 0 for t in ladder) or any(b <= a_ for a_, b in zip(ladder, ladder[1:])):
        raise FlowError(f"T ladder must be positive and increasing, got {ladder}")
    sups, infs = [], []
    values = np.zeros(0)
    if isinstance(geom, TorusGeometry):
        dirs = np.concatenate([
            rational_directions(geom.n, rational_height),
            quasi_random_directions(geom.n, direction_samples, seed),
        ])
        axis = 2 * np.pi * np.arange(point_samples) / point_samples
        base = np.stack(np.meshgrid(*([axis] * geom.n), indexing="ij"), axis=-1).reshape(-1, geom.n)
        for T in ladder:
            values = _torus_averages(geom, a, dirs, base, T, quad_points)
            sups.append(float(values.max()))
            infs.append(float(values.min()))
    elif isinstance(geom, SphereZonalGeometry):
        x, xi = _sphere_samples(point_samples, max(direction_samples // 8, 4))
        for T in ladder:
            values = time_average(geom, a, x, xi, T, quad_points)
            sups.append(float(values.max()))
            infs.append(float(values.min()))
    else:
        raise FlowError(f"unsupported geometry {type(geom).__name__}")

    notes = []
    monotone = all(b <= a_ + LADDER_TOL for a_, b in zip(sups, sups[1:])) and all(
        b >= a_ - LADDER_TOL for a_, b in zip(infs, infs[1:])
    )
    if not monotone:
        notes.append("sup/inf sequence not monotone over the T ladder: sampling may be insufficient")
        log.warning(notes[-1])
    gap = max(abs(sups[-1] - sups[-2]), abs(infs[-1] - infs[-2])) if len(ladder) > 1 else np.nan
    return FlowAverageResult(
        ladder, sups, infs, sups[-1], infs[-1], gap, int(values.size), values,
        a.sup, a.inf, monotone, notes,
    )
