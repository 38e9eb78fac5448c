"""Randomised checks of the a priori inequalities for the Laplace and damped resolvents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fields import SpectralField, grid_lp_norm, lp_norm, random_field
from ..geometry import DampingField, ModelGeometry, TorusGeometry
from .operators import damped_resolve, laplace_resolve

__all__ = [
    "CheckReport",
    "PreconditionError",
    "sobolev_pair",
    "ellipt_constant",
    "check_ellipt_bounds",
    "check_apriori_crucial",
    "damped_l2_regime",
    "damped_l2_bound",
    "check_damped_l2_bounds",
]


class PreconditionError(ValueError):
    pass


@dataclass
class CheckReport:
    name: str
    passed: bool
    trials: int
    worst: float
    details: dict = field(default_factory=dict)
    values: list[float] = field(default_factory=list)


def sobolev_pair(geom: ModelGeometry) -> tuple[float, float]:
    """``(2n/(n+2), 2n/(n-2))`` for the geometry's dimension."""
    n = geom.n if isinstance(geom, TorusGeometry) else 3
    return 2 * n / (n + 2), 2 * n / (n - 2)


def ellipt_constant(z: complex, regime: str) -> float:
    z2 = complex(z) ** 2
    if regime == "ellipt1":
        if z2.imag == 0:
            raise PreconditionError("ellipt1 needs Im(z^2) != 0")
        return (abs(z) ** 2 + 1) / abs(z2.imag) + 1
    if regime == "ellipt2":
        if not z2.real < 0:
            raise PreconditionError("ellipt2 needs Re(z^2) < 0")
        return 1.0 / min(1.0, -z2.real)
    raise PreconditionError(f"unknown regime {regime!r}")


def check_ellipt_bounds(geom: ModelGeometry, z: complex, trials: int, seed: int,
                        regime: str = "ellipt1", C: float | None = None) -> CheckReport:
    """Worst ratio ``||u||_{p'} / (K(z) ||f||_p)`` over random data.

    ``K(z)`` is the regime's explicit factor. With ``C`` given the check passes when
    every ratio is at most ``C``; without it the report only measures.
    """
    K = ellipt_constant(z, regime)
    p, p_dual = sobolev_pair(geom)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        f = random_field(geom, rng)
        u = laplace_resolve(geom, z, f)
        ratios.append(lp_norm(u, p_dual) / (K * lp_norm(f, p)))
    worst = max(ratios)
    passed = True if C is None else worst <= C
    return CheckReport(f"{regime} z={complex(z)}", passed, trials, worst,
                       {"z": complex(z), "factor": K, "C": C}, ratios)


def check_apriori_crucial(geom: ModelGeometry, delta: float, h: float,
                          f: SpectralField | None = None, seed: int = 0) -> CheckReport:
    """``||u||_2^2 <= (h / 2 delta) ||f||_p ||u||_{p'}`` at ``z = 1/h + i delta``.

    The inequality is exact for the discrete operator (self-adjoint Laplacian,
    quadrature Hoelder), so no constant is fitted. ``details['slack']`` is rhs - lhs.
    """
    if f is None:
        f = random_field(geom, np.random.default_rng(seed))
    z = complex(1.0 / h, delta)
    p, p_dual = sobolev_pair(geom)
    u = laplace_resolve(geom, z, f)
    lhs = grid_lp_norm(geom, u.samples, 2) ** 2
    rhs = h / (2 * delta) * lp_norm(f, p) * lp_norm(u, p_dual)
    slack = rhs - lhs
    return CheckReport(f"crucial h={h}", slack >= 0, 1, slack,
                       {"lhs": lhs, "rhs": rhs, "slack": slack, "z": z}, [slack])


def damped_l2_regime(a: DampingField, tau: complex) -> str:
    tau = complex(tau)
    sup_abs = max(abs(a.sup), abs(a.inf))
    if tau.real != 0 and tau.imag > a.sup:
        return "above"
    if tau.real != 0 and tau.imag < a.inf:
        return "below"
    if abs(tau.real) <= abs(tau.imag) / 2 and abs(tau.imag) >= 4 * sup_abs:
        return "high"
    raise PreconditionError(f"tau={tau} is in none of the damped L2 regimes")


def damped_l2_bound(a: DampingField, tau: complex, regime: str) -> float:
    """Explicit ``L^2 -> L^2`` bound on ``P(tau)^{-1}`` in the given regime."""
    tau = complex(tau)
    sup_abs = max(abs(a.sup), abs(a.inf))
    if regime == "above":
        if not (tau.real != 0 and tau.imag > a.sup):
            raise PreconditionError("regime 'above' needs Re tau != 0 and Im tau > sup a")
        return 1.0 / (2 * abs(tau.real) * (tau.imag - a.sup))
    if regime == "below":
        if not (tau.real != 0 and tau.imag < a.inf):
            raise PreconditionError("regime 'below' needs Re tau != 0 and Im tau < inf a")
        return 1.0 / (2 * abs(tau.real) * (a.inf - tau.imag))
    if regime == "high":
        if not (abs(tau.real) <= abs(tau.imag) / 2 and abs(tau.imag) >= 4 * sup_abs):
            raise PreconditionError("regime 'high' needs |Re tau| <= |Im tau|/2, |Im tau| >= 4 sup|a|")
        return 4.0 / abs(tau.imag) ** 2
    raise PreconditionError(f"unknown regime {regime!r}")


def check_damped_l2_bounds(geom: ModelGeometry, a: DampingField, tau: complex, trials: int,
                           seed: int, regime: str | None = None, tol: float = 1e-10) -> CheckReport:
    """Worst ``||u||_2 / (bound ||f||_2)`` over random ``f``; passes when ``<= 1``."""
    regime = regime or damped_l2_regime(a, tau)
    bound = damped_l2_bound(a, tau, regime)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        f = random_field(geom, rng)
        u = damped_resolve(geom, a, tau, f, tol=tol)
        ratios.append(grid_lp_norm(geom, u.samples, 2) / (bound * grid_lp_norm(geom, f.samples, 2)))
    worst = max(ratios)
    return CheckReport(f"damped-{regime} tau={complex(tau)}", worst <= 1.0, trials, worst,
                       {"tau": complex(tau), "bound": bound, "regime": regime}, ratios)
