"""Lower bounds for ``L^p -> L^q`` operator norms by Boyd's fixed-point iteration.

For an operator ``T`` with quadrature adjoint ``T*`` the iteration

    f <- J_{p'}( T* J_q( T f ) ),   J_r(v) = |v|^(r-1) phase(v) / ||v||_r^(r-1)

never decreases ``||T f||_q / ||f||_p``: with ``h = J_q(Tf)`` and ``w = T* h``,
``||T f_new||_q >= |<T f_new, h>| = ||w||_{p'} >= |<f, w>| = ||T f||_q``.
The returned value is a lower bound on the true norm, attained by the witness.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..fields import grid_lp_norm, holder_conjugate
from .operators import GridOperator

__all__ = ["NormProbe", "BoydDivergence", "dual_map", "opnorm_lower_bound", "witness_checksum"]


class BoydDivergence(ArithmeticError):
    pass


@dataclass
class NormProbe:
    p: float
    q: float
    value: float
    witness: np.ndarray
    iterations: int
    restarts: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    restart_values: list[float] = field(default_factory=list)

    def recompute(self, op: GridOperator) -> float:
        geom = op.geometry
        return grid_lp_norm(geom, op.apply(self.witness), self.q) / grid_lp_norm(geom, self.witness, self.p)


def dual_map(geom, v: np.ndarray, r: float) -> np.ndarray:
    """Norming functional of ``v`` in ``L^r``: unit ``L^{r'}`` norm, pairs with ``v`` to ``||v||_r``."""
    mod = np.abs(v)
    peak = mod.max()
    if peak == 0:
        return np.zeros_like(v, dtype=complex)
    scaled = mod / peak
    phase = np.divide(v, mod, out=np.zeros_like(v, dtype=complex), where=mod > 0)
    out = scaled ** (r - 1) * phase
    return out / grid_lp_norm(geom, scaled, r) ** (r - 1)


def opnorm_lower_bound(
    op: GridOperator,
    p: float,
    q: float,
    restarts: int = 8,
    max_iters: int = 200,
    seed: int = 0,
    rtol: float = 1e-8,
    patience: int = 3,
) -> NormProbe:
    """Best Boyd iterate over ``restarts`` seeded random starts."""
    if not (1 < p < np.inf and 1 < q < np.inf):
        raise ValueError(f"exponents must lie in (1, inf), got p={p}, q={q}")
    geom = op.geometry
    p_dual = holder_conjugate(p)
    rng = np.random.default_rng(seed)
    best: NormProbe | None = None
    restart_values = []
    total_iters = 0
    for _ in range(restarts):
        f = rng.standard_normal(geom.grid_shape) + 1j * rng.standard_normal(geom.grid_shape)
        f /= grid_lp_norm(geom, f, p)
        g = op.apply(f)
        value = grid_lp_norm(geom, g, q)
        trace = [value]
        calm = 0
        converged = False
        for _it in range(max_iters):
            w = op.adjoint(dual_map(geom, g, q))
            f_new = dual_map(geom, w, p_dual)
            g_new = op.apply(f_new)
            new = grid_lp_norm(geom, g_new, q)
            if not np.isfinite(new):
                raise BoydDivergence(f"non-finite Boyd iterate for {op.label}")
            trace.append(new)
            total_iters += 1
            change = abs(new - value) / max(abs(new), np.finfo(float).tiny)
            f, g, value = f_new, g_new, new
            calm = calm + 1 if change < rtol else 0
            if calm >= patience:
                converged = True
                break
        restart_values.append(value)
        if best is None or value > best.value:
            best = NormProbe(p, q, value, f, 0, restarts, converged, trace)
    best.iterations = total_iters
    best.restart_values = restart_values
    return best


def witness_checksum(witness: np.ndarray) -> str:
    """Short digest of a witness, rounded so platform noise does not change it."""
    data = np.round(np.asarray(witness, dtype=complex).view(float), 10) + 0.0
    return hashlib.sha256(np.ascontiguousarray(data).tobytes()).hexdigest()[:16]
