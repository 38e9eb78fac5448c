import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpresolvent.fields import grid_lp_norm, holder_conjugate
from lpresolvent.geometry import build_torus
from lpresolvent.resolvent.boyd import dual_map, opnorm_lower_bound, witness_checksum
from lpresolvent.resolvent.operators import (
    GridOperator,
    identity_operator,
    l2_resolvent_norm_exact,
    laplace_resolvent_operator,
    multiplier_operator,
)

TORUS = build_torus(3, 8)


def test_identity_has_norm_one(torus8):
    probe = opnorm_lower_bound(identity_operator(torus8), 1.5, 1.5, restarts=2, seed=3)
    assert probe.value == pytest.approx(1.0, abs=1e-12)


def test_constant_multiplier(torus8):
    op = multiplier_operator(torus8, 2.0)
    for p in (1.2, 2.0, 4.0):
        assert opnorm_lower_bound(op, p, p, restarts=2).value == pytest.approx(2.0, abs=1e-10)


def test_l2_oracle(torus8):
    z = 2.3 + 0.5j
    op = laplace_resolvent_operator(torus8, z)
    probe = opnorm_lower_bound(op, 2, 2, restarts=2, max_iters=3000, rtol=1e-13)
    exact = l2_resolvent_norm_exact(torus8, z)
    assert probe.value <= exact * (1 + 1e-8)
    assert probe.value == pytest.approx(exact, rel=1e-2)


@given(st.floats(0.3, 5), st.floats(0.1, 2), st.integers(0, 1000))
def test_l2_probe_never_exceeds_exact(x, y, seed):
    z = complex(x, y)
    op = laplace_resolvent_operator(TORUS, z)
    probe = opnorm_lower_bound(op, 2, 2, restarts=1, max_iters=30, seed=seed)
    assert probe.value <= l2_resolvent_norm_exact(TORUS, z) * (1 + 1e-8)


def test_trace_is_monotone_at_l2(torus8):
    op = laplace_resolvent_operator(torus8, 1.7 + 0.2j)
    probe = opnorm_lower_bound(op, 2, 2, restarts=1, max_iters=50)
    trace = np.array(probe.trace)
    assert np.all(np.diff(trace) >= -1e-10 * trace[1:])


def test_witness_recomputes(torus8):
    op = laplace_resolvent_operator(torus8, 3.1 + 0.5j)
    probe = opnorm_lower_bound(op, 1.2, 6.0, restarts=3, max_iters=100)
    assert probe.recompute(op) == pytest.approx(probe.value, rel=1e-10)
    assert len(probe.restart_values) == 3
    assert probe.value == max(probe.restart_values)


def test_phase_invariance(torus8):
    op = laplace_resolvent_operator(torus8, 2.5 + 0.5j)
    phase = np.exp(0.7j)
    rotated = GridOperator(torus8, lambda g: phase * op.apply(g), lambda g: np.conj(phase) * op.adjoint(g))
    a = opnorm_lower_bound(op, 1.2, 6.0, restarts=2, seed=5).value
    b = opnorm_lower_bound(rotated, 1.2, 6.0, restarts=2, seed=5).value
    assert a == pytest.approx(b, rel=1e-10)


def test_seed_reproducibility(torus8):
    op = laplace_resolvent_operator(torus8, 2.5 + 0.5j)
    a = opnorm_lower_bound(op, 1.2, 6.0, restarts=2, seed=11)
    b = opnorm_lower_bound(op, 1.2, 6.0, restarts=2, seed=11)
    assert a.value == b.value
    assert witness_checksum(a.witness) == witness_checksum(b.witness)


def test_exponent_validation(torus8):
    with pytest.raises(ValueError):
        opnorm_lower_bound(identity_operator(torus8), 1.0, 2.0)
    with pytest.raises(ValueError):
        opnorm_lower_bound(identity_operator(torus8), 2.0, np.inf)


@given(st.floats(1.1, 8), st.integers(0, 1000))
def test_dual_map_norms_and_pairs(r, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(TORUS.grid_shape) + 1j * rng.standard_normal(TORUS.grid_shape)
    w = dual_map(TORUS, v, r)
    assert grid_lp_norm(TORUS, w, holder_conjugate(r)) == pytest.approx(1.0, rel=1e-10)
    assert TORUS.inner(v, w).real == pytest.approx(grid_lp_norm(TORUS, v, r), rel=1e-10)
