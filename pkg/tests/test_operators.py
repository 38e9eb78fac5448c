import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpresolvent.fields import SpectralField, mode_field, random_field
from lpresolvent.geometry import build_torus, constant_damping, cosine_damping, zonal_damping
from lpresolvent.resolvent.operators import (
    DampedFactorization,
    NearEigenvalueError,
    SingularityError,
    damped_apply,
    damped_resolve,
    damped_resolvent_operator,
    galerkin_damping_matrix,
    l2_resolvent_norm_exact,
    laplace_apply,
    laplace_resolve,
    laplace_resolvent_operator,
)

TORUS = build_torus(3, 8)
DAMP8 = cosine_damping(TORUS, 3.0, [((1, 0, 0), 1.0), ((0, 1, 0), 1.0), ((0, 0, 1), 1.0)])


def _norm(u):
    return np.linalg.norm(u.coeffs)


def test_laplace_apply_on_mode(torus8):
    u = mode_field(torus8, (1, 0, 0))
    z = 2 + 0.5j
    out = laplace_apply(torus8, z, u)
    assert np.allclose(out.samples, (1 - z**2) * u.samples)


def test_laplace_resolve_on_mode(torus8):
    u = mode_field(torus8, (1, 1, 0))
    z = 1 + 0.5j
    assert np.allclose(laplace_resolve(torus8, z, u).samples, u.samples / (2 - z**2))


def test_laplace_resolve_singular(torus8):
    with pytest.raises(SingularityError):
        laplace_resolve(torus8, 1.0, mode_field(torus8, (1, 0, 0)))
    with pytest.raises(SingularityError):
        l2_resolvent_norm_exact(torus8, np.sqrt(2.0))


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 8), st.floats(0.05, 3))
def test_laplace_inverse_pair(seed, x, y):
    z = complex(x, y)
    f = random_field(TORUS, np.random.default_rng(seed))
    back = laplace_apply(TORUS, z, laplace_resolve(TORUS, z, f))
    assert _norm(back - f) <= 1e-12 * _norm(f)


def test_laplace_exact_l2_norm(torus8):
    z = 2.2 + 0.3j
    expected = 1 / min(abs(lam - z**2) for lam in np.unique(torus8.eigenvalues))
    assert l2_resolvent_norm_exact(torus8, z) == pytest.approx(expected)


def test_damped_reduces_to_laplace_for_zero_damping(torus8, rng):
    a = constant_damping(torus8, 0.0)
    tau = 2.3 + 0.4j
    f = random_field(torus8, rng)
    u = damped_resolve(torus8, a, tau, f)
    assert _norm(u - laplace_resolve(torus8, tau, f)) <= 1e-10 * _norm(u)


def test_damped_constant_mode_example(torus8):
    # constant damping c on the zero mode: P(tau) 1 = (2 i tau c - tau^2) 1
    c, tau = 2.0, 1 + 1j
    a = constant_damping(torus8, c)
    one = mode_field(torus8, (0, 0, 0))
    out = damped_apply(torus8, a, tau, one)
    assert np.allclose(out.samples, (2j * tau * c - tau**2) * one.samples)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(-6, 6), st.floats(6.5, 10) | st.floats(-4, -0.5))
def test_damped_inverse_pair_krylov(seed, x, y):
    # outside the damping strip GMRES with the diagonal preconditioner converges quickly
    tau = complex(x, y)
    f = random_field(TORUS, np.random.default_rng(seed))
    u = damped_resolve(TORUS, DAMP8, tau, f)
    assert _norm(damped_apply(TORUS, DAMP8, tau, u) - f) <= 1e-9 * _norm(f)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(-6, 6), st.floats(-4, 10))
def test_damped_inverse_pair_direct(seed, x, y):
    tau = complex(x, y)
    f = random_field(TORUS, np.random.default_rng(seed))
    try:
        u = DampedFactorization(TORUS, DAMP8, tau).solve(f)
    except NearEigenvalueError:
        return
    assert _norm(damped_apply(TORUS, DAMP8, tau, u) - f) <= 1e-9 * _norm(f)


@given(st.integers(0, 2**32 - 1), st.floats(-6, 6), st.floats(-4, 8))
def test_conjugation_symmetry(seed, x, y):
    tau = complex(x, y)
    u = random_field(TORUS, np.random.default_rng(seed))
    lhs = damped_apply(TORUS, DAMP8, tau, u).conj().coeffs[TORUS.band_mask]
    rhs = damped_apply(TORUS, DAMP8, -np.conj(tau), u.conj()).coeffs[TORUS.band_mask]
    # the Nyquist output row has no mirror partner, so compare on the symmetric band
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * (1 + abs(tau) ** 2) * _norm(u)


def test_galerkin_matrix_matches_multiply(torus8, rng):
    A = galerkin_damping_matrix(torus8, DAMP8)
    c = rng.standard_normal(torus8.coef_shape) + 1j * rng.standard_normal(torus8.coef_shape)
    ref = torus8.multiply(DAMP8, c)
    assert np.allclose((A @ c.ravel()).reshape(torus8.coef_shape), ref, atol=1e-13)


def test_galerkin_matrix_sphere(sphere10, rng):
    a = zonal_damping(sphere10, lambda th: 1.0 + np.cos(th) ** 2)
    A = galerkin_damping_matrix(sphere10, a)
    c = rng.standard_normal(sphere10.coef_shape)
    assert np.allclose(A @ c, sphere10.multiply(a, c), atol=1e-13)
    assert np.allclose(A, A.conj().T, atol=1e-13)


def test_direct_matches_krylov(torus8, rng):
    tau = 2.5 + 3.0j
    f = random_field(torus8, rng)
    direct = DampedFactorization(torus8, DAMP8, tau).solve(f)
    krylov = damped_resolve(torus8, DAMP8, tau, f)
    assert _norm(direct - krylov) <= 1e-9 * _norm(direct)


def test_resolvent_operator_adjoint(torus8, rng):
    tau = 1.7 + 0.8j
    for method in ("direct", "krylov"):
        op = damped_resolvent_operator(torus8, DAMP8, tau, method=method)
        f = rng.standard_normal(torus8.grid_shape) + 1j * rng.standard_normal(torus8.grid_shape)
        g = rng.standard_normal(torus8.grid_shape) + 1j * rng.standard_normal(torus8.grid_shape)
        lhs = torus8.inner(op.apply(f), g)
        rhs = torus8.inner(f, op.adjoint(g))
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_laplace_operator_adjoint(torus8, rng):
    op = laplace_resolvent_operator(torus8, 3 + 0.5j)
    f = rng.standard_normal(torus8.grid_shape)
    g = rng.standard_normal(torus8.grid_shape)
    assert torus8.inner(op.apply(f), g) == pytest.approx(torus8.inner(f, op.adjoint(g)), rel=1e-10)


def test_near_eigenvalue_guard(torus8, rng):
    f = random_field(torus8, rng)
    with pytest.raises(NearEigenvalueError):
        damped_resolve(torus8, DAMP8, 1 + 1j, f, spectrum=[1 + 1j])
    with pytest.raises(NearEigenvalueError):
        damped_resolvent_operator(torus8, DAMP8, 1 + 1j, spectrum=[1 + 1j])
    a = constant_damping(torus8, 1.0)
    # zero mode eigenvalue of the constant pencil sits at 2ic
    with pytest.raises(NearEigenvalueError):
        damped_resolve(torus8, a, 2j, f)


def test_unknown_method(torus8):
    with pytest.raises(ValueError):
        damped_resolvent_operator(torus8, DAMP8, 1 + 1j, method="magic")


def test_sphere_damped_resolve(sphere10, rng):
    a = zonal_damping(sphere10, lambda th: 1.0 + np.cos(th))
    f = random_field(sphere10, rng)
    tau = 3 + 0.5j
    u = damped_resolve(sphere10, a, tau, f)
    assert _norm(damped_apply(sphere10, a, tau, u) - f) <= 1e-9 * _norm(f)
    direct = DampedFactorization(sphere10, a, tau).solve(f)
    assert _norm(direct - u) <= 1e-8 * _norm(u)
    assert isinstance(u, SpectralField)
