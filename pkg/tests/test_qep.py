import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpresolvent.damped.qep import (
    QepError,
    assemble_qep,
    check_band_localization,
    check_strip_theorem,
    qep_eigenvalues,
    reflection_distance,
    write_spectrum_csv,
)
from lpresolvent.geometry import build_torus, constant_damping, cosine_damping, zonal_damping

TORUS = build_torus(3, 8)


def _sorted(values):
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def test_zero_damping_gives_square_roots():
    a = constant_damping(TORUS, 0.0)
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 1))
    lam = np.sum(assemble_qep(TORUS, a, 1).modes ** 2, axis=1)
    expected = np.concatenate([np.sqrt(lam), -np.sqrt(lam)])
    assert np.allclose(_sorted(spec.eigenvalues), _sorted(expected), atol=1e-7)
    assert np.any(np.isclose(spec.eigenvalues, 1.0)) and np.any(np.isclose(spec.eigenvalues, -1.0))


def test_constant_damping_pencil_and_oracle():
    c = 1.5
    a = constant_damping(TORUS, c)
    pencil = assemble_qep(TORUS, a, 2)
    assert np.allclose(pencil.A, c * np.eye(pencil.size))
    spec = qep_eigenvalues(pencil)
    lam = np.real(np.diag(pencil.L))
    roots = np.sqrt((lam - c**2).astype(complex))
    expected = np.concatenate([1j * c + roots, 1j * c - roots])
    assert np.allclose(_sorted(spec.eigenvalues), _sorted(expected), atol=1e-7)
    # zero mode: tau^2 - 2 i c tau = 0
    assert np.min(np.abs(spec.eigenvalues)) < 1e-8
    assert np.min(np.abs(spec.eigenvalues - 2j * c)) < 1e-8


def test_cosine_entries_are_half():
    a = cosine_damping(TORUS, 0.0, [((1, 0, 0), 1.0)])
    pencil = assemble_qep(TORUS, a, 2)
    diff = pencil.modes[:, None, :] - pencil.modes[None, :, :]
    neighbour = np.all(np.abs(diff) == [1, 0, 0], axis=-1)
    assert np.allclose(pencil.A[neighbour], 0.5)
    assert np.allclose(pencil.A[~neighbour], 0.0)
    assert np.allclose(pencil.A, pencil.A.conj().T)


def test_band_localization_for_zero_and_variable_damping():
    zero = constant_damping(TORUS, 0.0)
    assert check_band_localization(qep_eigenvalues(assemble_qep(TORUS, zero, 2)), zero).passed
    a = cosine_damping(TORUS, 2.0, [((1, 0, 0), 1.0), ((0, 1, 1), 0.5)])
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 2))
    rep = check_band_localization(spec, a)
    assert rep.passed and rep.checked == spec.trusted.sum() > 0


@given(st.floats(0, 4), st.floats(-2, 2), st.floats(-2, 2))
def test_spectrum_is_reflection_symmetric(c, b1, b2):
    a = cosine_damping(TORUS, c, [((1, 0, 0), b1), ((0, 1, 0), b2)])
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 1))
    # when c^2 hits an eigenvalue the pencil has a Jordan block and roots move by sqrt(eps)
    assert reflection_distance(spec.eigenvalues) <= 1e-6


def test_reflection_nondegenerate_damping_is_tight():
    a = cosine_damping(TORUS, 3.0, [((1, 0, 0), 1.0), ((0, 1, 0), 1.0), ((0, 0, 1), 1.0)])
    assert reflection_distance(qep_eigenvalues(assemble_qep(TORUS, a, 2)).eigenvalues) <= 1e-8


def test_reflection_distance_examples():
    assert reflection_distance([1 + 1j, -1 + 1j]) == 0
    assert reflection_distance([2j]) == 0
    assert reflection_distance([1 + 1j]) == pytest.approx(2)
    assert reflection_distance([]) == 0


def test_trust_diagnostics():
    a = cosine_damping(TORUS, 2.0, [((1, 0, 0), 1.0)])
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 2))
    assert spec.eigenvalues.size == 2 * 125
    assert np.all(spec.residuals[spec.trusted] <= 1e-8)
    assert np.all(spec.tail_mass[spec.trusted] <= 1e-4)


def test_strip_theorem():
    a = constant_damping(TORUS, 1.0)
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 2))
    rep = check_strip_theorem(spec, (1.0, 1.0), 0.1, (0.5, 3))
    assert rep.passed and not rep.vacuous and rep.checked > 0
    bad = check_strip_theorem(spec, (1.5, 2.0), 0.1, (0.5, 3))
    assert not bad.passed and bad.exceptions


def test_strip_theorem_vacuous_window(caplog):
    a = constant_damping(TORUS, 1.0)
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 1))
    rep = check_strip_theorem(spec, (1.0, 1.0), 0.1, (50, 60))
    assert rep.passed and rep.vacuous and rep.checked == 0
    assert "vacuous" in caplog.text
    with pytest.raises(QepError):
        check_strip_theorem(spec, (1.0, 1.0), 0.0, (0, 1))


def test_dense_limit_and_bad_truncation(sphere10):
    a = cosine_damping(TORUS, 1.0, [((1, 0, 0), 1.0)])
    with pytest.raises(QepError):
        assemble_qep(TORUS, a, 20)
    with pytest.raises(QepError):
        assemble_qep(sphere10, zonal_damping(sphere10, lambda th: 1 + 0 * th), 11)


def test_sphere_constant_damping(sphere10):
    c = 0.7
    a = zonal_damping(sphere10, lambda th: c + 0 * th)
    spec = qep_eigenvalues(assemble_qep(sphere10, a, 4))
    lam = sphere10.eigenvalues[:5]
    roots = np.sqrt((lam - c**2).astype(complex))
    expected = np.concatenate([1j * c + roots, 1j * c - roots])
    assert np.allclose(_sorted(spec.eigenvalues), _sorted(expected), atol=1e-7)


def test_spectrum_csv(tmp_path):
    a = constant_damping(TORUS, 1.0)
    spec = qep_eigenvalues(assemble_qep(TORUS, a, 1))
    path = write_spectrum_csv(spec, tmp_path / "qep.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "re_tau,im_tau,residual,trusted"
    assert len(lines) == 1 + spec.eigenvalues.size
