from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbell.bell import bell_operator
from qbell.errors import ContractError, SizeError
from qbell.numerics import (
    EIG_RESIDUAL_TOL,
    ORTHONORMAL_TOL,
    TRACE_TOL,
    check_density_matrix,
    eig_hermitian,
    random_density_matrix,
    tensor_product,
)


def _random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_tensor_identity_and_diagonal():
    assert np.array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    out = tensor_product(np.diag([1, 2]), np.diag([3, 4]))
    assert np.array_equal(out, np.diag([3, 4, 6, 8]))


def test_tensor_identity_filter_on_product_space():
    o = np.eye(5)
    assert np.array_equal(tensor_product(o, o), np.eye(25))


def test_tensor_shape_and_cap():
    a = np.ones((2, 3))
    b = np.ones((4, 5))
    assert tensor_product(a, b).shape == (8, 15)
    with pytest.raises(SizeError):
        tensor_product(np.eye(17), np.eye(16))


def test_eig_diagonal_sorted_descending():
    dec = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [3, 2, 1])


def test_eig_rejects_non_hermitian_with_asymmetry():
    m = np.array([[0, 1], [0, 0]], dtype=float)
    with pytest.raises(ContractError, match="1.000e\\+00"):
        eig_hermitian(m)


def test_eig_returns_readonly_arrays():
    dec = eig_hermitian(np.eye(3))
    with pytest.raises(ValueError):
        dec.eigenvalues[0] = 5


@pytest.mark.parametrize("n", [1, 2, 7, 64, 256])
def test_reconstruction_and_trace(n):
    rng = np.random.default_rng(n)
    m = _random_hermitian(n, rng)
    dec = eig_hermitian(m)
    assert np.max(np.abs(dec.reconstruct() - m)) < EIG_RESIDUAL_TOL
    v = dec.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) < ORTHONORMAL_TOL
    assert abs(np.trace(m).real - dec.eigenvalues.sum()) < TRACE_TOL * max(1.0, n)
    assert np.all(np.diff(dec.eigenvalues) <= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_eigenpair_residual_property(n, seed):
    m = _random_hermitian(n, np.random.default_rng(seed))
    dec = eig_hermitian(m)
    resid = m @ dec.eigenvectors - dec.eigenvectors * dec.eigenvalues
    assert np.max(np.abs(resid)) < EIG_RESIDUAL_TOL * max(1.0, np.max(np.abs(m)))


def test_real_symmetric_gives_real_eigenvectors_up_to_phase():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(9, 9))
    dec = eig_hermitian(a + a.T)
    for k in range(9):
        v = dec.eigenvectors[:, k]
        phase = v[np.argmax(np.abs(v))]
        w = v * abs(phase) / phase
        assert np.max(np.abs(w.imag)) < 1e-10


def test_bell_operator_d2_top_eigenvalue():
    dec = eig_hermitian(bell_operator(2).matrix)
    assert abs(dec.eigenvalues[0] - 2 * np.sqrt(2)) < 1e-12


def test_s11_top_five_and_degenerate_projectors():
    dec = eig_hermitian(bell_operator(11).matrix)
    assert np.allclose(dec.eigenvalues[:5], [3.1555, 2.4107, 2.4107, 1.9709, 1.9709], atol=5e-5)
    # a degenerate pair is compared through the projector, which is basis independent
    proj = dec.projector([1, 2])
    idx_up = [n * 11 + n + 1 for n in range(10)]
    idx_dn = [(n + 1) * 11 + n for n in range(10)]
    support = idx_up + idx_dn
    off = np.ones(121, dtype=bool)
    off[support] = False
    assert np.max(np.abs(proj[off][:, off])) < 1e-10
    assert abs(np.trace(proj).real - 2) < 1e-10
    # a rotated basis of the same eigenspace gives the same projector
    c, s = np.cos(0.3), np.sin(0.3)
    rot = dec.eigenvectors[:, [1, 2]] @ np.array([[c, -s], [s, c]])
    assert np.max(np.abs(rot @ rot.conj().T - proj)) < 1e-12


def test_check_density_matrix_names_property():
    rng = np.random.default_rng(0)
    rho = random_density_matrix(4, rng)
    check_density_matrix(rho, 4)
    with pytest.raises(ContractError, match="trace"):
        check_density_matrix(2 * rho)
    with pytest.raises(ContractError, match="Hermitian"):
        check_density_matrix(rho + np.triu(np.ones((4, 4)), 1) * 1e-3)
    with pytest.raises(ContractError, match="positive"):
        check_density_matrix(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ContractError, match="dimension"):
        check_density_matrix(rho, 9)
