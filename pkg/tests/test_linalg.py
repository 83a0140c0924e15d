import numpy as np
import pytest

from qbmgeo.linalg import (
    NumericConsistencyError,
    anticommutator,
    check_density_matrix,
    expm_hermitian,
    hermitize,
    pseudo_inverse,
    spectral,
    tensor_product,
)

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def test_spectral_diagonal():
    dec = spectral(np.diag([3.0, 1.0]).astype(complex))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 3.0])
    np.testing.assert_allclose(np.abs(dec.eigenvectors), np.fliplr(np.eye(2)), atol=1e-14)


def test_spectral_pauli_x():
    dec = spectral(X)
    np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0])
    for col, expected in zip(dec.eigenvectors.T, ([1, -1], [1, 1])):
        v = np.asarray(expected) / np.sqrt(2)
        assert min(np.max(np.abs(col - v)), np.max(np.abs(col + v))) < 1e-12


def test_spectral_reconstruction_random():
    rng = np.random.default_rng(0)
    h = random_hermitian(rng, 8)
    dec = spectral(h)
    assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-10
    assert np.max(np.abs(dec.eigenvectors.conj().T @ dec.eigenvectors - np.eye(8))) <= 1e-10
    assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_expm_zero_is_identity():
    np.testing.assert_allclose(expm_hermitian(np.zeros((4, 4))), np.eye(4), atol=1e-14)


def test_expm_log2_z():
    out = expm_hermitian(np.log(2) * Z, scale=-1.0)
    np.testing.assert_allclose(out, np.diag([0.5, 2.0]), atol=1e-14)


def test_expm_matches_taylor_series():
    # 30-term Taylor series as an independent oracle
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 4)
    expected = np.zeros((4, 4), dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(30):
        expected += term
        term = term @ h / (k + 1)
    assert np.max(np.abs(expm_hermitian(h) - expected)) <= 1e-9


def test_expm_semigroup():
    rng = np.random.default_rng(2)
    h = random_hermitian(rng, 4)
    lhs = expm_hermitian(h, 0.3) @ expm_hermitian(h, 0.9)
    np.testing.assert_allclose(lhs, expm_hermitian(h, 1.2), atol=1e-9)


def test_expm_overflow_guard():
    with pytest.raises(ValueError, match="rescale"):
        expm_hermitian(1000.0 * Z)


def test_anticommutator_paulis():
    np.testing.assert_allclose(anticommutator(Z, X), np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(anticommutator(Z, Z), 2 * np.eye(2), atol=1e-15)


def test_anticommutator_identity():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    np.testing.assert_allclose(anticommutator(a, np.eye(3)), 2 * a, atol=1e-14)


def test_anticommutator_dim_mismatch():
    with pytest.raises(ValueError):
        anticommutator(np.eye(2), np.eye(3))


def test_pseudo_inverse_rank_deficient():
    np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-14)


def test_pseudo_inverse_identity():
    np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-14)


def test_pseudo_inverse_spd():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(4, 4))
    m = a @ a.T + 0.5 * np.eye(4)
    np.testing.assert_allclose(m @ pseudo_inverse(m), np.eye(4), atol=1e-8)


def test_pseudo_inverse_involution():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4))
    m = (a + a.T) / 2 + 3 * np.eye(4)
    again = pseudo_inverse(pseudo_inverse(m))
    assert np.max(np.abs(again - m)) / np.max(np.abs(m)) <= 1e-8


def test_pseudo_inverse_rejects_asymmetric():
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_tensor_product_identity():
    np.testing.assert_allclose(tensor_product(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_product_zx_blocks():
    zx = tensor_product(Z, X)
    np.testing.assert_allclose(zx[:2, :2], X)
    np.testing.assert_allclose(zx[2:, 2:], -X)
    np.testing.assert_allclose(zx[:2, 2:], np.zeros((2, 2)))


def test_tensor_product_trace_factorizes():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    np.testing.assert_allclose(np.trace(tensor_product(a, b)), np.trace(a) * np.trace(b))


def test_tensor_product_mixed_product():
    rng = np.random.default_rng(7)
    mats = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    a, b, c, d = mats
    lhs = tensor_product(a, b) @ tensor_product(c, d)
    assert np.max(np.abs(lhs - tensor_product(a @ c, b @ d))) <= 1e-10


def test_hermitize_rejects_gross_violation():
    with pytest.raises(ValueError, match="not Hermitian"):
        hermitize(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitize_cleans_roundoff():
    m = Z + 1e-14 * np.array([[0, 1j], [0, 0]])
    out = hermitize(m)
    np.testing.assert_allclose(out, out.conj().T)


def test_check_density_matrix():
    check_density_matrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(2))
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.5, -0.5]))


def test_eigensolver_error_type_exists():
    assert issubclass(NumericConsistencyError, RuntimeError)
