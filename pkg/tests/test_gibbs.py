import numpy as np
import pytest

from qbmgeo import (
    ParamHamiltonian,
    apply_channel,
    assemble,
    expectation,
    pauli_to_matrix,
    relative_entropy,
    thermal_derivative,
    thermal_state,
    thermal_state_from_matrix,
)
from qbmgeo.linalg import NumericConsistencyError, tensor_product
from conftest import random_instance

Z = pauli_to_matrix("Z")
X = pauli_to_matrix("X")


def finite_difference_rho(h, j, step=1e-5):
    up = h.theta.copy()
    up[j] += step
    down = h.theta.copy()
    down[j] -= step
    return (thermal_state(h.with_theta(up)).rho - thermal_state(h.with_theta(down)).rho) / (2 * step)


def test_zero_theta_is_maximally_mixed():
    for terms, n in ((["Z"], 1), (["ZI", "IX"], 2)):
        ts = thermal_state(ParamHamiltonian(terms, np.zeros(len(terms))))
        np.testing.assert_allclose(ts.rho, np.eye(2**n) / 2**n, atol=1e-14)
        assert abs(ts.log_partition - n * np.log(2)) <= 1e-12


def test_single_z_worked_values():
    ts = thermal_state(ParamHamiltonian(["Z"], [np.log(2)]))
    np.testing.assert_allclose(ts.rho, np.diag([0.2, 0.8]), atol=1e-14)
    assert abs(np.exp(ts.log_partition) - 2.5) <= 1e-12


def test_two_term_spectrum():
    ts = thermal_state(ParamHamiltonian(["Z", "X"], [1.0, 1.0]))
    s = np.sqrt(2)
    expected = np.sort(np.array([np.exp(s), np.exp(-s)]) / (2 * np.cosh(s)))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(ts.rho)), expected, atol=1e-12)


def test_state_invariants():
    rng = np.random.default_rng(0)
    for _ in range(10):
        h = random_instance(rng)
        ts = thermal_state(h)
        assert abs(np.trace(ts.rho) - 1.0) <= 1e-10
        assert np.linalg.eigvalsh(ts.rho)[0] > 0
        v, lam = ts.g_eigenvectors, ts.rho_eigenvalues
        np.testing.assert_allclose((v * lam) @ v.conj().T, ts.rho, atol=1e-10)


def test_overflow_guard():
    with pytest.raises(ValueError, match="rescale"):
        thermal_state(ParamHamiltonian(["Z"], [800.0]))


def test_expectation_examples():
    ts = thermal_state(ParamHamiltonian(["Z"], [np.log(2)]))
    assert abs(expectation(np.eye(2), ts.rho) - 1.0) <= 1e-12
    assert abs(expectation(Z, ts.rho) - (-0.6)) <= 1e-12
    assert abs(expectation(X, ts.rho)) <= 1e-12


def test_expectation_rejects_imaginary_residue():
    skew = 1j * np.diag([1.0, 0.0])  # not Hermitian: trace against rho is imaginary
    with pytest.raises(NumericConsistencyError):
        expectation(skew, np.diag([0.3, 0.7]).astype(complex))


def test_derivative_at_origin():
    d = thermal_derivative(ParamHamiltonian(["Z"], [0.0]), 0)
    np.testing.assert_allclose(d, -Z / 2, atol=1e-12)


def test_derivative_traceless_and_hermitian():
    rng = np.random.default_rng(1)
    for _ in range(8):
        h = random_instance(rng)
        ts = thermal_state(h)
        for j in range(h.n_params):
            d = thermal_derivative(h, j, ts)
            assert abs(np.trace(d)) <= 1e-10
            np.testing.assert_allclose(d, d.conj().T, atol=1e-12)


def test_derivative_matches_finite_differences():
    h = ParamHamiltonian(["Z", "X"], [1.0, 0.0])
    assert np.max(np.abs(thermal_derivative(h, 1) - finite_difference_rho(h, 1))) <= 1e-7
    rng = np.random.default_rng(2)
    for _ in range(6):
        inst = random_instance(rng)
        j = int(rng.integers(inst.n_params))
        dev = np.max(np.abs(thermal_derivative(inst, j) - finite_difference_rho(inst, j)))
        assert dev <= 1e-7


def test_derivative_equals_channel_identity():
    # independent route: -1/2 {Phi(G_j), rho} + rho <G_j>
    rng = np.random.default_rng(3)
    for _ in range(6):
        h = random_instance(rng)
        ts = thermal_state(h)
        for j, g in enumerate(h.term_matrices()):
            filtered = apply_channel(ts, g)
            mean = expectation(g, ts.rho)
            alt = -0.5 * (filtered @ ts.rho + ts.rho @ filtered) + mean * ts.rho
            assert np.max(np.abs(thermal_derivative(h, j, ts) - alt)) <= 1e-12


def test_channel_preserves_term_means():
    rng = np.random.default_rng(4)
    for _ in range(6):
        h = random_instance(rng)
        ts = thermal_state(h)
        for g in h.term_matrices():
            assert abs(expectation(apply_channel(ts, g), ts.rho) - expectation(g, ts.rho)) <= 1e-10


def test_tensor_doubling():
    h = ParamHamiltonian(["Z", "X"], [0.6, -0.4])
    ts = thermal_state(h)
    g = assemble(h)
    eye = np.eye(2)
    doubled = thermal_state_from_matrix(tensor_product(g, eye) + tensor_product(eye, g))
    assert np.max(np.abs(doubled.rho - tensor_product(ts.rho, ts.rho))) <= 1e-10


def test_relative_entropy_against_direct_formula():
    rng = np.random.default_rng(5)
    h = ParamHamiltonian(["Z", "X"], [0.3, -0.8])
    ts = thermal_state(h)
    omega = thermal_state(ParamHamiltonian(["Z", "X"], [0.9, 0.2])).rho
    # direct Tr[omega (ln omega - ln rho)] via eigendecompositions
    def logm(m):
        w, v = np.linalg.eigh(m)
        return (v * np.log(w)) @ v.conj().T
    direct = float(np.real(np.trace(omega @ (logm(omega) - logm(ts.rho)))))
    assert abs(relative_entropy(omega, ts, h) - direct) <= 1e-10
    assert abs(relative_entropy(ts.rho, ts, h)) <= 1e-10
    assert relative_entropy(omega, ts, h) >= 0
