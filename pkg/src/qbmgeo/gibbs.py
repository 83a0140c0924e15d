"""Thermal (Gibbs) states rho(theta) = exp(-G(theta))/Z(theta) and their derivatives.

Inverse temperature is absorbed into theta. The exact parameter derivative of
rho is computed with the divided-difference (Daleckii-Krein) rule for the
matrix exponential in the G(theta) eigenbasis; it doubles as the independent
oracle for the closed-form information-matrix paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .hamiltonian import ParamHamiltonian, assemble
from .linalg import (
    EXP_OVERFLOW_LIMIT,
    NumericConsistencyError,
    check_density_matrix,
    hermitize,
    spectral,
)


@dataclass(frozen=True)
class ThermalState:
    """rho(theta) together with the eigensystem of G(theta) and ln Z(theta).

    `g_eigenvalues` (mu, ascending) and `g_eigenvectors` (columns) diagonalize
    G(theta); `rho_eigenvalues` are exp(-mu)/Z in the same column order, so the
    state is rho = V diag(rho_eigenvalues) V†.
    """

    rho: np.ndarray = field(repr=False)
    g_eigenvalues: np.ndarray = field(repr=False)
    g_eigenvectors: np.ndarray = field(repr=False)
    log_partition: float
    theta: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def rho_eigenvalues(self) -> np.ndarray:
        return np.exp(-self.g_eigenvalues - self.log_partition)

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        v = self.g_eigenvectors
        return v.conj().T @ op @ v

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        v = self.g_eigenvectors
        return v @ op @ v.conj().T


def thermal_state_from_matrix(g: np.ndarray, theta=None) -> ThermalState:
    """Thermal state of an explicit Hermitian generator matrix."""
    dec = spectral(g)
    mu = dec.eigenvalues
    if mu.size and float(np.max(np.abs(mu))) > EXP_OVERFLOW_LIMIT:
        raise ValueError(
            f"max |eigenvalue| of G(theta) is {np.max(np.abs(mu)):.1f} > "
            f"{EXP_OVERFLOW_LIMIT:.0f}; rescale the coefficients"
        )
    log_z = float(logsumexp(-mu))
    lam = np.exp(-mu - log_z)
    v = dec.eigenvectors
    rho = check_density_matrix((v * lam) @ v.conj().T)
    theta = np.asarray(theta, dtype=float) if theta is not None else np.zeros(0)
    return ThermalState(
        rho=rho,
        g_eigenvalues=mu,
        g_eigenvectors=v,
        log_partition=log_z,
        theta=theta,
    )


def thermal_state(h: ParamHamiltonian) -> ThermalState:
    """rho(theta) for a parameterized Pauli Hamiltonian."""
    return thermal_state_from_matrix(assemble(h), theta=h.theta)


def expectation(obs: np.ndarray, rho: np.ndarray) -> float:
    """Tr[obs · rho] with the imaginary residue checked (<= 1e-10), then dropped."""
    obs = np.asarray(obs, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if obs.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {obs.shape} vs {rho.shape}")
    t = complex(np.trace(obs @ rho))
    if abs(t.imag) > 1e-10 * (1.0 + abs(t)):
        raise NumericConsistencyError(f"expectation has imaginary residue {t.imag:.3e}")
    return t.real


def _sinhc(x: np.ndarray) -> np.ndarray:
    # sinh(x)/x, series below 1e-6 to avoid 0/0
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def _drho_eigenbasis(ts: ThermalState, g_term_eig: np.ndarray) -> np.ndarray:
    """d rho / d theta_j expressed in the G(theta) eigenbasis.

    Divided differences of exp(-x) across the spectrum give the derivative of
    exp(-G); the
    normalization contributes +rho <G_j>.
    """
    mu = ts.g_eigenvalues
    lam = ts.rho_eigenvalues
    mid = (mu[:, None] + mu[None, :]) / 2.0
    half_gap = (mu[:, None] - mu[None, :]) / 2.0
    # (exp(-mu_k) - exp(-mu_l)) / (mu_k - mu_l), normalized by Z
    dd = -np.exp(-mid - ts.log_partition) * _sinhc(half_gap)
    mean = float(np.real(np.sum(np.diagonal(g_term_eig) * lam)))
    return g_term_eig * dd + mean * np.diag(lam.astype(complex))


def thermal_derivative(h: ParamHamiltonian, j: int, ts: ThermalState | None = None) -> np.ndarray:
    """Exact d rho(theta) / d theta_j as a Hermitian, traceless matrix."""
    if not 0 <= j < h.n_params:
        raise ValueError(f"term index {j} out of range [0, {h.n_params})")
    if ts is None:
        ts = thermal_state(h)
    g_eig = ts.to_eigenbasis(h.term_matrices()[j])
    out = ts.from_eigenbasis(_drho_eigenbasis(ts, g_eig))
    out = hermitize(out, tol=1e-10 * (1.0 + float(np.max(np.abs(out)))))
    tr = abs(complex(np.trace(out)))
    if tr > 1e-10:
        raise NumericConsistencyError(f"derivative trace {tr:.3e} is not zero")
    return out


def relative_entropy(omega: np.ndarray, ts: ThermalState, h: ParamHamiltonian) -> float:
    """D(omega || rho(theta)) = Tr[omega ln omega] + Tr[omega G(theta)] + ln Z(theta).

    ln rho = -G - ln Z exactly for this family, so only the entropy of omega
    needs an eigendecomposition; eigenvalues <= 1e-15 contribute 0 (p ln p -> 0).
    """
    omega = check_density_matrix(omega)
    p = np.linalg.eigvalsh(omega)
    p = p[p > 1e-15]
    entropy_term = float(np.sum(p * np.log(p)))
    return entropy_term + expectation(assemble(h), omega) + ts.log_partition
