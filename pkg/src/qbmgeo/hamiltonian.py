"""Pauli-string term sets and assembly of parameterized Hamiltonians.

A model Hamiltonian is a fixed list of Pauli strings G_j with a real
coefficient vector theta: G(theta) = sum_j theta_j G_j. The leftmost label
character is the most significant qubit, matching the Kronecker-product
indexing in :mod:`qbmgeo.linalg`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_QUBITS = 10

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@lru_cache(maxsize=4096)
def pauli_to_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; leftmost character = most significant qubit."""
    if not label:
        raise ValueError("empty Pauli label")
    if len(label) > MAX_QUBITS:
        raise ValueError(f"Pauli label longer than {MAX_QUBITS} qubits: {label!r}")
    out = np.array([[1.0 + 0j]])
    for ch in label:
        if ch not in PAULI_1Q:
            raise ValueError(f"invalid Pauli character {ch!r} in {label!r}")
        out = np.kron(out, PAULI_1Q[ch])
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ParamHamiltonian:
    """Ordered Pauli-string terms with a matching real coefficient vector."""

    terms: tuple[str, ...]
    theta: np.ndarray = field(repr=False)

    def __init__(self, terms, theta):
        terms = tuple(str(t) for t in terms)
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).copy()
        if not terms:
            raise ValueError("need at least one term")
        if len(set(terms)) != len(terms):
            raise ValueError("term labels must be pairwise distinct")
        n = len(terms[0])
        if any(len(t) != n for t in terms):
            raise ValueError("all terms must act on the same number of qubits")
        if theta.shape != (len(terms),):
            raise ValueError(f"theta has length {theta.size}, expected {len(terms)}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        for t in terms:
            pauli_to_matrix(t)  # validates characters and the qubit cap
        theta.setflags(write=False)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "theta", theta)

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0])

    @property
    def n_params(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def term_matrices(self) -> list[np.ndarray]:
        return [pauli_to_matrix(t) for t in self.terms]

    def with_theta(self, theta) -> "ParamHamiltonian":
        return ParamHamiltonian(self.terms, theta)

    def to_json_dict(self) -> dict:
        return {
            "qubits": self.n_qubits,
            "terms": list(self.terms),
            "theta": [float(x) for x in self.theta],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "ParamHamiltonian":
        if not isinstance(data, dict):
            raise ValueError("hamiltonian block must be a JSON object")
        unknown = set(data) - {"qubits", "terms", "theta"}
        if unknown:
            raise ValueError(f"unknown hamiltonian keys: {sorted(unknown)}")
        for key in ("qubits", "terms", "theta"):
            if key not in data:
                raise ValueError(f"hamiltonian block missing key {key!r}")
        h = ParamHamiltonian(data["terms"], data["theta"])
        if int(data["qubits"]) != h.n_qubits:
            raise ValueError(
                f"qubits field {data['qubits']} does not match term length {h.n_qubits}"
            )
        return h


def assemble(h: ParamHamiltonian) -> np.ndarray:
    """G(theta) = sum_j theta_j G_j."""
    out = np.zeros((h.dim, h.dim), dtype=complex)
    for coeff, mat in zip(h.theta, h.term_matrices()):
        out += coeff * mat
    return out


@dataclass(frozen=True)
class TermDiagnostics:
    """validate_terms output: per-term unitary-Hermitian checks plus commutation data."""

    hermitian_ok: tuple[bool, ...]
    unitary_ok: tuple[bool, ...]
    commuting_pairs: tuple[tuple[int, int], ...]
    all_commute: bool

    @property
    def all_valid(self) -> bool:
        return all(self.hermitian_ok) and all(self.unitary_ok)


def validate_terms(h: ParamHamiltonian, tol: float = 1e-12) -> TermDiagnostics:
    """Check G_j = G_j† and G_j² = I for each term, and report which pairs commute."""
    mats = h.term_matrices()
    eye = np.eye(h.dim)
    herm, unit = [], []
    for m in mats:
        herm.append(bool(np.max(np.abs(m - m.conj().T)) <= tol))
        unit.append(bool(np.max(np.abs(m @ m - eye)) <= tol))
    commuting = []
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            if np.max(np.abs(mats[i] @ mats[j] - mats[j] @ mats[i])) <= tol:
                commuting.append((i, j))
    n_pairs = len(mats) * (len(mats) - 1) // 2
    return TermDiagnostics(
        hermitian_ok=tuple(herm),
        unitary_ok=tuple(unit),
        commuting_pairs=tuple(commuting),
        all_commute=len(commuting) == n_pairs,
    )


def random_hamiltonian(rng: np.random.Generator, n_qubits: int, n_terms: int,
                       theta_scale: float = 1.5) -> ParamHamiltonian:
    """Random instance: distinct non-identity Pauli strings with uniform coefficients."""
    n_labels = 4 ** n_qubits - 1
    if n_terms > n_labels:
        raise ValueError(f"only {n_labels} distinct non-identity terms exist on {n_qubits} qubits")
    alphabet = "IXYZ"
    picks = 1 + rng.choice(n_labels, size=n_terms, replace=False)
    labels = []
    for code in picks:
        chars = []
        for _ in range(n_qubits):
            chars.append(alphabet[code % 4])
            code //= 4
        labels.append("".join(reversed(chars)))
    theta = rng.uniform(-theta_scale, theta_scale, size=n_terms)
    return ParamHamiltonian(labels, theta)


def pauli_decompose(m: np.ndarray, n_qubits: int, tol: float = 1e-12) -> tuple[list[str], np.ndarray]:
    """Expand a Hermitian matrix in the n-qubit Pauli basis.

    Returns the labels and real coefficients with |c| > tol. Capped at 6 qubits
    (4^n basis elements); shot-mode training needs this, exact paths do not.
    """
    if n_qubits > 6:
        raise ValueError("pauli_decompose is capped at 6 qubits")
    dim = 2 ** n_qubits
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"matrix shape {m.shape} does not match {n_qubits} qubits")
    labels, coeffs = [], []
    alphabet = "IXYZ"
    for idx in range(4 ** n_qubits):
        chars = []
        k = idx
        for _ in range(n_qubits):
            chars.append(alphabet[k % 4])
            k //= 4
        label = "".join(reversed(chars))
        c = complex(np.trace(pauli_to_matrix(label) @ m)) / dim
        if abs(c.imag) > 1e-9:
            raise ValueError("matrix is not Hermitian: complex Pauli coefficient")
        if abs(c.real) > tol:
            labels.append(label)
            coeffs.append(c.real)
    return labels, np.asarray(coeffs, dtype=float)
