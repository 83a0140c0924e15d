import numpy as np
import pytest

from qbmgeo import ParamHamiltonian, random_hamiltonian


def random_instance(rng: np.random.Generator, max_qubits: int = 3) -> ParamHamiltonian:
    n = int(rng.integers(1, max_qubits + 1))
    max_terms = min(4, 4**n - 1)
    return random_hamiltonian(rng, n, int(rng.integers(1, max_terms + 1)))


@pytest.fixture(scope="session")
def instance_battery():
    """50 randomized instances (1-3 qubits, 1-4 terms, theta in [-1.5, 1.5])."""
    rng = np.random.default_rng(20260809)
    return [random_instance(rng) for _ in range(50)]
