import numpy as np
import pytest

from loccfisher import UnitaryGeneratorFamily
from loccfisher.tensor import HilbertLayout, kron

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]])
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_traceless_hermitian(d, rng):
    h = random_hermitian(d, rng)
    return h - np.trace(h) / d * np.eye(d)


def random_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d, rng, rank=None):
    rank = rank or d
    a = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure_family(dims, rng):
    layout = HilbertLayout(dims)
    d = layout.total
    return UnitaryGeneratorFamily(layout, random_state(d, rng),
                                  random_hermitian(d, rng))


def ghz_family(n):
    """GHZ phase family on n qubits (n = 1 allowed for the plain phase qubit)."""
    layout = HilbertLayout((2,) * n)
    psi_in = np.zeros(2 ** n, dtype=complex)
    psi_in[0] = psi_in[-1] = 1 / np.sqrt(2)
    gen = sum(kron([PAULI_Z if i == j else I2 for i in range(n)])
              for j in range(n)) / 2
    return UnitaryGeneratorFamily(layout, psi_in, gen)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
