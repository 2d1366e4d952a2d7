import numpy as np
import pytest

from d2lab.device import load_device
from d2lab.noise import NoiseModel
from d2lab.paulis import GATE_KINDS, CliffordGate, PauliString


@pytest.fixture(scope="session")
def device():
    return load_device()


@pytest.fixture(scope="session")
def device_noise(device):
    return device.noise_model()


@pytest.fixture
def noiseless4():
    return NoiseModel.noiseless(4)


@pytest.fixture
def noiseless8():
    return NoiseModel.noiseless(8)


def random_pauli(rng, n, with_phase=True):
    chars = "".join(rng.choice(list("IXYZ")) for _ in range(n))
    phase = rng.choice(["", "+i", "-", "-i"]) if with_phase else ""
    return PauliString.from_label(phase + chars)


def random_gate(rng, n):
    kind = rng.choice(GATE_KINDS)
    if kind in ("CZ", "CNOT"):
        a, b = rng.choice(n, size=2, replace=False)
        return CliffordGate(kind, (int(a), int(b)))
    return CliffordGate(kind, (int(rng.integers(n)),))


def random_density(rng, d):
    """Random full-rank density matrix (Wishart construction)."""
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)
