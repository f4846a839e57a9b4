import numpy as np
import pytest

from qaead import simulator as sim


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_circuit(rng, n_qubits, n_layers, batch=None):
    """Random rotation+CNOT circuit in the package's gate vocabulary."""
    gates = []
    for _ in range(n_layers):
        for q in range(n_qubits):
            shape = (3,) if batch is None else (batch, 3)
            angles = rng.uniform(-np.pi, np.pi, size=shape)
            gates.append(sim.GateOp(sim.ROTATION, q, angles=angles))
        if n_qubits > 1:
            for q in range(n_qubits - 1):
                gates.append(sim.cnot(q, q + 1))
    return gates


@pytest.fixture
def make_random_circuit():
    return random_circuit
