"""Parity checks between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from qaead import backends

BACKENDS = backends.available_backends()


def random_state(rng, batch, dim):
    amps = rng.normal(size=(batch, dim)) + 1j * rng.normal(size=(batch, dim))
    amps /= np.linalg.norm(amps, axis=1, keepdims=True)
    return np.ascontiguousarray(amps, dtype=np.complex128)


@pytest.fixture
def state_and_angles():
    rng = np.random.default_rng(99)
    state = random_state(rng, 6, 32)  # 5 qubits
    angles = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, size=(6, 3)))
    return state, angles


def test_compiled_backend_is_built():
    # the project ships both paths; CI should exercise the compiled one
    if "compiled" not in BACKENDS:
        pytest.skip("compiled kernels not built in this environment")
    assert backends.get_kernels("compiled") is not backends.get_kernels("numpy")


@pytest.mark.parametrize("dagger", [False, True])
def test_rot_apply_parity(state_and_angles, dagger):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    state, angles = state_and_angles
    results = []
    for name in BACKENDS:
        work = state.copy()
        backends.get_kernels(name).rot_apply(work, 2, angles, dagger)
        results.append(work)
    np.testing.assert_allclose(results[0], results[1], atol=1e-13)


def test_cnot_parity(state_and_angles):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    state, _ = state_and_angles
    results = []
    for name in BACKENDS:
        work = state.copy()
        backends.get_kernels(name).cnot_apply(work, 1, 3)
        results.append(work)
    np.testing.assert_array_equal(results[0], results[1])


def test_expectation_parity(state_and_angles):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    state, _ = state_and_angles
    diag = np.ascontiguousarray(np.random.default_rng(3).uniform(0, 2, size=32))
    za = [backends.get_kernels(n).z_expectation(state.copy(), 4) for n in BACKENDS]
    da = [backends.get_kernels(n).diag_expectation(state.copy(), diag) for n in BACKENDS]
    np.testing.assert_allclose(za[0], za[1], atol=1e-13)
    np.testing.assert_allclose(da[0], da[1], atol=1e-13)


def test_diag_apply_parity(state_and_angles):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    state, _ = state_and_angles
    diag = np.ascontiguousarray(np.random.default_rng(4).uniform(0, 2, size=32))
    results = []
    for name in BACKENDS:
        work = state.copy()
        backends.get_kernels(name).diag_apply(work, diag)
        results.append(work)
    np.testing.assert_allclose(results[0], results[1], atol=1e-14)


def test_rot_backward_parity(state_and_angles):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    state, angles = state_and_angles
    lam = random_state(np.random.default_rng(7), 6, 32)
    outs = []
    for name in BACKENDS:
        phi_w, lam_w = state.copy(), lam.copy()
        grads = np.zeros((6, 3))
        backends.get_kernels(name).rot_backward(phi_w, lam_w, 2, angles, grads)
        outs.append((phi_w, lam_w, grads))
    np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-13)
    np.testing.assert_allclose(outs[0][1], outs[1][1], atol=1e-13)
    np.testing.assert_allclose(outs[0][2], outs[1][2], atol=1e-12)


def test_rot_matrices_parity(state_and_angles):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    _, angles = state_and_angles
    ms = [backends.get_kernels(n).rot_matrices(angles) for n in BACKENDS]
    np.testing.assert_allclose(ms[0], ms[1], atol=1e-15)
    # unitarity of each matrix
    for m in ms[0]:
        np.testing.assert_allclose(m @ m.conj().T, np.eye(2), atol=1e-14)
