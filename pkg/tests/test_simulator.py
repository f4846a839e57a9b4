import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qaead import simulator as sim
from qaead.errors import ConfigurationError


class TestInitState:
    def test_single_qubit(self):
        st_ = sim.init_state(1)
        assert np.array_equal(st_.amplitudes, np.array([1, 0], dtype=complex))

    def test_two_qubits(self):
        st_ = sim.init_state(2)
        assert np.array_equal(st_.amplitudes, np.array([1, 0, 0, 0], dtype=complex))

    def test_eight_qubits_norm(self):
        st_ = sim.init_state(8)
        assert st_.amplitudes.shape == (256,)
        assert st_.norms() == pytest.approx(1.0)

    @pytest.mark.parametrize("bad", [0, -1, 25])
    def test_out_of_range(self, bad):
        with pytest.raises(ConfigurationError):
            sim.init_state(bad)


class TestApplyRotation:
    def test_zero_angles_is_identity(self, rng):
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        st_ = sim.Statevector(2, amps)
        out = sim.apply_rotation(st_, 1, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(out.amplitudes, amps, atol=1e-15)

    def test_ry_pi_flips_zero(self):
        out = sim.apply_rotation(sim.init_state(1), 0, 0.0, np.pi, 0.0)
        np.testing.assert_allclose(out.amplitudes, [0, 1], atol=1e-15)

    def test_matches_dense_product(self, rng):
        for _ in range(20):
            phi, theta, omega = rng.uniform(-np.pi, np.pi, size=3)
            amps = rng.normal(size=8) + 1j * rng.normal(size=8)
            amps /= np.linalg.norm(amps)
            q = int(rng.integers(3))
            out = sim.apply_rotation(sim.Statevector(3, amps), q, phi, theta, omega)
            expected = oracles.embed_single(3, q, oracles.rot_matrix(phi, theta, omega)) @ amps
            np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)

    def test_norm_preserved(self, rng):
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        amps /= np.linalg.norm(amps)
        out = sim.apply_rotation(sim.Statevector(4, amps), 2, 0.3, 1.2, -0.7)
        assert out.norms() == pytest.approx(1.0, abs=1e-12)

    def test_invalid_index(self):
        with pytest.raises(IndexError):
            sim.apply_rotation(sim.init_state(2), 2, 0.0, 0.0, 0.0)

    def test_batched_angles_broadcast_single_state(self):
        out = sim.apply_rotation(sim.init_state(2), 0,
                                 [0.0, 0.0], [np.pi, 0.0], [0.0, 0.0])
        assert out.batch_size == 2
        np.testing.assert_allclose(np.abs(out.amplitudes),
                                   [[0, 0, 1, 0], [1, 0, 0, 0]], atol=1e-15)


class TestApplyCnot:
    def test_flips_target_when_control_set(self):
        st_ = sim.apply_rotation(sim.init_state(2), 0, 0.0, np.pi, 0.0)  # |10>
        out = sim.apply_cnot(st_, 0, 1)
        np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1], atol=1e-15)

    def test_identity_on_zero_control(self):
        out = sim.apply_cnot(sim.init_state(2), 0, 1)
        np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_linearity_on_superposition(self):
        amps = np.array([1, 0, 1, 0], dtype=complex) / np.sqrt(2)  # (|00>+|10>)/sqrt2
        out = sim.apply_cnot(sim.Statevector(2, amps), 0, 1)
        expected = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)

    def test_equal_indices_rejected(self):
        with pytest.raises(ConfigurationError):
            sim.apply_cnot(sim.init_state(2), 1, 1)


class TestZExpectation:
    def test_zero_state(self):
        assert sim.z_expectation(sim.init_state(1), 0) == pytest.approx(1.0)

    def test_one_state(self):
        st_ = sim.apply_rotation(sim.init_state(1), 0, 0.0, np.pi, 0.0)
        assert sim.z_expectation(st_, 0) == pytest.approx(-1.0)

    def test_equal_superposition(self):
        st_ = sim.apply_rotation(sim.init_state(1), 0, 0.0, np.pi / 2, 0.0)
        assert sim.z_expectation(st_, 0) == pytest.approx(0.0, abs=1e-15)


class TestRunCircuit:
    def test_empty_circuit(self):
        out = sim.run_circuit([], 3)
        expected = np.zeros(8, dtype=complex)
        expected[0] = 1.0
        np.testing.assert_array_equal(out.amplitudes, expected)

    def test_bit_ordering_msb_first(self):
        out = sim.run_circuit([sim.rotation(0, 0.0, np.pi, 0.0)], 2)
        np.testing.assert_allclose(out.amplitudes, [0, 0, 1, 0], atol=1e-15)

    def test_matches_dense_matrix_oracle(self, rng, make_random_circuit):
        for _ in range(25):
            n = int(rng.integers(1, 5))
            gates = make_random_circuit(rng, n, int(rng.integers(1, 5)))
            out = sim.run_circuit(gates, n)
            expected = oracles.dense_run(gates, n)
            assert np.max(np.abs(out.amplitudes - expected)) < 1e-10

    def test_norm_at_full_scale(self, rng, make_random_circuit):
        gates = make_random_circuit(rng, 8, 100)
        out = sim.run_circuit(gates, 8)
        assert abs(out.norms()[0] ** 2 - 1.0) < 1e-10

    def test_batched_equals_independent_runs(self, rng, make_random_circuit):
        batch = 7
        gates = make_random_circuit(rng, 3, 4, batch=batch)
        out = sim.run_circuit(gates, 3)
        assert out.amplitudes.shape == (batch, 8)
        for b in range(batch):
            single = [g if g.kind == sim.CNOT
                      else sim.GateOp(sim.ROTATION, g.target, angles=g.angles[b])
                      for g in gates]
            ref = sim.run_circuit(single, 3)
            np.testing.assert_allclose(out.amplitudes[b], ref.amplitudes, atol=1e-12)

    def test_inconsistent_batch_sizes_rejected(self, rng):
        gates = [sim.GateOp(sim.ROTATION, 0, angles=rng.normal(size=(3, 3))),
                 sim.GateOp(sim.ROTATION, 0, angles=rng.normal(size=(4, 3)))]
        with pytest.raises(ConfigurationError):
            sim.run_circuit(gates, 1)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), layers=st.integers(1, 6), seed=st.integers(0, 2 ** 31))
def test_norm_preservation_property(n, layers, seed):
    rng = np.random.default_rng(seed)
    from conftest import random_circuit
    gates = random_circuit(rng, n, layers)
    out = sim.run_circuit(gates, n)
    assert abs(out.norms()[0] ** 2 - 1.0) < 1e-10


def test_trash_zero_probability_on_basis_states():
    # |10...0>: qubit 0 in |1> contributes 0, qubit 1 in |0> contributes 1
    st_ = sim.apply_rotation(sim.init_state(4), 0, 0.0, np.pi, 0.0)
    assert sim.trash_zero_probability(st_, (0, 1)) == pytest.approx(1.0)
    assert sim.trash_zero_probability(sim.init_state(4), (0, 1)) == pytest.approx(2.0)


def test_trash_observable_validation():
    with pytest.raises(ConfigurationError):
        sim.trash_observable_diag(4, ())
    with pytest.raises(ConfigurationError):
        sim.trash_observable_diag(4, (0, 0))
    with pytest.raises(IndexError):
        sim.trash_observable_diag(4, (4,))
