import numpy as np
import pytest

from qaead import classical_ae as cae
from qaead import pipeline as pl
from qaead import qae
from qaead import train
from qaead.errors import ConfigurationError, ContractViolationError


def window_set(windows, labels=None):
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    n, width = windows.shape
    if labels is None:
        labels = np.zeros(n)
    return pl.WindowSet(windows, labels, width, 1, 1)


class ConstantLossModel:
    """Fixed loss and zero gradient; for loop-contract tests."""

    def __init__(self, n=3, loss=1.0):
        self._params = np.zeros(n)
        self.loss = loss
        self.calls = 0

    def params_vector(self):
        return self._params.copy()

    def set_params_vector(self, vec):
        self._params = vec

    def batch_loss_grad(self, windows):
        self.calls += 1
        return self.loss, np.zeros_like(self._params)


class TestAdamStep:
    def test_zero_gradient_keeps_params(self):
        params = np.array([0.3, -0.2])
        state = train.AdamState.zeros(2)
        new, state = train.adam_step(params, np.zeros(2), state, 1e-3)
        np.testing.assert_array_equal(new, params)
        assert state.step == 1

    def test_first_step_magnitude(self):
        # m_hat = 1, v_hat = 1 -> update = -lr / (1 + eps)
        new, _ = train.adam_step(np.zeros(1), np.ones(1),
                                 train.AdamState.zeros(1), 1e-3)
        assert new[0] == pytest.approx(-1e-3 / (1.0 + 1e-8), abs=1e-12)

    def test_identical_runs_are_identical(self):
        rng = np.random.default_rng(0)
        grads = rng.normal(size=(5, 4))

        def run():
            p = np.ones(4)
            s = train.AdamState.zeros(4)
            for g in grads:
                p, s = train.adam_step(p, g, s, 1e-2)
            return p

        np.testing.assert_array_equal(run(), run())

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            train.adam_step(np.zeros(2), np.zeros(3), train.AdamState.zeros(2), 1e-3)


class TestTrainModel:
    def test_constant_loss_stops_after_second_epoch(self):
        model = ConstantLossModel()
        cfg = train.TrainConfig(epochs=50, batch_size=2, patience=1, seed=0)
        history = train.train_model(model, window_set(np.zeros((4, 3))), cfg)
        assert history.stopped_epoch == 2
        assert history.stop_reason == train.STOP_EARLY

    def test_patience_bounds_epochs_past_last_improvement(self):
        model = ConstantLossModel()
        cfg = train.TrainConfig(epochs=50, batch_size=4, patience=7, seed=0)
        history = train.train_model(model, window_set(np.zeros((4, 3))), cfg)
        assert history.stopped_epoch == 1 + 7

    def test_zero_epochs_returns_initial_params(self):
        cfg = qae.QaeConfig(n_qubits=3, n_layers=2, trash_qubits=(0,), seed=1)
        model = qae.QaeModel(cfg)
        before = model.params_vector()
        history = train.train_model(model, window_set(np.zeros((2, 5))),
                                    train.TrainConfig(epochs=0))
        assert history.epoch_losses == []
        assert history.stopped_epoch == 0
        np.testing.assert_array_equal(model.params_vector(), before)

    def test_anomalous_window_rejected(self):
        data = window_set(np.zeros((3, 2)), labels=[0, 1, 0])
        with pytest.raises(ContractViolationError):
            train.train_model(ConstantLossModel(), data, train.TrainConfig())

    def test_qae_descends_on_repeated_window(self, rng):
        cfg = qae.QaeConfig(n_qubits=4, n_layers=6, trash_qubits=(0, 1), seed=7)
        model = qae.QaeModel(cfg)
        windows = np.tile(rng.uniform(size=10), (8, 1))
        initial = float(np.mean(model.scores(windows))) + qae.regularization(
            model.params, cfg)
        history = train.train_model(
            model, window_set(windows),
            train.TrainConfig(epochs=60, batch_size=4, patience=60, seed=3))
        assert history.epoch_losses[-1] < initial

    def test_ae_descends_on_repeated_window(self, rng):
        cfg = cae.AeConfig(input_dim=10, hidden_sizes=(4,), seed=5)
        model = cae.DenseAeModel(cfg)
        windows = np.tile(rng.uniform(size=10), (8, 1))
        initial = float(np.mean(model.scores(windows)))
        history = train.train_model(
            model, window_set(windows),
            train.TrainConfig(epochs=80, batch_size=4, patience=80, seed=3))
        assert history.epoch_losses[-1] < initial

    def test_training_is_deterministic_bit_for_bit(self, rng):
        windows = rng.uniform(size=(10, 8))
        cfg = qae.QaeConfig(n_qubits=3, n_layers=2, trash_qubits=(0,), seed=2)
        tcfg = train.TrainConfig(epochs=5, batch_size=4, patience=5, seed=11)

        def run():
            model = qae.QaeModel(cfg)
            train.train_model(model, window_set(windows), tcfg)
            return model.params_vector()

        np.testing.assert_array_equal(run(), run())

    def test_partial_batches_are_kept(self):
        model = ConstantLossModel()
        cfg = train.TrainConfig(epochs=1, batch_size=4, patience=1, seed=0)
        train.train_model(model, window_set(np.zeros((6, 3))), cfg)
        assert model.calls == 2  # batches of 4 and 2


def test_history_csv(tmp_path):
    history = train.TrainHistory([2.0, 1.5], 2, train.STOP_MAX_EPOCHS)
    path = tmp_path / "history.csv"
    history.save_csv(path)
    text = path.read_text()
    assert "epoch,loss" in text
    assert "1,2.0" in text
    assert "stop_reason,max-epochs" in text


def test_patience_cannot_exceed_epochs():
    with pytest.raises(ConfigurationError):
        train.TrainConfig(epochs=5, patience=6)
