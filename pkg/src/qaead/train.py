"""Mini-batch gradient training shared by the circuit model and the dense AEs.

Models plug in through a small protocol: a flat parameter vector plus a
``batch_loss_grad`` callable. Optimization uses bias-corrected
adaptive-moment estimation; early stopping monitors the mean training-epoch
loss (no validation split exists in the semisupervised setting) and halts
after `patience` consecutive epochs without an absolute improvement larger
than `early_stop_threshold` over the best epoch seen.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import ConfigurationError, ContractViolationError
from .pipeline import WindowSet

STOP_MAX_EPOCHS = "max-epochs"
STOP_EARLY = "early-stop"


class GradientModel(Protocol):
    """What `train_model` needs from a model."""

    def params_vector(self) -> np.ndarray: ...

    def set_params_vector(self, vec: np.ndarray) -> None: ...

    def batch_loss_grad(self, windows: np.ndarray) -> tuple[float, np.ndarray]: ...


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    early_stop_threshold: float = 1e-5
    patience: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0: {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be positive: {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive: {self.learning_rate}")
        if self.early_stop_threshold < 0:
            raise ConfigurationError("early_stop_threshold must be >= 0")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be positive: {self.patience}")
        if self.epochs and self.patience > self.epochs:
            raise ConfigurationError(
                f"patience {self.patience} exceeds epochs {self.epochs}")


@dataclass
class TrainHistory:
    epoch_losses: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    stop_reason: str = STOP_MAX_EPOCHS

    def save_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss"])
            for i, loss in enumerate(self.epoch_losses, start=1):
                writer.writerow([i, repr(loss)])
            writer.writerow(["stop_reason", self.stop_reason])


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected adaptive-moment update; returns fresh arrays."""
    if params.shape != grads.shape:
        raise ConfigurationError(
            f"params/grads shapes differ: {params.shape} vs {grads.shape}")
    t = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads ** 2
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m, v, t)


def train_model(model: GradientModel, data: WindowSet,
                config: TrainConfig) -> TrainHistory:
    """Train in place on a normal-only window set; returns the loss history.

    Mini-batches are reshuffled every epoch from a generator seeded with
    ``config.seed``; the last partial batch is kept. Identical
    (model state, data, config) reruns produce identical parameters.
    """
    if data.labels.any():
        raise ContractViolationError(
            f"training data contains {int(data.labels.sum())} anomalous windows")
    if len(data) == 0:
        raise ContractViolationError("training data is empty")

    history = TrainHistory()
    if config.epochs == 0:
        return history

    rng = np.random.default_rng(config.seed)
    params = model.params_vector()
    state = AdamState.zeros(params.size)
    best = np.inf
    stall = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(data))
        batch_losses = []
        for start in range(0, len(data), config.batch_size):
            batch = data.windows[order[start:start + config.batch_size]]
            loss, grad = model.batch_loss_grad(batch)
            params, state = adam_step(params, grad, state, config.learning_rate)
            model.set_params_vector(params)
            batch_losses.append(loss)
        epoch_loss = float(np.mean(batch_losses))
        history.epoch_losses.append(epoch_loss)
        if best - epoch_loss > config.early_stop_threshold:
            best = epoch_loss
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                history.stop_reason = STOP_EARLY
                break
    history.stopped_epoch = len(history.epoch_losses)
    return history
