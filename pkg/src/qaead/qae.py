"""Re-upload trash-qubit circuit model for window scoring.

A window of scaled values in [0, 1] is tiled cyclically over every rotation
angle slot of an L-layer, n-qubit circuit. Each slot applies
``angle = weight * feature + bias`` with per-slot trainable weight and bias
tensors of shape (layers, qubits, 3). Every layer closes with a linear CNOT
chain. The model output is the summed probability of the designated trash
qubits being in |0>; training drives it down on normal windows, so it doubles
as the anomaly score at inference (regularization terms are excluded from the
score: they are input-independent and would shift every score equally).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import simulator as sim
from .errors import ConfigurationError, InputError
from .serialize import read_container, write_container


@dataclass(frozen=True)
class QaeConfig:
    n_qubits: int = 8
    n_layers: int = 100
    trash_qubits: tuple[int, ...] = (0, 1)
    reg_weights: float = 1e-2
    reg_bias: float = 1e-4
    init_scale: float = 1e-2
    seed: int = 42

    def __post_init__(self):
        if not 1 <= self.n_qubits <= sim.MAX_QUBITS:
            raise ConfigurationError(f"n_qubits out of range: {self.n_qubits}")
        if self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be positive: {self.n_layers}")
        trash = tuple(self.trash_qubits)
        object.__setattr__(self, "trash_qubits", trash)
        if not trash:
            raise ConfigurationError("trash_qubits must be non-empty")
        if len(set(trash)) != len(trash):
            raise ConfigurationError("trash_qubits must be distinct")
        if any(not 0 <= q < self.n_qubits for q in trash):
            raise ConfigurationError(f"trash_qubits out of range: {trash}")
        if len(trash) >= self.n_qubits:
            raise ConfigurationError("trash_qubits must be a proper subset")

    @property
    def angle_shape(self) -> tuple[int, int, int]:
        return (self.n_layers, self.n_qubits, 3)


@dataclass
class CircuitParams:
    """Trainable tensors; both shaped (layers, qubits, 3)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if self.weights.shape != self.biases.shape or self.weights.ndim != 3:
            raise ConfigurationError(
                f"weight/bias shapes must match: {self.weights.shape} "
                f"vs {self.biases.shape}")

    @classmethod
    def zeros(cls, config: QaeConfig) -> "CircuitParams":
        return cls(np.zeros(config.angle_shape), np.zeros(config.angle_shape))

    def check_shape(self, config: QaeConfig) -> None:
        if self.weights.shape != config.angle_shape:
            raise ConfigurationError(
                f"params shaped {self.weights.shape}, config wants {config.angle_shape}")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.biases.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, config: QaeConfig) -> "CircuitParams":
        shape = config.angle_shape
        n = int(np.prod(shape))
        if vec.size != 2 * n:
            raise ConfigurationError(f"vector length {vec.size} != {2 * n}")
        return cls(vec[:n].reshape(shape).copy(), vec[n:].reshape(shape).copy())


def init_params(config: QaeConfig) -> CircuitParams:
    """Near-zero Normal(0, init_scale^2) tensors from a seeded generator."""
    rng = np.random.default_rng(config.seed)
    shape = config.angle_shape
    weights = rng.normal(0.0, config.init_scale, size=shape) if config.init_scale else np.zeros(shape)
    biases = rng.normal(0.0, config.init_scale, size=shape) if config.init_scale else np.zeros(shape)
    return CircuitParams(weights, biases)


def count_qae_params(config: QaeConfig) -> int:
    """Reported trainable-parameter count: multiplicative weights only.

    The bias tensor is trained as well but excluded from the reported count;
    this weights-only convention is what the reference comparison tables use.
    """
    return config.n_layers * config.n_qubits * 3


def map_features(window_flat: np.ndarray, config: QaeConfig) -> np.ndarray:
    """Tile window features cyclically over the (layers, qubits, 3) angle slots.

    Slot (l, q, r) receives feature ``(l*n + q)*3 + r mod D``; accepts a
    single window (D,) or a batch (B, D).
    """
    window = np.asarray(window_flat, dtype=np.float64)
    if window.shape[-1] == 0 or window.size == 0:
        raise InputError("window must contain at least one feature")
    if window.ndim > 2:
        raise InputError(f"window must be 1-d or 2-d, got shape {window.shape}")
    d = window.shape[-1]
    n_slots = int(np.prod(config.angle_shape))
    idx = (np.arange(n_slots) % d).reshape(config.angle_shape)
    return window[..., idx]


def build_circuit(angle_inputs: np.ndarray, params: CircuitParams,
                  config: QaeConfig) -> list[sim.GateOp]:
    """Gate list: per layer, n rotations R(w*x + b) then the CNOT chain.

    ``angle_inputs`` is the tiled feature tensor, (L, n, 3) or (B, L, n, 3).
    Total gates: L * (2n - 1).
    """
    params.check_shape(config)
    inputs = np.asarray(angle_inputs, dtype=np.float64)
    if inputs.shape[-3:] != config.angle_shape:
        raise ConfigurationError(
            f"angle inputs shaped {inputs.shape}, config wants {config.angle_shape}")
    angles = params.weights * inputs + params.biases
    batched = angles.ndim == 4
    gates: list[sim.GateOp] = []
    for layer in range(config.n_layers):
        for q in range(config.n_qubits):
            a = angles[:, layer, q, :] if batched else angles[layer, q, :]
            gates.append(sim.GateOp(sim.ROTATION, q, angles=a))
        for q in range(config.n_qubits - 1):
            gates.append(sim.cnot(q, q + 1))
    return gates


def qae_output(window_flat: np.ndarray, params: CircuitParams,
               config: QaeConfig):
    """Model output: summed P(|0>) over trash qubits, in [0, len(trash)].

    This is the anomaly score. Scalar for a single window, (B,) for a batch.
    """
    inputs = map_features(window_flat, config)
    gates = build_circuit(inputs, params, config)
    state = sim.run_circuit(gates, config.n_qubits)
    return sim.trash_zero_probability(state, config.trash_qubits)


def regularization(params: CircuitParams, config: QaeConfig) -> float:
    """L2 penalty on the mean of squared entries of each tensor."""
    return (config.reg_weights * float(np.mean(params.weights ** 2))
            + config.reg_bias * float(np.mean(params.biases ** 2)))


def qae_training_loss(window_flat: np.ndarray, params: CircuitParams,
                      config: QaeConfig):
    """Training loss: model output plus the regularization penalty."""
    return qae_output(window_flat, params, config) + regularization(params, config)


def loss_and_gradient(windows: np.ndarray, params: CircuitParams,
                      config: QaeConfig):
    """Mean training loss over a window batch and its exact gradient.

    One adjoint reverse sweep per batch; returns
    ``(loss, d_loss/d_weights, d_loss/d_biases)``.
    """
    x = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    tiled = map_features(x, config)
    gates = build_circuit(tiled, params, config)
    scores, dfdangle = sim.adjoint_angle_gradient(
        gates, config.n_qubits, config.trash_qubits)
    batch = x.shape[0]
    dfdangle = dfdangle.reshape((batch,) + config.angle_shape)
    n_slots = params.weights.size
    d_weights = (dfdangle * tiled).mean(axis=0) \
        + 2.0 * config.reg_weights * params.weights / n_slots
    d_biases = dfdangle.mean(axis=0) \
        + 2.0 * config.reg_bias * params.biases / n_slots
    loss = float(scores.mean()) + regularization(params, config)
    return loss, d_weights, d_biases


PARAMS_KIND = "qae-params"


def save_params(path, params: CircuitParams, config: QaeConfig) -> None:
    """Serialize params with a header carrying the circuit configuration."""
    meta = {
        "n_qubits": config.n_qubits,
        "n_layers": config.n_layers,
        "trash_qubits": list(config.trash_qubits),
        "reg_weights": config.reg_weights,
        "reg_bias": config.reg_bias,
        "init_scale": config.init_scale,
        "seed": config.seed,
    }
    write_container(path, PARAMS_KIND,
                    {"weights": params.weights, "biases": params.biases}, meta)


def load_params(path) -> tuple[CircuitParams, QaeConfig]:
    kind, arrays, meta = read_container(path)
    if kind != PARAMS_KIND:
        raise ConfigurationError(f"{path}: expected {PARAMS_KIND}, found {kind}")
    config = QaeConfig(
        n_qubits=int(meta["n_qubits"]),
        n_layers=int(meta["n_layers"]),
        trash_qubits=tuple(meta["trash_qubits"]),
        reg_weights=float(meta["reg_weights"]),
        reg_bias=float(meta["reg_bias"]),
        init_scale=float(meta["init_scale"]),
        seed=int(meta["seed"]),
    )
    params = CircuitParams(arrays["weights"], arrays["biases"])
    params.check_shape(config)
    return params, config


@dataclass
class QaeModel:
    """Adapter giving the shared training loop a flat-parameter view."""

    config: QaeConfig
    params: CircuitParams | None = None

    def __post_init__(self):
        if self.params is None:
            self.params = init_params(self.config)
        self.params.check_shape(self.config)

    @property
    def kind(self) -> str:
        return "qae"

    def params_vector(self) -> np.ndarray:
        return self.params.as_vector()

    def set_params_vector(self, vec: np.ndarray) -> None:
        self.params = CircuitParams.from_vector(vec, self.config)

    def batch_loss_grad(self, windows: np.ndarray) -> tuple[float, np.ndarray]:
        loss, dw, db = loss_and_gradient(windows, self.params, self.config)
        return loss, np.concatenate([dw.ravel(), db.ravel()])

    def scores(self, windows: np.ndarray) -> np.ndarray:
        return np.atleast_1d(qae_output(windows, self.params, self.config))

    def save(self, path) -> None:
        save_params(path, self.params, self.config)
