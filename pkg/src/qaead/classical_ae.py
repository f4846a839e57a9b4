"""Fully connected autoencoder baselines.

Encoder layers follow the configured hidden sizes; the decoder mirrors them
back to the input dimension (e.g. 500 -> 16 -> 8 -> 16 -> 500). Hidden layers
use ReLU, the output layer is linear. The anomaly score of a window is its
mean-squared reconstruction error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .serialize import read_container, write_container


@dataclass(frozen=True)
class AeConfig:
    input_dim: int
    hidden_sizes: tuple[int, ...]
    seed: int = 42
    init_scale: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be positive: {self.input_dim}")
        if not self.hidden_sizes:
            raise ConfigurationError("hidden_sizes must be non-empty")
        if any(h < 1 for h in self.hidden_sizes):
            raise ConfigurationError(f"hidden sizes must be positive: {self.hidden_sizes}")

    @property
    def compressing(self) -> bool:
        """True when the bottleneck is narrower than the input. The benchmark
        grid intentionally also runs non-compressing nets on small inputs."""
        return self.hidden_sizes[-1] < self.input_dim


def layer_dims(config: AeConfig) -> list[int]:
    """Unit counts through encoder and mirrored decoder, input to output."""
    hidden = list(config.hidden_sizes)
    return [config.input_dim] + hidden + hidden[-2::-1] + [config.input_dim]


@dataclass
class AeWeights:
    """Per-layer weight matrices (out, in) and bias vectors (out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ConfigurationError("weights/biases layer counts differ")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ConfigurationError(
                    f"layer shapes inconsistent: {w.shape} / {b.shape}")
        for prev, nxt in zip(self.weights, self.weights[1:]):
            if nxt.shape[1] != prev.shape[0]:
                raise ConfigurationError(
                    f"layer chain broken: {prev.shape} -> {nxt.shape}")

    def as_vector(self) -> np.ndarray:
        parts = [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, vec: np.ndarray, config: AeConfig) -> "AeWeights":
        dims = layer_dims(config)
        weights, biases = [], []
        pos = 0
        for d_in, d_out in zip(dims, dims[1:]):
            weights.append(vec[pos:pos + d_out * d_in].reshape(d_out, d_in).copy())
            pos += d_out * d_in
        for _, d_out in zip(dims, dims[1:]):
            biases.append(vec[pos:pos + d_out].copy())
            pos += d_out
        if pos != vec.size:
            raise ConfigurationError(f"vector length {vec.size} != {pos}")
        return cls(weights, biases)


def init_weights(config: AeConfig) -> AeWeights:
    """Near-zero Normal(0, init_scale^2) weights and biases, seeded."""
    rng = np.random.default_rng(config.seed)
    dims = layer_dims(config)
    weights = [rng.normal(0.0, config.init_scale, size=(d_out, d_in))
               for d_in, d_out in zip(dims, dims[1:])]
    biases = [rng.normal(0.0, config.init_scale, size=d_out)
              for d_out in dims[1:]]
    return AeWeights(weights, biases)


def count_ae_params(config: AeConfig) -> int:
    """Reported trainable-parameter count: weight-matrix entries only,
    encoder plus mirrored decoder, biases excluded."""
    dims = layer_dims(config)
    return int(sum(a * b for a, b in zip(dims, dims[1:])))


def _forward_pass(x: np.ndarray, weights: AeWeights):
    """Activations and pre-activations for each layer; x is (batch, d)."""
    act = [x]
    pre = []
    last = len(weights.weights) - 1
    for i, (w, b) in enumerate(zip(weights.weights, weights.biases)):
        z = act[-1] @ w.T + b
        pre.append(z)
        act.append(z if i == last else np.maximum(z, 0.0))
    return act, pre


def ae_forward(x: np.ndarray, weights: AeWeights) -> np.ndarray:
    """Reconstruction of `x`; accepts a single vector (d,) or a batch (B, d)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if not np.all(np.isfinite(arr)):
        raise InputError("input must be finite")
    if arr.shape[-1] != weights.weights[0].shape[1]:
        raise ConfigurationError(
            f"input dim {arr.shape[-1]} != layer dim {weights.weights[0].shape[1]}")
    act, _ = _forward_pass(np.atleast_2d(arr), weights)
    return act[-1][0] if single else act[-1]


def ae_loss(x: np.ndarray, x_rec: np.ndarray):
    """Mean over dimensions of squared reconstruction differences."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_rec, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"length mismatch: {a.shape} vs {b.shape}")
    return ((a - b) ** 2).mean(axis=-1)


def ae_backward(x: np.ndarray, weights: AeWeights):
    """Loss and exact gradients of the (batch-mean) reconstruction loss.

    Returns ``(loss, weight_grads, bias_grads)``; ReLU subgradient at 0 is 0.
    """
    arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
    batch, dim = arr.shape
    act, pre = _forward_pass(arr, weights)
    loss = float(((act[-1] - arr) ** 2).mean(axis=-1).mean())

    n_layers = len(weights.weights)
    w_grads = [None] * n_layers
    b_grads = [None] * n_layers
    delta = 2.0 * (act[-1] - arr) / (dim * batch)
    for i in range(n_layers - 1, -1, -1):
        if i != n_layers - 1:
            delta = delta * (pre[i] > 0.0)
        w_grads[i] = delta.T @ act[i]
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights.weights[i]
    return loss, w_grads, b_grads


PARAMS_KIND = "dense-ae-params"


def save_weights(path, weights: AeWeights, config: AeConfig) -> None:
    arrays = {}
    for i, (w, b) in enumerate(zip(weights.weights, weights.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    meta = {
        "input_dim": config.input_dim,
        "hidden_sizes": list(config.hidden_sizes),
        "seed": config.seed,
        "init_scale": config.init_scale,
        "n_layers": len(weights.weights),
    }
    write_container(path, PARAMS_KIND, arrays, meta)


def load_weights(path) -> tuple[AeWeights, AeConfig]:
    kind, arrays, meta = read_container(path)
    if kind != PARAMS_KIND:
        raise ConfigurationError(f"{path}: expected {PARAMS_KIND}, found {kind}")
    config = AeConfig(
        input_dim=int(meta["input_dim"]),
        hidden_sizes=tuple(meta["hidden_sizes"]),
        seed=int(meta["seed"]),
        init_scale=float(meta["init_scale"]),
    )
    n = int(meta["n_layers"])
    weights = AeWeights([arrays[f"w{i}"] for i in range(n)],
                        [arrays[f"b{i}"] for i in range(n)])
    return weights, config


@dataclass
class DenseAeModel:
    """Adapter giving the shared training loop a flat-parameter view."""

    config: AeConfig
    weights: AeWeights | None = None

    def __post_init__(self):
        if self.weights is None:
            self.weights = init_weights(self.config)

    @property
    def kind(self) -> str:
        return "ae"

    def params_vector(self) -> np.ndarray:
        return self.weights.as_vector()

    def set_params_vector(self, vec: np.ndarray) -> None:
        self.weights = AeWeights.from_vector(vec, self.config)

    def batch_loss_grad(self, windows: np.ndarray) -> tuple[float, np.ndarray]:
        loss, w_grads, b_grads = ae_backward(windows, self.weights)
        flat = np.concatenate([g.ravel() for g in w_grads]
                              + [g.ravel() for g in b_grads])
        return loss, flat

    def scores(self, windows: np.ndarray) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(windows, dtype=np.float64))
        return np.atleast_1d(ae_loss(arr, ae_forward(arr, self.weights)))

    def save(self, path) -> None:
        save_weights(path, self.weights, self.config)
