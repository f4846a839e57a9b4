"""qaead: window-based anomaly detection for multivariate time series.

A trash-qubit re-upload quantum-circuit model scored on an exact batched
statevector simulator, plus dense autoencoder baselines, a shared training
loop, dataset windowing, metrics and a benchmark CLI.
"""

from .backends import BACKEND, available_backends

__all__ = ["BACKEND", "available_backends"]
__version__ = "0.1.0"
