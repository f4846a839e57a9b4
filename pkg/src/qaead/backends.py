"""Selection between the compiled gate-kernel core and the numpy fallback.

The compiled extension ``qaead._kernels_c`` is optional. At import time this
module picks it when present, otherwise the pure-numpy twin
``qaead._kernels_np``. Both expose the same functions (`rot_apply`,
`cnot_apply`, `z_expectation`, `diag_expectation`, `diag_apply`,
`rot_backward`, `rot_matrices`) with identical semantics.

Set ``QAEAD_BACKEND=numpy`` (or ``compiled``) in the environment to force a
choice; forcing ``compiled`` when the extension is missing raises at import.
"""

import os

from . import _kernels_np
from .errors import ConfigurationError

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

_FORCED = os.environ.get("QAEAD_BACKEND", "").strip().lower()

if _FORCED == "numpy":
    kernels = _kernels_np
    BACKEND = "numpy"
elif _FORCED == "compiled":
    if _kernels_c is None:
        raise ImportError(
            "QAEAD_BACKEND=compiled but qaead._kernels_c is not built; "
            "install with a C toolchain or unset QAEAD_BACKEND")
    kernels = _kernels_c
    BACKEND = "compiled"
elif _FORCED:
    raise ImportError(f"unknown QAEAD_BACKEND value: {_FORCED!r}")
elif _kernels_c is not None:
    kernels = _kernels_c
    BACKEND = "compiled"
else:
    kernels = _kernels_np
    BACKEND = "numpy"


def available_backends() -> tuple[str, ...]:
    """Names of the kernel implementations importable in this environment."""
    return ("numpy", "compiled") if _kernels_c is not None else ("numpy",)


def get_kernels(name: str | None = None):
    """Return a kernel module by name; default is the active backend."""
    if name is None:
        return kernels
    if name == "numpy":
        return _kernels_np
    if name == "compiled":
        if _kernels_c is None:
            raise ConfigurationError("compiled kernels are not available")
        return _kernels_c
    raise ConfigurationError(f"unknown backend: {name!r}")
