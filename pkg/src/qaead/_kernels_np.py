"""Pure-numpy batched gate kernels.

Fallback implementation used when the compiled extension `qaead._kernels_c`
is not available. Both modules expose the same functions and semantics:

* ``state`` is a C-contiguous complex128 array of shape ``(batch, 2**n)``.
* Qubit 0 is the most significant bit of the basis index.
* Gate kernels mutate ``state`` in place; callers own the buffers.

The three rotation angles follow the ZYZ decomposition: a rotation with
angles ``(phi, theta, omega)`` applies RZ(phi), then RY(theta), then
RZ(omega) to the target qubit.
"""

import numpy as np


def _n_qubits(dim: int) -> int:
    return dim.bit_length() - 1


def _pair_view(state: np.ndarray, qubit: int) -> np.ndarray:
    """View (batch, dim) as (batch, blocks, 2, half) with axis 2 = target bit."""
    batch, dim = state.shape
    half = dim >> (qubit + 1)
    return state.reshape(batch, dim // (2 * half), 2, half)


def rot_matrices(angles: np.ndarray, dagger: bool = False) -> np.ndarray:
    """Dense 2x2 matrices of the ZYZ rotation for each batch row.

    angles: float64 (batch, 3) columns (phi, theta, omega).
    Returns complex128 (batch, 2, 2).
    """
    phi, theta, omega = angles[:, 0], angles[:, 1], angles[:, 2]
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    e_sum = np.exp(-0.5j * (phi + omega))
    e_diff = np.exp(0.5j * (phi - omega))
    m = np.empty((angles.shape[0], 2, 2), dtype=np.complex128)
    m[:, 0, 0] = e_sum * c
    m[:, 0, 1] = -e_diff * s
    m[:, 1, 0] = np.conj(e_diff) * s
    m[:, 1, 1] = np.conj(e_sum) * c
    if dagger:
        m = np.conj(np.transpose(m, (0, 2, 1)))
    return np.ascontiguousarray(m)


def rot_apply(state: np.ndarray, qubit: int, angles: np.ndarray,
              dagger: bool = False) -> None:
    """Apply the per-row rotation (or its adjoint) to `qubit`, in place."""
    m = rot_matrices(angles, dagger=dagger)
    v = _pair_view(state, qubit)
    u0 = v[:, :, 0, :].copy()
    u1 = v[:, :, 1, :]
    a00 = m[:, 0, 0][:, np.newaxis, np.newaxis]
    a01 = m[:, 0, 1][:, np.newaxis, np.newaxis]
    a10 = m[:, 1, 0][:, np.newaxis, np.newaxis]
    a11 = m[:, 1, 1][:, np.newaxis, np.newaxis]
    v[:, :, 0, :] = a00 * u0 + a01 * u1
    v[:, :, 1, :] = a10 * u0 + a11 * u1


def cnot_apply(state: np.ndarray, control: int, target: int) -> None:
    """Flip `target` amplitudes where the `control` bit is 1, in place."""
    batch, dim = state.shape
    n = _n_qubits(dim)
    v = state.reshape((batch,) + (2,) * n)
    idx10 = [slice(None)] * (n + 1)
    idx11 = [slice(None)] * (n + 1)
    idx10[1 + control] = 1
    idx11[1 + control] = 1
    idx10[1 + target] = 0
    idx11[1 + target] = 1
    idx10 = tuple(idx10)
    idx11 = tuple(idx11)
    tmp = v[idx10].copy()
    v[idx10] = v[idx11]
    v[idx11] = tmp


def z_expectation(state: np.ndarray, qubit: int) -> np.ndarray:
    """<Z> on `qubit` per batch row: P(bit=0) - P(bit=1)."""
    v = _pair_view(state, qubit)
    prob = v.real ** 2 + v.imag ** 2
    return (prob[:, :, 0, :] - prob[:, :, 1, :]).sum(axis=(1, 2))


def diag_expectation(state: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """<psi|D|psi> per batch row for a real diagonal observable D."""
    prob = state.real ** 2 + state.imag ** 2
    return prob @ diag


def diag_apply(state: np.ndarray, diag: np.ndarray) -> None:
    """state <- D @ state for a real diagonal observable, in place."""
    state *= diag


def rot_backward(phi_state: np.ndarray, lam_state: np.ndarray, qubit: int,
                 angles: np.ndarray, grads_out: np.ndarray) -> None:
    """Reverse-sweep step of adjoint differentiation for one rotation gate.

    On entry both states hold the post-gate vectors; on exit both hold the
    pre-gate vectors and ``grads_out`` (batch, 3) holds
    d <O> / d(phi, theta, omega) where <O> = 2 Re <lam|phi>-style pairing
    accumulated by the caller's sweep.
    """
    m = rot_matrices(angles)
    pv = _pair_view(phi_state, qubit)
    lv = _pair_view(lam_state, qubit)
    u0 = pv[:, :, 0, :].copy()
    u1 = pv[:, :, 1, :].copy()
    v0 = lv[:, :, 0, :].copy()
    v1 = lv[:, :, 1, :].copy()

    # omega enters last: its generator acts on the post-gate states
    grads_out[:, 2] = (np.conj(v0) * u0 - np.conj(v1) * u1).imag.sum(axis=(1, 2))
    e_omega = np.exp(1j * angles[:, 2])[:, np.newaxis, np.newaxis]
    grads_out[:, 1] = (e_omega * np.conj(v1) * u0
                       - np.conj(e_omega) * np.conj(v0) * u1).real.sum(axis=(1, 2))

    # un-apply the gate: pre = R^dagger @ post
    a00 = np.conj(m[:, 0, 0])[:, np.newaxis, np.newaxis]
    a01 = np.conj(m[:, 1, 0])[:, np.newaxis, np.newaxis]
    a10 = np.conj(m[:, 0, 1])[:, np.newaxis, np.newaxis]
    a11 = np.conj(m[:, 1, 1])[:, np.newaxis, np.newaxis]
    nu0 = a00 * u0 + a01 * u1
    nu1 = a10 * u0 + a11 * u1
    nv0 = a00 * v0 + a01 * v1
    nv1 = a10 * v0 + a11 * v1

    # phi enters first: its generator acts on the pre-gate states
    grads_out[:, 0] = (np.conj(nv0) * nu0 - np.conj(nv1) * nu1).imag.sum(axis=(1, 2))

    pv[:, :, 0, :] = nu0
    pv[:, :, 1, :] = nu1
    lv[:, :, 0, :] = nv0
    lv[:, :, 1, :] = nv1
