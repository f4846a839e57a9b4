"""Batched complex statevector engine.

States are exact complex128 amplitude vectors over ``n`` qubits (no sampling
noise). Qubit 0 is the **most significant bit** of the basis index, so for
``n=2`` the amplitude order is ``|00>, |01>, |10>, |11>`` and a bit flip on
qubit 0 maps index 0 to index 2.

All public gate operations are pure: they return a new `Statevector` and
never mutate their input. A leading batch axis on the amplitudes (and on
rotation angles) evaluates B independent assignments of the same gate
skeleton in one call.

Gradients of the trash-qubit score are available through three routes:
`adjoint_gradient` (reverse sweep, the production path),
`param_shift_gradient` (two evaluations per angle, kept as an oracle), and
plain finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .backends import kernels
from .errors import ConfigurationError

MAX_QUBITS = 24

ROTATION = "rotation"
CNOT = "cnot"

#: Bindings map circuit angles to trainable parameters. For each rotation
#: gate (in circuit order) a binding is a 3-tuple of term lists, one per
#: angle; each term is ``(param_index, coefficient)`` and the angle is an
#: affine function of the parameters with those coefficients. Coefficients
#: may be scalars or per-batch-row arrays.
Bindings = Sequence[Sequence[Sequence[tuple[int, object]]]]


@dataclass(frozen=True)
class GateOp:
    """One circuit operation: a ZYZ rotation or a CNOT.

    ``angles`` is float64 of shape (3,) or (batch, 3) for rotations, None
    for CNOTs. Angle order is (phi, theta, omega): RZ(phi) first, RZ(omega)
    last.
    """

    kind: str
    target: int
    control: int | None = None
    angles: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (ROTATION, CNOT):
            raise ConfigurationError(f"unknown gate kind: {self.kind!r}")
        if self.kind == CNOT:
            if self.control is None:
                raise ConfigurationError("cnot requires a control qubit")
            if self.control == self.target:
                raise ConfigurationError(
                    f"cnot control and target must differ (got {self.target})")
        else:
            if self.angles is None or self.angles.shape[-1] != 3:
                raise ConfigurationError("rotation requires 3 angles")


def rotation(target: int, phi, theta, omega) -> GateOp:
    """Rotation GateOp; each angle may be a scalar or a (batch,) array."""
    angles = np.stack(np.broadcast_arrays(
        np.asarray(phi, dtype=np.float64),
        np.asarray(theta, dtype=np.float64),
        np.asarray(omega, dtype=np.float64)), axis=-1)
    if angles.ndim > 2:
        raise ConfigurationError("rotation angles must be scalars or 1-d arrays")
    return GateOp(ROTATION, target, angles=angles)


def cnot(control: int, target: int) -> GateOp:
    return GateOp(CNOT, target, control=control)


@dataclass
class Statevector:
    """Complex amplitudes of an ``n_qubits`` register, optionally batched.

    ``amplitudes`` has shape (2**n_qubits,) or (batch, 2**n_qubits).
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        dim = 1 << self.n_qubits
        if self.amplitudes.shape[-1] != dim:
            raise ConfigurationError(
                f"amplitude length {self.amplitudes.shape[-1]} != 2**{self.n_qubits}")
        if self.amplitudes.ndim not in (1, 2):
            raise ConfigurationError("amplitudes must be 1-d or 2-d")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def batch_size(self) -> int | None:
        return None if self.amplitudes.ndim == 1 else self.amplitudes.shape[0]

    def norms(self) -> np.ndarray:
        a = np.atleast_2d(self.amplitudes)
        return np.sqrt((a.real ** 2 + a.imag ** 2).sum(axis=1))


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def _as_batch(state: Statevector) -> tuple[np.ndarray, bool]:
    """C-contiguous (batch, dim) working copy plus a had-batch-axis flag."""
    amps = state.amplitudes
    single = amps.ndim == 1
    work = np.array(np.atleast_2d(amps), dtype=np.complex128, order="C")
    return work, single


def _angles_2d(angles: np.ndarray, batch: int) -> np.ndarray:
    """Materialize gate angles as a C-contiguous float64 (batch, 3) array."""
    a = np.asarray(angles, dtype=np.float64)
    if a.ndim == 1:
        a = np.broadcast_to(a, (batch, 3))
    elif a.shape[0] != batch:
        raise ConfigurationError(
            f"gate batch size {a.shape[0]} != circuit batch size {batch}")
    return np.ascontiguousarray(a)


def init_state(n_qubits: int, batch_size: int | None = None) -> Statevector:
    """The all-zeros register |0...0>, amplitude 1 at basis index 0."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    dim = 1 << n_qubits
    shape = (dim,) if batch_size is None else (batch_size, dim)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., 0] = 1.0
    return Statevector(n_qubits, amps)


def apply_rotation(state: Statevector, qubit: int, phi, theta, omega) -> Statevector:
    """Apply the ZYZ rotation R(phi, theta, omega) to one qubit.

    Batched angles on an unbatched state broadcast the state across the batch.
    """
    _check_qubit(qubit, state.n_qubits)
    work, single = _as_batch(state)
    gate = rotation(qubit, phi, theta, omega)
    if gate.angles.ndim == 2 and work.shape[0] == 1:
        work = np.repeat(work, gate.angles.shape[0], axis=0)
        single = False
    kernels.rot_apply(work, qubit, _angles_2d(gate.angles, work.shape[0]))
    return Statevector(state.n_qubits, work[0] if single else work)


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    """Flip `target` on the basis states whose `control` bit is 1."""
    _check_qubit(control, state.n_qubits)
    _check_qubit(target, state.n_qubits)
    if control == target:
        raise ConfigurationError("cnot control and target must differ")
    work, single = _as_batch(state)
    kernels.cnot_apply(work, control, target)
    return Statevector(state.n_qubits, work[0] if single else work)


def z_expectation(state: Statevector, qubit: int):
    """<Z> on one qubit: P(bit=0) - P(bit=1). Scalar, or (batch,) array."""
    _check_qubit(qubit, state.n_qubits)
    work, single = _as_batch(state)
    vals = kernels.z_expectation(work, qubit)
    return float(vals[0]) if single else vals


def _circuit_batch(gates: Iterable[GateOp]) -> int | None:
    batch = None
    for g in gates:
        if g.kind == ROTATION and g.angles.ndim == 2:
            b = g.angles.shape[0]
            if batch is not None and b != batch:
                raise ConfigurationError(
                    f"inconsistent gate batch sizes: {batch} vs {b}")
            batch = b
    return batch


def _validate_gates(gates: Sequence[GateOp], n_qubits: int) -> None:
    for g in gates:
        _check_qubit(g.target, n_qubits)
        if g.control is not None:
            _check_qubit(g.control, n_qubits)


def run_circuit(gates: Sequence[GateOp], n_qubits: int) -> Statevector:
    """Apply a gate sequence to |0...0>.

    If any rotation carries (batch, 3) angles the result is batched: B
    angle assignments over the same skeleton produce B statevectors.
    """
    gates = list(gates)
    _validate_gates(gates, n_qubits)
    batch = _circuit_batch(gates)
    state = init_state(n_qubits, batch_size=batch or 1)
    work = state.amplitudes
    nbatch = work.shape[0]
    for g in gates:
        if g.kind == CNOT:
            kernels.cnot_apply(work, g.control, g.target)
        else:
            kernels.rot_apply(work, g.target, _angles_2d(g.angles, nbatch))
    return Statevector(n_qubits, work if batch is not None else work[0])


def trash_observable_diag(n_qubits: int, trash_qubits: Sequence[int]) -> np.ndarray:
    """Diagonal of sum_s (I + Z_s)/2: per basis state, the count of trash
    qubits that are in |0>."""
    trash = tuple(trash_qubits)
    if not trash:
        raise ConfigurationError("trash qubit set must be non-empty")
    for q in trash:
        _check_qubit(q, n_qubits)
    if len(set(trash)) != len(trash):
        raise ConfigurationError("trash qubits must be distinct")
    dim = 1 << n_qubits
    z = np.arange(dim)
    diag = np.zeros(dim, dtype=np.float64)
    for q in trash:
        diag += 1.0 - ((z >> (n_qubits - 1 - q)) & 1)
    return diag


def trash_zero_probability(state: Statevector, trash_qubits: Sequence[int]):
    """Sum over trash qubits of P(qubit = |0>); in [0, len(trash)]."""
    diag = trash_observable_diag(state.n_qubits, trash_qubits)
    work, single = _as_batch(state)
    vals = kernels.diag_expectation(work, diag)
    return float(vals[0]) if single else vals


def _rotation_gates(gates: Sequence[GateOp]) -> list[int]:
    return [i for i, g in enumerate(gates) if g.kind == ROTATION]


def adjoint_angle_gradient(gates: Sequence[GateOp], n_qubits: int,
                           trash_qubits: Sequence[int]):
    """Scores and d(score)/d(angle) for every rotation angle, one reverse sweep.

    Returns ``(scores, dfdangle)`` with dfdangle of shape
    (batch, n_rotations, 3); scores is (batch,) (batch 1 when unbatched).
    """
    gates = list(gates)
    _validate_gates(gates, n_qubits)
    diag = trash_observable_diag(n_qubits, trash_qubits)
    batch = _circuit_batch(gates) or 1

    state = init_state(n_qubits, batch_size=batch)
    psi = state.amplitudes
    angle_cache = []
    for g in gates:
        if g.kind == CNOT:
            kernels.cnot_apply(psi, g.control, g.target)
            angle_cache.append(None)
        else:
            a = _angles_2d(g.angles, batch)
            kernels.rot_apply(psi, g.target, a)
            angle_cache.append(a)

    scores = kernels.diag_expectation(psi, diag)
    lam = psi.copy()
    kernels.diag_apply(lam, diag)

    rot_positions = _rotation_gates(gates)
    dfdangle = np.zeros((batch, len(rot_positions), 3), dtype=np.float64)
    rot_idx = len(rot_positions) - 1
    for g, a in zip(reversed(gates), reversed(angle_cache)):
        if g.kind == CNOT:
            kernels.cnot_apply(psi, g.control, g.target)
            kernels.cnot_apply(lam, g.control, g.target)
        else:
            kernels.rot_backward(psi, lam, g.target, a, dfdangle[:, rot_idx, :])
            rot_idx -= 1
    return scores, dfdangle


def _apply_bindings(dfdangle: np.ndarray, bindings: Bindings,
                    n_params: int) -> np.ndarray:
    batch, n_rot, _ = dfdangle.shape
    if len(bindings) != n_rot:
        raise ConfigurationError(
            f"got bindings for {len(bindings)} rotations, circuit has {n_rot}")
    grad = np.zeros((batch, n_params), dtype=np.float64)
    bound = np.zeros(n_params, dtype=bool)
    for k, per_gate in enumerate(bindings):
        for r, terms in enumerate(per_gate):
            for idx, coeff in terms:
                if not 0 <= idx < n_params:
                    raise ConfigurationError(f"parameter index {idx} out of range")
                grad[:, idx] += np.asarray(coeff) * dfdangle[:, k, r]
                bound[idx] = True
    if not bound.all():
        missing = int(np.flatnonzero(~bound)[0])
        raise ConfigurationError(f"parameter {missing} is not bound to any angle")
    return grad


def adjoint_gradient(gates: Sequence[GateOp], n_qubits: int,
                     trash_qubits: Sequence[int], bindings: Bindings,
                     n_params: int) -> np.ndarray:
    """Exact gradient of the trash-qubit score w.r.t. bound parameters.

    Every angle must be an affine function of the parameters as described by
    ``bindings``. Returns (n_params,) for an unbatched circuit, else
    (batch, n_params).
    """
    gates = list(gates)
    batched = _circuit_batch(gates) is not None
    _, dfdangle = adjoint_angle_gradient(gates, n_qubits, trash_qubits)
    grad = _apply_bindings(dfdangle, bindings, n_params)
    return grad if batched else grad[0]


def param_shift_angle_gradient(gates: Sequence[GateOp], n_qubits: int,
                               trash_qubits: Sequence[int]) -> np.ndarray:
    """d(score)/d(angle) via two evaluations per angle at shifts of pi/2."""
    gates = list(gates)
    _validate_gates(gates, n_qubits)
    batch = _circuit_batch(gates) or 1
    rot_positions = _rotation_gates(gates)
    out = np.zeros((batch, len(rot_positions), 3), dtype=np.float64)

    def shifted_score(gate_pos: int, angle_idx: int, shift: float) -> np.ndarray:
        shifted = []
        for i, g in enumerate(gates):
            if i == gate_pos:
                a = _angles_2d(g.angles, batch).copy()
                a[:, angle_idx] += shift
                shifted.append(GateOp(ROTATION, g.target, angles=a))
            else:
                shifted.append(g)
        st = run_circuit(shifted, n_qubits)
        return np.atleast_1d(trash_zero_probability(st, trash_qubits))

    for k, pos in enumerate(rot_positions):
        for r in range(3):
            f_plus = shifted_score(pos, r, np.pi / 2)
            f_minus = shifted_score(pos, r, -np.pi / 2)
            out[:, k, r] = (f_plus - f_minus) / 2.0
    return out


def param_shift_gradient(gates: Sequence[GateOp], n_qubits: int,
                         trash_qubits: Sequence[int], bindings: Bindings,
                         n_params: int) -> np.ndarray:
    """Parameter-shift twin of `adjoint_gradient` (gradient oracle).

    Shifts are applied per angle and chained through the affine bindings, so
    the result is exact for any binding coefficients.
    """
    gates = list(gates)
    batched = _circuit_batch(gates) is not None
    dfdangle = param_shift_angle_gradient(gates, n_qubits, trash_qubits)
    grad = _apply_bindings(dfdangle, bindings, n_params)
    return grad if batched else grad[0]
