# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched gate kernels (hot loops of the statevector engine).

Same contract as `qaead._kernels_np`: complex128 states of shape
(batch, 2**n), qubit 0 = most significant bit, in-place mutation, ZYZ
rotation convention with angles (phi, theta, omega).
"""

import numpy as np

cimport cython
from libc.math cimport cos, sin

ctypedef double complex cplx


cdef inline void _rot_entries(double phi, double theta, double omega,
                              cplx *r00, cplx *r01, cplx *r10, cplx *r11) noexcept nogil:
    cdef double c = cos(theta / 2.0)
    cdef double s = sin(theta / 2.0)
    cdef double hs = (phi + omega) / 2.0
    cdef double hd = (phi - omega) / 2.0
    cdef cplx e_sum = cos(hs) - 1j * sin(hs)
    cdef cplx e_diff = cos(hd) + 1j * sin(hd)
    r00[0] = e_sum * c
    r01[0] = -e_diff * s
    r10[0] = e_diff.conjugate() * s
    r11[0] = e_sum.conjugate() * c


def rot_matrices(const double[:, :] angles, bint dagger=False):
    """Dense 2x2 rotation matrices per batch row, complex128 (batch, 2, 2)."""
    cdef Py_ssize_t batch = angles.shape[0]
    out = np.empty((batch, 2, 2), dtype=np.complex128)
    cdef cplx[:, :, ::1] m = out
    cdef Py_ssize_t b
    cdef cplx r00, r01, r10, r11
    for b in range(batch):
        _rot_entries(angles[b, 0], angles[b, 1], angles[b, 2], &r00, &r01, &r10, &r11)
        if dagger:
            m[b, 0, 0] = r00.conjugate()
            m[b, 0, 1] = r10.conjugate()
            m[b, 1, 0] = r01.conjugate()
            m[b, 1, 1] = r11.conjugate()
        else:
            m[b, 0, 0] = r00
            m[b, 0, 1] = r01
            m[b, 1, 0] = r10
            m[b, 1, 1] = r11
    return out


def rot_apply(cplx[:, ::1] state, int qubit, const double[:, :] angles, bint dagger=False):
    """Apply the per-row rotation (or its adjoint) to `qubit`, in place."""
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> (qubit + 1)
    cdef Py_ssize_t block = half * 2
    cdef Py_ssize_t b, base, i, blk
    cdef cplx r00, r01, r10, r11, swap, u0, u1
    with nogil:
        for b in range(batch):
            _rot_entries(angles[b, 0], angles[b, 1], angles[b, 2], &r00, &r01, &r10, &r11)
            if dagger:
                r00 = r00.conjugate()
                r11 = r11.conjugate()
                swap = r01
                r01 = r10.conjugate()
                r10 = swap.conjugate()
            for blk in range(dim / block):
                base = blk * block
                for i in range(base, base + half):
                    u0 = state[b, i]
                    u1 = state[b, i + half]
                    state[b, i] = r00 * u0 + r01 * u1
                    state[b, i + half] = r10 * u0 + r11 * u1


def cnot_apply(cplx[:, ::1] state, int control, int target):
    """Flip `target` amplitudes where the `control` bit is 1, in place."""
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef int n = 0
    while (<Py_ssize_t> 1 << n) < dim:
        n += 1
    cdef Py_ssize_t cbit = (<Py_ssize_t> 1) << (n - 1 - control)
    cdef Py_ssize_t tbit = (<Py_ssize_t> 1) << (n - 1 - target)
    cdef Py_ssize_t b, z
    cdef cplx tmp
    with nogil:
        for b in range(batch):
            for z in range(dim):
                if (z & cbit) != 0 and (z & tbit) == 0:
                    tmp = state[b, z]
                    state[b, z] = state[b, z | tbit]
                    state[b, z | tbit] = tmp


def z_expectation(cplx[:, ::1] state, int qubit):
    """<Z> on `qubit` per batch row."""
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> (qubit + 1)
    cdef Py_ssize_t block = half * 2
    out = np.empty(batch, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t b, base, i, blk
    cdef double acc
    cdef cplx u
    with nogil:
        for b in range(batch):
            acc = 0.0
            for blk in range(dim / block):
                base = blk * block
                for i in range(base, base + half):
                    u = state[b, i]
                    acc += u.real * u.real + u.imag * u.imag
                    u = state[b, i + half]
                    acc -= u.real * u.real + u.imag * u.imag
            res[b] = acc
    return out


def diag_expectation(cplx[:, ::1] state, const double[::1] diag):
    """<psi|D|psi> per batch row for a real diagonal observable."""
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    out = np.empty(batch, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t b, z
    cdef double acc
    cdef cplx u
    with nogil:
        for b in range(batch):
            acc = 0.0
            for z in range(dim):
                u = state[b, z]
                acc += diag[z] * (u.real * u.real + u.imag * u.imag)
            res[b] = acc
    return out


def diag_apply(cplx[:, ::1] state, const double[::1] diag):
    """state <- D @ state for a real diagonal observable, in place."""
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t b, z
    with nogil:
        for b in range(batch):
            for z in range(dim):
                state[b, z] = state[b, z] * diag[z]


def rot_backward(cplx[:, ::1] phi_state, cplx[:, ::1] lam_state, int qubit,
                 const double[:, :] angles, double[:, :] grads_out):
    """Fused adjoint-sweep step for one rotation gate.

    Un-applies the gate from both states (post -> pre) and writes the three
    angle gradients (d phi, d theta, d omega) into grads_out, per batch row.
    """
    cdef Py_ssize_t batch = phi_state.shape[0]
    cdef Py_ssize_t dim = phi_state.shape[1]
    cdef Py_ssize_t half = dim >> (qubit + 1)
    cdef Py_ssize_t block = half * 2
    cdef Py_ssize_t b, base, i, blk
    cdef cplx r00, r01, r10, r11, a00, a01, a10, a11
    cdef cplx e_omega, u0, u1, v0, v1, nu0, nu1, nv0, nv1, t
    cdef double gphi, gtheta, gomega, w
    with nogil:
        for b in range(batch):
            _rot_entries(angles[b, 0], angles[b, 1], angles[b, 2], &r00, &r01, &r10, &r11)
            a00 = r00.conjugate()
            a01 = r10.conjugate()
            a10 = r01.conjugate()
            a11 = r11.conjugate()
            w = angles[b, 2]
            e_omega = cos(w) + 1j * sin(w)
            gphi = 0.0
            gtheta = 0.0
            gomega = 0.0
            for blk in range(dim / block):
                base = blk * block
                for i in range(base, base + half):
                    u0 = phi_state[b, i]
                    u1 = phi_state[b, i + half]
                    v0 = lam_state[b, i]
                    v1 = lam_state[b, i + half]
                    # omega generator on the post-gate pair
                    t = v0.conjugate() * u0 - v1.conjugate() * u1
                    gomega += t.imag
                    # theta generator sandwiched between the two RZ factors
                    t = e_omega * v1.conjugate() * u0 \
                        - e_omega.conjugate() * v0.conjugate() * u1
                    gtheta += t.real
                    # un-apply: pre = R^dagger @ post
                    nu0 = a00 * u0 + a01 * u1
                    nu1 = a10 * u0 + a11 * u1
                    nv0 = a00 * v0 + a01 * v1
                    nv1 = a10 * v0 + a11 * v1
                    # phi generator on the pre-gate pair
                    t = nv0.conjugate() * nu0 - nv1.conjugate() * nu1
                    gphi += t.imag
                    phi_state[b, i] = nu0
                    phi_state[b, i + half] = nu1
                    lam_state[b, i] = nv0
                    lam_state[b, i + half] = nv1
            grads_out[b, 0] = gphi
            grads_out[b, 1] = gtheta
            grads_out[b, 2] = gomega
