# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled master-equation stepping kernels.

Same contract as _kernels_py; the hot loop (RK4 over dense complex
matrices with per-step renormalization) is fused here so small systems
are not dominated by Python call overhead.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

BACKEND = "cython"


cdef void _matmul(const cplx[:, ::1] a, const cplx[:, ::1] b, cplx[:, ::1] out,
                  Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef cplx aik
    for i in range(d):
        for j in range(d):
            out[i, j] = 0
        for k in range(d):
            aik = a[i, k]
            for j in range(d):
                out[i, j] = out[i, j] + aik * b[k, j]


cdef void _matmul_bdag(const cplx[:, ::1] a, const cplx[:, ::1] b, cplx[:, ::1] out,
                       Py_ssize_t d) noexcept nogil:
    # out = a @ b.conj().T
    cdef Py_ssize_t i, j, k
    cdef cplx acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                acc = acc + a[i, k] * b[j, k].conjugate()
            out[i, j] = acc


cdef void _rhs(const cplx[:, ::1] h, const cplx[:, :, ::1] ls, const cplx[:, :, ::1] ms,
               const cplx[:, ::1] rho, cplx[:, ::1] out,
               cplx[:, ::1] t1, cplx[:, ::1] t2,
               Py_ssize_t d, Py_ssize_t nch) noexcept nogil:
    cdef Py_ssize_t i, j, c
    cdef cplx minus_i = -1j
    _matmul(h, rho, t1, d)
    _matmul(rho, h, t2, d)
    for i in range(d):
        for j in range(d):
            out[i, j] = minus_i * (t1[i, j] - t2[i, j])
    for c in range(nch):
        _matmul(ls[c], rho, t1, d)
        _matmul_bdag(t1, ls[c], t2, d)
        for i in range(d):
            for j in range(d):
                out[i, j] = out[i, j] + t2[i, j]
        _matmul(ms[c], rho, t1, d)
        _matmul(rho, ms[c], t2, d)
        for i in range(d):
            for j in range(d):
                out[i, j] = out[i, j] - 0.5 * (t1[i, j] + t2[i, j])


cdef double _rk4_step(const cplx[:, ::1] h, const cplx[:, :, ::1] ls, const cplx[:, :, ::1] ms,
                      cplx[:, ::1] rho, double dt,
                      cplx[:, ::1] k1, cplx[:, ::1] k2, cplx[:, ::1] k3,
                      cplx[:, ::1] k4, cplx[:, ::1] mid,
                      cplx[:, ::1] t1, cplx[:, ::1] t2,
                      Py_ssize_t d, Py_ssize_t nch) noexcept nogil:
    """One renormalized RK4 step in place; returns |trace - 1| before renorm."""
    cdef Py_ssize_t i, j
    cdef double tr, drift
    _rhs(h, ls, ms, rho, k1, t1, t2, d, nch)
    for i in range(d):
        for j in range(d):
            mid[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
    _rhs(h, ls, ms, mid, k2, t1, t2, d, nch)
    for i in range(d):
        for j in range(d):
            mid[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
    _rhs(h, ls, ms, mid, k3, t1, t2, d, nch)
    for i in range(d):
        for j in range(d):
            mid[i, j] = rho[i, j] + dt * k3[i, j]
    _rhs(h, ls, ms, mid, k4, t1, t2, d, nch)
    for i in range(d):
        for j in range(d):
            rho[i, j] = rho[i, j] + (dt / 6.0) * (
                k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    tr = 0.0
    for i in range(d):
        tr += rho[i, i].real
    drift = tr - 1.0
    if drift < 0:
        drift = -drift
    for i in range(d):
        for j in range(d):
            rho[i, j] = rho[i, j] / tr
    return drift


cdef double _herm_residue(cplx[:, ::1] rho, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double worst = 0.0, mag
    cdef cplx diff
    for i in range(d):
        for j in range(d):
            diff = rho[i, j] - rho[j, i].conjugate()
            mag = abs(diff)
            if mag > worst:
                worst = mag
    return worst


cdef cplx _obs_trace(const cplx[:, ::1] v, const cplx[:, ::1] rho, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx acc = 0
    for i in range(d):
        for j in range(d):
            acc = acc + v[i, j] * rho[j, i]
    return acc


def lindblad_rhs(h, ls, ms, rho):
    h = np.ascontiguousarray(h, dtype=np.complex128)
    ls = np.ascontiguousarray(ls, dtype=np.complex128)
    ms = np.ascontiguousarray(ms, dtype=np.complex128)
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef Py_ssize_t d = rho.shape[0]
    out = np.empty((d, d), dtype=np.complex128)
    t1 = np.empty((d, d), dtype=np.complex128)
    t2 = np.empty((d, d), dtype=np.complex128)
    _rhs(h, ls, ms, rho, out, t1, t2, d, ls.shape[0])
    return out


def rk4_run(h, ls, ms, rho, double dt, Py_ssize_t steps, obs):
    """Evolve ``steps`` RK4 steps, recording tr(obs[k] rho) after each."""
    h = np.ascontiguousarray(h, dtype=np.complex128)
    ls = np.ascontiguousarray(ls, dtype=np.complex128)
    ms = np.ascontiguousarray(ms, dtype=np.complex128)
    obs = np.ascontiguousarray(obs, dtype=np.complex128)
    state = np.array(rho, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t d = state.shape[0]
    cdef Py_ssize_t nch = ls.shape[0]
    cdef Py_ssize_t n_obs = obs.shape[0]
    traces = np.empty((n_obs, steps + 1), dtype=np.complex128)

    cdef cplx[:, ::1] rho_v = state
    cdef const cplx[:, ::1] h_v = h
    cdef const cplx[:, :, ::1] ls_v = ls
    cdef const cplx[:, :, ::1] ms_v = ms
    cdef const cplx[:, :, ::1] obs_v = obs
    cdef cplx[:, ::1] traces_v = traces

    k1 = np.empty((d, d), dtype=np.complex128)
    k2 = np.empty((d, d), dtype=np.complex128)
    k3 = np.empty((d, d), dtype=np.complex128)
    k4 = np.empty((d, d), dtype=np.complex128)
    mid = np.empty((d, d), dtype=np.complex128)
    t1 = np.empty((d, d), dtype=np.complex128)
    t2 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k1_v = k1, k2_v = k2, k3_v = k3, k4_v = k4
    cdef cplx[:, ::1] mid_v = mid, t1_v = t1, t2_v = t2

    cdef double max_herm = 0.0, max_drift = 0.0, drift, herm
    cdef Py_ssize_t j, k
    with nogil:
        for k in range(n_obs):
            traces_v[k, 0] = _obs_trace(obs_v[k], rho_v, d)
        for j in range(1, steps + 1):
            drift = _rk4_step(h_v, ls_v, ms_v, rho_v, dt, k1_v, k2_v, k3_v,
                              k4_v, mid_v, t1_v, t2_v, d, nch)
            if drift > max_drift:
                max_drift = drift
            herm = _herm_residue(rho_v, d)
            if herm > max_herm:
                max_herm = herm
            for k in range(n_obs):
                traces_v[k, j] = _obs_trace(obs_v[k], rho_v, d)
    return state, traces, max_herm, max_drift


def rk4_states(h, ls, ms, rho, double dt, Py_ssize_t steps):
    """Like rk4_run but stores the full renormalized trajectory."""
    h = np.ascontiguousarray(h, dtype=np.complex128)
    ls = np.ascontiguousarray(ls, dtype=np.complex128)
    ms = np.ascontiguousarray(ms, dtype=np.complex128)
    state = np.array(rho, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t d = state.shape[0]
    cdef Py_ssize_t nch = ls.shape[0]
    states = np.empty((steps + 1, d, d), dtype=np.complex128)
    states[0] = state

    cdef cplx[:, ::1] rho_v = state
    cdef const cplx[:, ::1] h_v = h
    cdef const cplx[:, :, ::1] ls_v = ls
    cdef const cplx[:, :, ::1] ms_v = ms
    cdef cplx[:, :, ::1] states_v = states

    k1 = np.empty((d, d), dtype=np.complex128)
    k2 = np.empty((d, d), dtype=np.complex128)
    k3 = np.empty((d, d), dtype=np.complex128)
    k4 = np.empty((d, d), dtype=np.complex128)
    mid = np.empty((d, d), dtype=np.complex128)
    t1 = np.empty((d, d), dtype=np.complex128)
    t2 = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] k1_v = k1, k2_v = k2, k3_v = k3, k4_v = k4
    cdef cplx[:, ::1] mid_v = mid, t1_v = t1, t2_v = t2

    cdef double max_herm = 0.0, max_drift = 0.0, drift, herm
    cdef Py_ssize_t j, i, jj
    with nogil:
        for j in range(1, steps + 1):
            drift = _rk4_step(h_v, ls_v, ms_v, rho_v, dt, k1_v, k2_v, k3_v,
                              k4_v, mid_v, t1_v, t2_v, d, nch)
            if drift > max_drift:
                max_drift = drift
            herm = _herm_residue(rho_v, d)
            if herm > max_herm:
                max_herm = herm
            for i in range(d):
                for jj in range(d):
                    states_v[j, i, jj] = rho_v[i, jj]
    return states, max_herm, max_drift
