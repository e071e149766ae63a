# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled LIF time loop. Mirrors ``lifmap._kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def lif_run(const double[:, ::1] charges,
            const double[::1] decay,
            const double[::1] c_m,
            const double[::1] v_th,
            bint linear_reset,
            const double[::1] v0,
            bint record=False):
    cdef Py_ssize_t n = charges.shape[0]
    cdef Py_ssize_t steps = charges.shape[1]
    cdef Py_ssize_t i, t
    cdef double v, h, d, cm, th

    spikes_arr = np.zeros((n, steps), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] spikes = spikes_arr
    cdef double[:, ::1] v_tr
    cdef double[:, ::1] h_tr
    if record:
        v_arr = np.empty((n, steps), dtype=np.float64)
        h_arr = np.empty((n, steps), dtype=np.float64)
    else:
        v_arr = np.empty((0, 0), dtype=np.float64)
        h_arr = np.empty((0, 0), dtype=np.float64)
    v_tr = v_arr
    h_tr = h_arr

    with nogil:
        for i in range(n):
            v = v0[i]
            d = decay[i]
            cm = c_m[i]
            th = v_th[i]
            for t in range(steps):
                h = v * d + charges[i, t] / cm
                if h >= th:
                    spikes[i, t] = 1
                    if linear_reset:
                        v = h - th
                    else:
                        v = 0.0
                else:
                    v = h
                if record:
                    v_tr[i, t] = v
                    h_tr[i, t] = h
    if record:
        return spikes_arr, v_arr, h_arr
    return spikes_arr, None, None
