# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled binding-neuron loop; must match fallback.bind_cycle_loop exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def bind_cycle_loop(t0, t1, int n_steps, int n_cycles, bint bind_mode):
    cdef cnp.int64_t[::1] a = np.ascontiguousarray(t0, dtype=np.int64)
    cdef cnp.int64_t[::1] b = np.ascontiguousarray(t1, dtype=np.int64)
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t j
    cdef long long v, v_new, stamp, n_fired = 0
    cdef int tau, phase, clock
    cdef int total = n_steps * n_cycles
    cdef int tail = (n_cycles - 1) * n_steps
    cdef bint live
    with nogil:
        for j in range(n):
            live = a[j] >= 0 and b[j] >= 0
            v = 0
            for tau in range(total):
                phase = tau % n_steps
                v_new = v + 1
                if a[j] == phase:
                    v_new -= v
                if b[j] == phase:
                    clock = (phase - n_steps) if bind_mode else -phase
                    v_new -= clock
                if v_new >= n_steps:
                    if live:
                        n_fired += 1
                        if tau >= tail:
                            # C % can return negatives; fold into [0, T)
                            stamp = (tau + 1 - (v_new - n_steps)) % n_steps
                            out[j] = (stamp + n_steps) % n_steps
                    v_new = 0
                v = v_new
    return out_arr, int(n_fired)
