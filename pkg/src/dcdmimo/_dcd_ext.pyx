# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Sequential DCD with bound.

Mirrors ``_dcd_py._solve`` operation for operation; see that module for the
meaning of the counter columns.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef void _solve(const double[:, ::1] A, const double[::1] b, double[::1] x,
                 double[::1] r, long long[::1] cnt, double* alpha_out,
                 double h_step, double bound, long long max_updates,
                 long long max_halvings) noexcept nogil:
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i, j
    cdef double alpha = h_step
    cdef double ri, t
    cdef long long m = 0, k = 0
    cdef long long adds = 0, comps = 0, shifts = 0, passes = 0
    cdef bint updated = False

    for i in range(n):
        x[i] = 0.0
        r[i] = b[i]
    while m < max_halvings:
        passes += 1
        for i in range(n):
            ri = r[i]
            comps += 1
            shifts += 1
            if (alpha * 0.5) * A[i, i] < fabs(ri):
                if ri > 0.0:
                    t = x[i] + alpha
                else:
                    t = x[i] - alpha
                adds += 1
                comps += 1
                if fabs(t) <= bound:
                    x[i] = t
                    if ri > 0.0:
                        for j in range(n):
                            r[j] -= alpha * A[i, j]
                    else:
                        for j in range(n):
                            r[j] += alpha * A[i, j]
                    adds += n
                    shifts += n
                    k += 1
                    updated = True
        if k >= max_updates:
            break
        if updated:
            updated = False
        else:
            m += 1
            alpha *= 0.5
            shifts += 1
    cnt[0] = adds
    cnt[1] = comps
    cnt[2] = shifts
    cnt[3] = k
    cnt[4] = passes
    alpha_out[0] = alpha


def dcd_bound_batch(A, b, double h_step, double bound, long long max_updates,
                    long long max_halvings):
    """Compiled twin of :func:`dcdmimo._dcd_py.dcd_bound_batch`."""
    cdef const double[:, :, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n_prob = bv.shape[0], n = bv.shape[1], p
    x = np.zeros((n_prob, n))
    r = np.zeros((n_prob, n))
    counts = np.zeros((n_prob, 5), dtype=np.int64)
    alpha = np.zeros(n_prob)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] rv = r
    cdef long long[:, ::1] cv = counts
    cdef double[::1] av = alpha
    with nogil:
        for p in range(n_prob):
            _solve(Av[p], bv[p], xv[p], rv[p], cv[p], &av[p], h_step, bound,
                   max_updates, max_halvings)
    return x, r, counts, alpha
