# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled round kernels; semantics match `_kernels_py` exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _decomposed_into(const double[:, ::1] p_mat,
                           const double[::1] a_ab,
                           const double[::1] a_ba,
                           const double[::1] a_bb,
                           const double[:, ::1] alpha,
                           const double[:, ::1] beta,
                           double[:, ::1] out_a,
                           double[:, ::1] out_b) noexcept nogil:
    cdef Py_ssize_t m = alpha.shape[0]
    cdef Py_ssize_t n = alpha.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(m):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += p_mat[i, j] * alpha[t, j]
            out_a[t, i] = acc + a_ab[i] * beta[t, i]
            out_b[t, i] = a_ba[i] * alpha[t, i] + a_bb[i] * beta[t, i]


def decomposed_round(const double[:, ::1] p_mat,
                     const double[::1] a_ab,
                     const double[::1] a_ba,
                     const double[::1] a_bb,
                     const double[:, ::1] alpha,
                     const double[:, ::1] beta):
    cdef Py_ssize_t m = alpha.shape[0]
    cdef Py_ssize_t n = alpha.shape[1]
    out_a = np.empty((m, n), dtype=np.float64)
    out_b = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] va = out_a
    cdef double[:, ::1] vb = out_b
    _decomposed_into(p_mat, a_ab, a_ba, a_bb, alpha, beta, va, vb)
    return out_a, out_b


def baseline_round(const double[:, ::1] p_mat, const double[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] vo = out
    cdef Py_ssize_t t, i, j
    cdef double acc
    with nogil:
        for t in range(m):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += p_mat[i, j] * x[t, j]
                vo[t, i] = acc
    return out


def run_steady_rounds(const double[:, ::1] p_mat,
                      const double[::1] a_ab,
                      const double[::1] a_ba,
                      const double[::1] a_bb,
                      alpha,
                      beta,
                      Py_ssize_t n_rounds,
                      double[:, :, ::1] history):
    """Run rounds back to back; history[r] receives the post-round alpha.

    The history rows double as the alpha buffers, so only beta needs a
    scratch pair.
    """
    cdef Py_ssize_t m = history.shape[1]
    cdef Py_ssize_t n = history.shape[2]
    cur_a_arr = np.ascontiguousarray(alpha, dtype=np.float64)
    cur_b_arr = np.ascontiguousarray(beta, dtype=np.float64).copy()
    nxt_b_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] cur_a = cur_a_arr
    cdef double[:, ::1] cur_b = cur_b_arr
    cdef double[:, ::1] nxt_b = nxt_b_arr
    cdef double[:, ::1] tmp
    cdef Py_ssize_t r
    for r in range(n_rounds):
        _decomposed_into(p_mat, a_ab, a_ba, a_bb, cur_a, cur_b,
                         history[r], nxt_b)
        cur_a = history[r]
        tmp = cur_b
        cur_b = nxt_b
        nxt_b = tmp
    if n_rounds == 0:
        return cur_a_arr.copy(), cur_b_arr
    final_b = cur_b_arr if n_rounds % 2 == 0 else nxt_b_arr
    return np.asarray(history[n_rounds - 1]).copy(), final_b
