# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Viterbi kernels.

Both kernels run the max-product recursion in the log domain,

    score[t, i] = max_j (score[t-1, j] + trans(j, i)) + emission[t, i]

keeping the full score lattice instead of backpointers.  The forward pass is
then a branch-free running max the compiler can vectorize, and the
backtrack recovers each predecessor by rescanning one column with the
lowest-index-wins rule.  ``trans(j, i)`` is ``log_kernel[i - j + band] +
row_offset[j]`` for the banded kernel; the dense kernel receives the same
values pre-expanded, so both kernels return bit-identical paths.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef int _forward_banded(const double[:, ::1] emissions,
                         const double[::1] log_kernel,
                         const double[::1] row_offset,
                         Py_ssize_t band,
                         const double[::1] initial,
                         double[:, ::1] scores,
                         double[::1] row) noexcept nogil:
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t Q = emissions.shape[1]
    cdef Py_ssize_t t, i, j, lo, hi, k, n
    cdef double dj, cand, best
    cdef const double *kern
    cdef const double *prev
    cdef double *sc

    best = -INFINITY
    sc = &scores[0, 0]
    for i in range(Q):
        sc[i] = initial[i] + emissions[0, i]
        if sc[i] > best:
            best = sc[i]
    if best == -INFINITY:
        return 0

    for t in range(1, T):
        prev = &scores[t - 1, 0]
        sc = &scores[t, 0]
        for i in range(Q):
            sc[i] = -INFINITY
        for j in range(Q):
            dj = prev[j]
            if dj == -INFINITY:
                continue
            lo = j - band if j > band else 0
            hi = j + band if j + band < Q - 1 else Q - 1
            n = hi - lo + 1
            if row_offset[j] == 0.0:
                kern = &log_kernel[lo - j + band]
            else:
                for k in range(n):
                    row[k] = log_kernel[lo - j + band + k] + row_offset[j]
                kern = &row[0]
            for k in range(n):
                cand = dj + kern[k]
                sc[lo + k] = cand if cand > sc[lo + k] else sc[lo + k]
        best = -INFINITY
        for i in range(Q):
            sc[i] = sc[i] + emissions[t, i]
            best = sc[i] if sc[i] > best else best
        if best == -INFINITY:
            return <int>t
    return -1


cdef void _backtrack_banded(const double[:, ::1] scores,
                            const double[::1] log_kernel,
                            const double[::1] row_offset,
                            Py_ssize_t band,
                            long[::1] path) noexcept nogil:
    cdef Py_ssize_t T = scores.shape[0]
    cdef Py_ssize_t Q = scores.shape[1]
    cdef Py_ssize_t t, j, s, lo, hi, arg
    cdef double best, cand

    arg = 0
    best = scores[T - 1, 0]
    for j in range(1, Q):
        if scores[T - 1, j] > best:
            best = scores[T - 1, j]
            arg = j
    path[T - 1] = arg
    for t in range(T - 1, 0, -1):
        s = path[t]
        lo = s - band if s > band else 0
        hi = s + band if s + band < Q - 1 else Q - 1
        arg = lo
        best = -INFINITY
        for j in range(lo, hi + 1):
            cand = scores[t - 1, j] + (log_kernel[s - j + band] + row_offset[j])
            if cand > best:
                best = cand
                arg = j
        path[t - 1] = arg


cdef int _forward_dense(const double[:, ::1] emissions,
                        const double[:, ::1] log_trans,
                        const double[::1] initial,
                        double[:, ::1] scores) noexcept nogil:
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t Q = emissions.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double dj, cand, best
    cdef const double *prev
    cdef const double *tr
    cdef double *sc

    best = -INFINITY
    sc = &scores[0, 0]
    for i in range(Q):
        sc[i] = initial[i] + emissions[0, i]
        if sc[i] > best:
            best = sc[i]
    if best == -INFINITY:
        return 0

    for t in range(1, T):
        prev = &scores[t - 1, 0]
        sc = &scores[t, 0]
        for i in range(Q):
            sc[i] = -INFINITY
        # every (j, i) pair is scored; out-of-band entries are -inf
        for j in range(Q):
            dj = prev[j]
            tr = &log_trans[j, 0]
            for i in range(Q):
                cand = dj + tr[i]
                sc[i] = cand if cand > sc[i] else sc[i]
        best = -INFINITY
        for i in range(Q):
            sc[i] = sc[i] + emissions[t, i]
            best = sc[i] if sc[i] > best else best
        if best == -INFINITY:
            return <int>t
    return -1


cdef void _backtrack_dense(const double[:, ::1] scores,
                           const double[:, ::1] log_trans,
                           long[::1] path) noexcept nogil:
    cdef Py_ssize_t T = scores.shape[0]
    cdef Py_ssize_t Q = scores.shape[1]
    cdef Py_ssize_t t, j, s, arg
    cdef double best, cand

    arg = 0
    best = scores[T - 1, 0]
    for j in range(1, Q):
        if scores[T - 1, j] > best:
            best = scores[T - 1, j]
            arg = j
    path[T - 1] = arg
    for t in range(T - 1, 0, -1):
        s = path[t]
        arg = 0
        best = -INFINITY
        for j in range(Q):
            cand = scores[t - 1, j] + log_trans[j, s]
            if cand > best:
                best = cand
                arg = j
        path[t - 1] = arg


def decode_banded(emissions, log_kernel, row_offset, Py_ssize_t band, initial):
    """Banded decode.  Returns ``(path, log_joint, failed_frame)``.

    ``failed_frame`` is the first frame with no finite score, or -1.
    """
    cdef const double[:, ::1] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef const double[::1] lk = np.ascontiguousarray(log_kernel, dtype=np.float64)
    cdef const double[::1] off = np.ascontiguousarray(row_offset, dtype=np.float64)
    cdef const double[::1] init = np.ascontiguousarray(initial, dtype=np.float64)
    cdef Py_ssize_t T = em.shape[0], Q = em.shape[1]
    scores_arr = np.empty((T, Q), dtype=np.float64)
    path_arr = np.zeros(T, dtype=np.int_)
    cdef double[:, ::1] scores = scores_arr
    cdef double[::1] row = np.empty(2 * band + 1, dtype=np.float64)
    cdef long[::1] path = path_arr
    cdef int failed
    with nogil:
        failed = _forward_banded(em, lk, off, band, init, scores, row)
        if failed < 0:
            _backtrack_banded(scores, lk, off, band, path)
    if failed >= 0:
        return None, -np.inf, failed
    return path_arr, float(scores_arr[T - 1, path_arr[T - 1]]), -1


def decode_dense(emissions, log_trans, initial):
    """Dense O(T*Q^2) decode over a full Q x Q log matrix."""
    cdef const double[:, ::1] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef const double[:, ::1] tr = np.ascontiguousarray(log_trans, dtype=np.float64)
    cdef const double[::1] init = np.ascontiguousarray(initial, dtype=np.float64)
    cdef Py_ssize_t T = em.shape[0], Q = em.shape[1]
    scores_arr = np.empty((T, Q), dtype=np.float64)
    path_arr = np.zeros(T, dtype=np.int_)
    cdef double[:, ::1] scores = scores_arr
    cdef long[::1] path = path_arr
    cdef int failed
    with nogil:
        failed = _forward_dense(em, tr, init, scores)
        if failed < 0:
            _backtrack_dense(scores, tr, path)
    if failed >= 0:
        return None, -np.inf, failed
    return path_arr, float(scores_arr[T - 1, path_arr[T - 1]]), -1
