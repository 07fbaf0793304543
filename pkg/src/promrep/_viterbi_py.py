"""Pure numpy fallback for the compiled Viterbi kernels.

Same recursion, same evaluation order of every floating-point add and the
same lowest-index tie-break as ``_viterbi.pyx``; results are bit-identical.
"""

import numpy as np


def _backtrack(scores, column):
    T = scores.shape[0]
    path = np.zeros(T, dtype=np.int_)
    # argmax returns the first maximum, i.e. the lowest state index
    path[-1] = np.argmax(scores[-1])
    for t in range(T - 1, 0, -1):
        lo, cand = column(scores[t - 1], path[t])
        path[t - 1] = lo + np.argmax(cand)
    return path


def decode_banded(emissions, log_kernel, row_offset, band, initial):
    emissions = np.ascontiguousarray(emissions, dtype=np.float64)
    log_kernel = np.asarray(log_kernel, dtype=np.float64)
    row_offset = np.asarray(row_offset, dtype=np.float64)
    T, Q = emissions.shape
    scores = np.empty((T, Q))

    scores[0] = np.asarray(initial, dtype=np.float64) + emissions[0]
    if not np.any(scores[0] > -np.inf):
        return None, -np.inf, 0

    for t in range(1, T):
        prev = scores[t - 1]
        best = np.full(Q, -np.inf)
        for off in range(-band, band + 1):
            # destination i = source j - off
            if off < 0:
                dst, src = slice(-off, Q), slice(0, Q + off)
            else:
                dst, src = slice(0, Q - off), slice(off, Q)
            cand = prev[src] + (log_kernel[band - off] + row_offset[src])
            np.maximum(best[dst], cand, out=best[dst])
        scores[t] = best + emissions[t]
        if not np.any(scores[t] > -np.inf):
            return None, -np.inf, t

    def column(prev, s):
        lo, hi = max(0, s - band), min(Q - 1, s + band)
        j = np.arange(lo, hi + 1)
        return lo, prev[lo:hi + 1] + (log_kernel[s - j + band] + row_offset[lo:hi + 1])

    path = _backtrack(scores, column)
    return path, float(scores[-1, path[-1]]), -1


def decode_dense(emissions, log_trans, initial):
    emissions = np.ascontiguousarray(emissions, dtype=np.float64)
    log_trans = np.asarray(log_trans, dtype=np.float64)
    T, Q = emissions.shape
    scores = np.empty((T, Q))

    scores[0] = np.asarray(initial, dtype=np.float64) + emissions[0]
    if not np.any(scores[0] > -np.inf):
        return None, -np.inf, 0

    for t in range(1, T):
        scores[t] = np.max(scores[t - 1][:, None] + log_trans, axis=0) + emissions[t]
        if not np.any(scores[t] > -np.inf):
            return None, -np.inf, t

    path = _backtrack(scores, lambda prev, s: (0, prev + log_trans[:, s]))
    return path, float(scores[-1, path[-1]]), -1
