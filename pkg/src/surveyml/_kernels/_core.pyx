# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Each function matches the pure NumPy fallback in ``_ref.py`` bit-for-bit:
all sums run sequentially left-to-right, mirroring ``np.cumsum``, and
intermediate expressions are evaluated in the same order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def ht_concordance(double[::1] scores, double[::1] y, double[::1] w):
    """Concordance mass over (positive, negative) pairs; ties count half.

    Inputs sorted ascending by score. Returns (conc, wpos, wneg).
    """
    cdef Py_ssize_t n = scores.shape[0]
    if n == 0:
        return 0.0, 0.0, 0.0
    cdef double cpos = 0.0, cneg = 0.0
    cdef double cpos_prev, cneg_prev
    cdef double gpos, gneg, below, conc = 0.0
    cdef double wy
    cdef Py_ssize_t i = 0, j
    while i < n:
        j = i
        cpos_prev = cpos
        cneg_prev = cneg
        while j < n and scores[j] == scores[i]:
            wy = w[j] * y[j]
            cpos = cpos + wy
            cneg = cneg + (w[j] - wy)
            j += 1
        gpos = cpos - cpos_prev
        gneg = cneg - cneg_prev
        below = cneg_prev
        conc = conc + gpos * (below + 0.5 * gneg)
        i = j
    return conc, cpos, cneg


def tie_group_sums(double[::1] scores, double[::1] y, double[::1] w):
    """Per-unique-score positive/negative weight sums (ascending order)."""
    cdef Py_ssize_t n = scores.shape[0]
    if n == 0:
        empty = np.empty(0)
        return empty, empty.copy(), empty.copy()
    thr_arr = np.empty(n)
    gpos_arr = np.empty(n)
    gneg_arr = np.empty(n)
    cdef double[::1] thr = thr_arr
    cdef double[::1] gpos = gpos_arr
    cdef double[::1] gneg = gneg_arr
    cdef double cpos = 0.0, cneg = 0.0
    cdef double cpos_prev, cneg_prev
    cdef double wy
    cdef Py_ssize_t i = 0, j, k = 0
    while i < n:
        j = i
        cpos_prev = cpos
        cneg_prev = cneg
        while j < n and scores[j] == scores[i]:
            wy = w[j] * y[j]
            cpos = cpos + wy
            cneg = cneg + (w[j] - wy)
            j += 1
        thr[k] = scores[i]
        gpos[k] = cpos - cpos_prev
        gneg[k] = cneg - cneg_prev
        k += 1
        i = j
    return thr_arr[:k].copy(), gpos_arr[:k].copy(), gneg_arr[:k].copy()


def best_split(double[::1] xs, double[::1] g, double[::1] h,
               double lam, double min_leaf_h):
    """Best split position for a tree node; (gain, split_index)."""
    cdef Py_ssize_t n = xs.shape[0]
    if n < 2:
        return 0.0, 0
    cdef double gtot = 0.0, htot = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        gtot = gtot + g[i]
        htot = htot + h[i]
    cdef double parent = gtot * gtot / (htot + lam)
    cdef double gl = 0.0, hl = 0.0
    cdef double gr, hr, gain
    cdef double best = 0.0
    cdef Py_ssize_t best_idx = 0
    for i in range(n - 1):
        gl = gl + g[i]
        hl = hl + h[i]
        if xs[i + 1] == xs[i]:
            continue
        if hl < min_leaf_h:
            continue
        gr = gtot - gl
        hr = htot - hl
        if hr < min_leaf_h:
            continue
        gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
        if gain > best:
            best = gain
            best_idx = i + 1
    return best, best_idx
