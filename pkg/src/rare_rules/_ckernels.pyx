# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bit-row kernels. Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef extern from *:
    """
    static inline int rr_popcount64(unsigned long long x) {
        return __builtin_popcountll(x);
    }
    """
    int rr_popcount64(unsigned long long x) nogil


def count_candidates(const uint64_t[:, ::1] cols, const uint64_t[::1] labels,
                     const int64_t[:, ::1] cand):
    cdef Py_ssize_t n_cand = cand.shape[0]
    cdef Py_ssize_t width = cand.shape[1]
    cdef Py_ssize_t n_words = cols.shape[1]
    cdef Py_ssize_t c, w, j
    cdef uint64_t acc
    cdef int64_t s, f
    cdef const uint64_t* lab
    cdef const uint64_t* rows[64]
    supp = np.zeros(n_cand, dtype=np.int64)
    conf = np.zeros(n_cand, dtype=np.int64)
    cdef int64_t[::1] supp_v = supp
    cdef int64_t[::1] conf_v = conf
    if width == 0 or n_words == 0:
        return supp, conf
    if width > 64:
        raise ValueError("itemsets longer than 64 items are not supported")
    lab = &labels[0]
    with nogil:
        for c in range(n_cand):
            for j in range(width):
                rows[j] = &cols[cand[c, j], 0]
            s = 0
            f = 0
            if width == 1:
                for w in range(n_words):
                    acc = rows[0][w]
                    s += rr_popcount64(acc)
                    f += rr_popcount64(acc & lab[w])
            elif width == 2:
                for w in range(n_words):
                    acc = rows[0][w] & rows[1][w]
                    s += rr_popcount64(acc)
                    f += rr_popcount64(acc & lab[w])
            else:
                for w in range(n_words):
                    acc = rows[0][w] & rows[1][w]
                    for j in range(2, width):
                        acc = acc & rows[j][w]
                    s += rr_popcount64(acc)
                    f += rr_popcount64(acc & lab[w])
            supp_v[c] = s
            conf_v[c] = f
    return supp, conf


def pattern_masks(const uint64_t[:, ::1] cols, const int64_t[:, ::1] cand):
    cdef Py_ssize_t n_cand = cand.shape[0]
    cdef Py_ssize_t width = cand.shape[1]
    cdef Py_ssize_t n_words = cols.shape[1]
    cdef Py_ssize_t c, w, j
    cdef uint64_t acc
    out = np.zeros((n_cand, n_words), dtype=np.uint64)
    cdef uint64_t[:, ::1] out_v = out
    if width == 0:
        return out
    with nogil:
        for c in range(n_cand):
            for w in range(n_words):
                acc = cols[cand[c, 0], w]
                for j in range(1, width):
                    acc = acc & cols[cand[c, j], w]
                out_v[c, w] = acc
    return out
