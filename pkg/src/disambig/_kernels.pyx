# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mirrors of the pure-Python kernels in ``disambig.kernels``.

Same algorithms, same deterministic random stream; only the loop bodies
are lowered to C. Keep the two implementations in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

cdef extern from *:
    """
    static inline unsigned long long dk_splitmix64(unsigned long long *state) {
        unsigned long long z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long dk_splitmix64(unsigned long long *state) nogil


cdef inline double _u01(unsigned long long bits) nogil:
    return (bits >> 11) * (2.0 ** -53)


cdef inline Py_ssize_t _bisect_right(const double[::1] cum, double u) nogil:
    cdef Py_ssize_t lo = 0, hi = cum.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sgns_epoch(
    cnp.int32_t[::1] sents,
    cnp.int64_t[::1] offsets,
    double[:, ::1] w_in,
    double[:, ::1] w_out,
    const double[::1] cum_table,
    int window,
    int negatives,
    double alpha0,
    double alpha_min,
    long long tokens_done,
    long long tokens_total,
    object state,
):
    """One skip-gram negative-sampling pass; see the pure version for the
    contract. Returns (loss_sum, pair_count, tokens_done, rng_state)."""
    cdef unsigned long long st = <unsigned long long> (state & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t n_sents = offsets.shape[0] - 1
    cdef Py_ssize_t vocab = cum_table.shape[0]
    cdef Py_ssize_t dim = w_in.shape[1]
    cdef cnp.ndarray[double, ndim=1] grad_buf = np.zeros(dim, dtype=np.float64)
    cdef double[::1] grad_in = grad_buf
    cdef double loss = 0.0, alpha, z, p, g
    cdef long long pairs = 0
    cdef Py_ssize_t s, t, c, k, d, lo, hi, length, start, end, reduced
    cdef Py_ssize_t center, target, out_idx
    cdef unsigned long long r
    cdef double label

    with nogil:
        for s in range(n_sents):
            lo = offsets[s]
            hi = offsets[s + 1]
            length = hi - lo
            for t in range(length):
                alpha = alpha0 * (1.0 - tokens_done / <double> tokens_total)
                if alpha < alpha_min:
                    alpha = alpha_min
                tokens_done += 1
                center = sents[lo + t]
                r = dk_splitmix64(&st)
                reduced = <Py_ssize_t> (r % <unsigned long long> window)
                start = t - window + reduced
                if start < 0:
                    start = 0
                end = t + window - reduced + 1
                if end > length:
                    end = length
                for c in range(start, end):
                    if c == t:
                        continue
                    target = sents[lo + c]
                    for d in range(dim):
                        grad_in[d] = 0.0
                    for k in range(negatives + 1):
                        if k == 0:
                            out_idx = target
                            label = 1.0
                        else:
                            r = dk_splitmix64(&st)
                            out_idx = _bisect_right(cum_table, _u01(r))
                            if out_idx >= vocab:
                                out_idx = vocab - 1
                            if out_idx == target:
                                continue
                            label = 0.0
                        z = 0.0
                        for d in range(dim):
                            z += w_in[center, d] * w_out[out_idx, d]
                        if z > 40.0:
                            z = 40.0
                        elif z < -40.0:
                            z = -40.0
                        p = 1.0 / (1.0 + exp(-z))
                        g = (label - p) * alpha
                        if label == 1.0:
                            loss -= log(p if p > 1e-12 else 1e-12)
                        else:
                            loss -= log((1.0 - p) if (1.0 - p) > 1e-12 else 1e-12)
                        for d in range(dim):
                            grad_in[d] += g * w_out[out_idx, d]
                        for d in range(dim):
                            w_out[out_idx, d] += g * w_in[center, d]
                    for d in range(dim):
                        w_in[center, d] += grad_in[d]
                    pairs += 1
    return loss, pairs, tokens_done, int(st)


cdef inline int _intersect_size(
    const cnp.int32_t[::1] tokens,
    Py_ssize_t a_lo, Py_ssize_t a_hi,
    Py_ssize_t b_lo, Py_ssize_t b_hi,
) nogil:
    cdef int count = 0
    while a_lo < a_hi and b_lo < b_hi:
        if tokens[a_lo] < tokens[b_lo]:
            a_lo += 1
        elif tokens[a_lo] > tokens[b_lo]:
            b_lo += 1
        else:
            count += 1
            a_lo += 1
            b_lo += 1
    return count


def token_overlap_pairs(cnp.int64_t[::1] indptr, cnp.int32_t[::1] tokens):
    """Intersection sizes for every unordered row pair with nonzero overlap;
    rows are sorted unique token-id runs in CSR layout. All n*(n-1)/2 pairs
    are evaluated (count pass + fill pass)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j
    cdef long long total = 0
    cdef int c

    with nogil:
        for i in range(n):
            if indptr[i] == indptr[i + 1]:
                continue
            for j in range(i + 1, n):
                if _intersect_size(tokens, indptr[i], indptr[i + 1],
                                   indptr[j], indptr[j + 1]) > 0:
                    total += 1

    cdef cnp.ndarray[cnp.int32_t, ndim=1] ii = np.empty(total, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] jj = np.empty(total, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] cc = np.empty(total, dtype=np.int32)
    cdef cnp.int32_t[::1] ii_v = ii, jj_v = jj, cc_v = cc
    cdef long long pos = 0

    with nogil:
        for i in range(n):
            if indptr[i] == indptr[i + 1]:
                continue
            for j in range(i + 1, n):
                c = _intersect_size(tokens, indptr[i], indptr[i + 1],
                                    indptr[j], indptr[j + 1])
                if c > 0:
                    ii_v[pos] = <cnp.int32_t> i
                    jj_v[pos] = <cnp.int32_t> j
                    cc_v[pos] = c
                    pos += 1
    return ii, jj, cc
