# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: payoff contraction and cascade right-hand sides.

Signatures mirror ``hodyn._kernels_py``.
"""

from libc.math cimport exp

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    MAX_PLAYERS = 16


cdef void _action_payoffs(const double[:, ::1] table, const cnp.int64_t[::1] counts,
                          const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = counts.shape[0]
    cdef Py_ssize_t n_prof = table.shape[0]
    cdef Py_ssize_t k, j, p, a_total = 0
    cdef cnp.int64_t digit[MAX_PLAYERS]
    cdef Py_ssize_t offset[MAX_PLAYERS]
    cdef double pre[MAX_PLAYERS + 1]
    cdef double suf[MAX_PLAYERS + 1]
    for k in range(n):
        offset[k] = a_total
        a_total += counts[k]
        digit[k] = 0
    for k in range(a_total):
        out[k] = 0.0
    for p in range(n_prof):
        pre[0] = 1.0
        for j in range(n):
            pre[j + 1] = pre[j] * x[offset[j] + digit[j]]
        suf[n] = 1.0
        for j in range(n - 1, -1, -1):
            suf[j] = suf[j + 1] * x[offset[j] + digit[j]]
        for k in range(n):
            out[offset[k] + digit[k]] += table[p, k] * pre[k] * suf[k + 1]
        # advance the mixed-radix counter (last player fastest, C order)
        j = n - 1
        while j >= 0:
            digit[j] += 1
            if digit[j] < counts[j]:
                break
            digit[j] = 0
            j -= 1


cdef void _softmax(const double* v, Py_ssize_t n, double* out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = v[0], s = 0.0
    for i in range(1, n):
        if v[i] > m:
            m = v[i]
    for i in range(n):
        out[i] = exp(v[i] - m)
        s += out[i]
    for i in range(n):
        out[i] /= s


cdef void _gibbs(const double[::1] y, const double[::1] lambdas,
                 const cnp.int64_t[::1] counts, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k, i, off = 0, n
    cdef double buf[256]
    for k in range(counts.shape[0]):
        n = counts[k]
        for i in range(n):
            buf[i] = lambdas[k] * y[off + i]
        _softmax(buf, n, &out[off])
        off += n


cdef void _reduced_gibbs(const double[::1] z, const double[::1] lambdas,
                         const cnp.int64_t[::1] counts, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k, i, off = 0, zoff = 0, n
    cdef double buf[256]
    for k in range(counts.shape[0]):
        n = counts[k]
        buf[0] = 0.0
        for i in range(1, n):
            buf[i] = lambdas[k] * z[zoff + i - 1]
        _softmax(buf, n, &out[off])
        off += n
        zoff += n - 1


def _check_counts(const cnp.int64_t[::1] counts):
    cdef Py_ssize_t k
    if counts.shape[0] > MAX_PLAYERS:
        raise ValueError("too many players for the compiled kernel")
    for k in range(counts.shape[0]):
        if counts[k] > 256:
            raise ValueError("too many actions for the compiled kernel")


def action_payoffs(const double[:, ::1] table, const cnp.int64_t[::1] counts,
                   const double[::1] x, double[::1] out):
    _check_counts(counts)
    with nogil:
        _action_payoffs(table, counts, x, out)
    return np.asarray(out)


def gibbs_blocks(const double[::1] y, const double[::1] lambdas,
                 const cnp.int64_t[::1] counts, double[::1] out):
    _check_counts(counts)
    with nogil:
        _gibbs(y, lambdas, counts, out)
    return np.asarray(out)


def reduced_gibbs_blocks(const double[::1] z, const double[::1] lambdas,
                         const cnp.int64_t[::1] counts, double[::1] out):
    _check_counts(counts)
    with nogil:
        _reduced_gibbs(z, lambdas, counts, out)
    return np.asarray(out)


def ld_rhs(const double[:, ::1] table, const cnp.int64_t[::1] counts,
           const double[::1] lambdas, const double[::1] state, int order,
           double[::1] out):
    _check_counts(counts)
    cdef Py_ssize_t a = 0, k, i
    for k in range(counts.shape[0]):
        a += counts[k]
    cdef double[::1] x = np.empty(a)
    with nogil:
        for i in range((order - 1) * a):
            out[i] = state[a + i]
        _gibbs(state[:a], lambdas, counts, x)
        _action_payoffs(table, counts, x, out[(order - 1) * a:order * a])
    return np.asarray(out)


def zd_rhs(const double[:, ::1] table, const cnp.int64_t[::1] counts,
           const double[::1] lambdas, const double[::1] state, int order,
           double[::1] out):
    _check_counts(counts)
    cdef Py_ssize_t a = 0, m, k, i, off = 0, zoff = 0, n
    for k in range(counts.shape[0]):
        a += counts[k]
    m = a - counts.shape[0]
    cdef double[::1] x = np.empty(a)
    cdef double[::1] u = np.empty(a)
    cdef Py_ssize_t top = (order - 1) * m
    with nogil:
        for i in range(top):
            out[i] = state[m + i]
        _reduced_gibbs(state[:m], lambdas, counts, x)
        _action_payoffs(table, counts, x, u)
        for k in range(counts.shape[0]):
            n = counts[k]
            for i in range(1, n):
                out[top + zoff + i - 1] = u[off + i] - u[off]
            off += n
            zoff += n - 1
    return np.asarray(out)
