# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Mirrors ``scanfit._kernels._fallback``; see that module for the contracts.
"""

import numpy as np

BACKEND = "compiled"

KIND_REAL = 0
KIND_PAIR_FIRST = 1
KIND_PAIR_SECOND = 2


def rational_eval(const double complex[::1] s,
                  const double complex[::1] poles,
                  const double complex[::1] residues,
                  double d_term):
    cdef Py_ssize_t n_s = s.shape[0]
    cdef Py_ssize_t n_p = poles.shape[0]
    out = np.empty(n_s, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t k, n
    cdef double complex acc
    for k in range(n_s):
        acc = d_term
        for n in range(n_p):
            acc = acc + residues[n] / (s[k] - poles[n])
        o[k] = acc
    return out


def partial_fraction_basis(const double complex[::1] s,
                           const double complex[::1] poles,
                           const signed char[::1] kinds):
    cdef Py_ssize_t n_s = s.shape[0]
    cdef Py_ssize_t n_p = poles.shape[0]
    out = np.empty((n_s, n_p), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t k, n
    cdef double complex jj = 1j
    for n in range(n_p):
        if kinds[n] == KIND_REAL:
            for k in range(n_s):
                o[k, n] = 1.0 / (s[k] - poles[n])
        elif kinds[n] == KIND_PAIR_FIRST:
            for k in range(n_s):
                o[k, n] = 1.0 / (s[k] - poles[n]) + 1.0 / (s[k] - poles[n + 1])
        else:
            for k in range(n_s):
                o[k, n] = jj * (1.0 / (s[k] - poles[n - 1]) - 1.0 / (s[k] - poles[n]))
    return out


def affine_propagate(const double[:, ::1] step_matrix,
                     const double[::1] step_offset,
                     const double[::1] x0,
                     Py_ssize_t stride,
                     Py_ssize_t n_records):
    cdef Py_ssize_t n = x0.shape[0]
    out = np.empty((n_records, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    x_arr = np.array(x0, dtype=np.float64, copy=True)
    nxt_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] nxt = nxt_arr
    cdef double[::1] tmp
    cdef Py_ssize_t rec, step, i, j
    cdef double acc
    for rec in range(n_records):
        for i in range(n):
            o[rec, i] = x[i]
        if rec == n_records - 1:
            break
        for step in range(stride):
            for i in range(n):
                acc = step_offset[i]
                for j in range(n):
                    acc += step_matrix[i, j] * x[j]
                nxt[i] = acc
            tmp = x
            x = nxt
            nxt = tmp
    return out
