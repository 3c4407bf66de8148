# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels; see _kernels_py for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def sq_dists(const double[:, ::1] num, const cnp.intp_t[:, ::1] codes,
             const double[:, :, ::1] tables, const double[::1] pnum,
             const cnp.intp_t[::1] pcodes):
    cdef Py_ssize_t n = num.shape[0], p = num.shape[1], q = codes.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, t
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(p):
                t = num[i, j] - pnum[j]
                acc = acc + t * t
            for j in range(q):
                t = tables[j, codes[i, j], pcodes[j]]
                acc = acc + t * t
            o[i] = acc
    return out


def linkage(const double[:, ::1] num_o, const cnp.intp_t[:, ::1] codes_o,
            const double[:, ::1] num_m, const cnp.intp_t[:, ::1] codes_m,
            const double[:, :, ::1] tables, double tol):
    cdef Py_ssize_t n_o = num_o.shape[0], n_m = num_m.shape[0]
    cdef Py_ssize_t p = num_o.shape[1], q = codes_o.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc, t, best
    hits_arr = np.zeros(n_m, dtype=np.uint8)
    ties_arr = np.zeros(n_m, dtype=np.intp)
    dist_arr = np.empty(n_o, dtype=np.float64)
    cdef cnp.uint8_t[::1] hits = hits_arr
    cdef cnp.intp_t[::1] ties = ties_arr
    cdef double[::1] d = dist_arr
    with nogil:
        for j in range(n_m):
            best = 1e308
            for i in range(n_o):
                acc = 0.0
                for c in range(p):
                    t = num_o[i, c] - num_m[j, c]
                    acc = acc + t * t
                for c in range(q):
                    t = tables[c, codes_m[j, c], codes_o[i, c]]
                    acc = acc + t * t
                d[i] = sqrt(acc)
                if d[i] < best:
                    best = d[i]
            for i in range(n_o):
                if d[i] <= best + tol:
                    ties[j] += 1
                    if i == j:
                        hits[j] = 1
    return hits_arr, ties_arr
