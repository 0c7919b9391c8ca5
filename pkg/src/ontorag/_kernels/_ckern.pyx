# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-path kernels: trigram bucket hashing and row-wise dot products.

Semantics must stay in lockstep with ontorag._kernels.fallback; the test
suite asserts agreement between the two backends.
"""

import numpy as np

from libc.stdint cimport uint64_t


cdef uint64_t FNV_OFFSET = 14695981039346656037ULL
cdef uint64_t FNV_PRIME = 1099511628211ULL


def trigram_bucket_counts(unicode text, int dims):
    """Count hashed character trigrams of ``text`` into ``dims`` buckets.

    Each trigram is hashed with FNV-1a 64 over its three code points,
    four little-endian bytes per code point; the bucket is hash % dims.
    """
    cdef Py_ssize_t n = len(text)
    out = np.zeros(dims, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef int k, s
    cdef uint64_t h, cp
    if n >= 3:
        for i in range(n - 2):
            h = FNV_OFFSET
            for k in range(3):
                cp = <uint64_t>(<Py_UCS4>text[i + k])
                for s in range(4):
                    h = (h ^ ((cp >> (8 * s)) & <uint64_t>0xFF)) * FNV_PRIME
            ov[<Py_ssize_t>(h % <uint64_t>dims)] += 1.0
    return out


def rowwise_dot(const double[:, ::1] mat, const double[::1] q):
    """Dot product of every row of ``mat`` with ``q``, accumulated left to right."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    if q.shape[0] != d:
        raise ValueError("vector length does not match matrix width")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += mat[i, j] * q[j]
        ov[i] = acc
    return out
