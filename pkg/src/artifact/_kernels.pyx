# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Direct-summation convolution kernels (compiled)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def circular_convolve(const double complex[::1] a, const double complex[::1] b):
    """c[k] = sum_{i+j = k mod n} a[i] b[j]."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double complex ai
    out = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] c = out
    if b.shape[0] != n:
        raise ValueError("length mismatch")
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        k = i
        for j in range(n):
            c[k] += ai * b[j]
            k += 1
            if k == n:
                k = 0
    return out


def circular_convolve3(const double complex[::1] a, const double complex[::1] b,
                       const double complex[::1] d):
    """c[k] = sum_{i+j+l = k mod n} a[i] b[j] d[l], evaluated as a triple sum."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, l, k
    cdef double complex ab
    out = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] c = out
    if b.shape[0] != n or d.shape[0] != n:
        raise ValueError("length mismatch")
    for i in range(n):
        for j in range(n):
            ab = a[i] * b[j]
            if ab == 0:
                continue
            k = (i + j) % n
            for l in range(n):
                c[k] += ab * d[l]
                k += 1
                if k == n:
                    k = 0
    return out
