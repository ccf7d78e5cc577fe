"""Pure numpy fallback for the compiled convolution kernels."""
import numpy as np


def circular_convolve(a, b):
    """c[k] = sum_{i+j = k mod n} a[i] b[j]."""
    a = np.ascontiguousarray(a, dtype=complex)
    b = np.ascontiguousarray(b, dtype=complex)
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.zeros(n, complex)
    for i in np.nonzero(a)[0]:
        out += a[i] * np.roll(b, i)
    return out


def circular_convolve3(a, b, d):
    """c[k] = sum_{i+j+l = k mod n} a[i] b[j] d[l], evaluated as a triple sum."""
    a = np.ascontiguousarray(a, dtype=complex)
    b = np.ascontiguousarray(b, dtype=complex)
    d = np.ascontiguousarray(d, dtype=complex)
    n = a.shape[0]
    if b.shape[0] != n or d.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.zeros(n, complex)
    for i in range(n):
        for j in range(n):
            ab = a[i] * b[j]
            if ab != 0:
                out += ab * np.roll(d, (i + j) % n)
    return out
