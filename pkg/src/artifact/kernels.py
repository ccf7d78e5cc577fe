"""Direct-summation convolutions, compiled when available.

``BACKEND`` is ``"compiled"`` if the Cython extension imported and
``"python"`` otherwise. Setting ``ARTIFACT_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("ARTIFACT_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

__all__ = ["BACKEND", "circular_convolve", "circular_convolve3",
           "direct_product_coeffs", "direct_cubic_coeffs"]


def circular_convolve(a, b):
    return _impl.circular_convolve(np.ascontiguousarray(a, dtype=complex),
                                   np.ascontiguousarray(b, dtype=complex))


def circular_convolve3(a, b, d):
    return _impl.circular_convolve3(np.ascontiguousarray(a, dtype=complex),
                                    np.ascontiguousarray(b, dtype=complex),
                                    np.ascontiguousarray(d, dtype=complex))


def direct_product_coeffs(a, b):
    """Unitary coefficients of the pointwise product of two fields, by direct sum."""
    return circular_convolve(a, b) / np.sqrt(len(a))


def _conj_field(a):
    # coefficients of conj(u) from those of u
    n = len(a)
    return np.conj(np.asarray(a)[(-np.arange(n)) % n])


def direct_cubic_coeffs(a):
    """Unitary coefficients of |u|^2 u by the brute-force triple sum."""
    return circular_convolve3(a, _conj_field(a), a) / len(a)
