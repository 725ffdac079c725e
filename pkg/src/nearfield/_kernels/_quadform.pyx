# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mode-pair contraction kernels.

Hot loop behind the pointwise flux evaluator: for every sample direction the
flux is a sesquilinear form of the per-mode wave values with a dense pair
matrix.  The Python fallback in ``fallback.py`` computes the same quantities
with NumPy; the two must agree to rounding.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def quadratic_form(cnp.ndarray[cnp.complex128_t, ndim=2] g,
                   cnp.ndarray[cnp.complex128_t, ndim=2] w):
    """Return ``out[p] = sum_{a,b} conj(g[a, p]) * w[a, b] * g[b, p]``.

    Parameters
    ----------
    g : complex ndarray, shape (n_modes, n_points)
        Per-mode values at each sample point.
    w : complex ndarray, shape (n_modes, n_modes)
        Pair matrix.
    """
    cdef Py_ssize_t n_modes = g.shape[0]
    cdef Py_ssize_t n_points = g.shape[1]
    if w.shape[0] != n_modes or w.shape[1] != n_modes:
        raise ValueError("pair matrix shape does not match mode count")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(n_points, dtype=np.complex128)
    cdef Py_ssize_t a, b, p
    cdef double complex acc, row
    for p in range(n_points):
        acc = 0
        for a in range(n_modes):
            row = 0
            for b in range(n_modes):
                row = row + w[a, b] * g[b, p]
            acc = acc + row * g[a, p].conjugate()
        out[p] = acc
    return out


def weighted_pair_sum(cnp.ndarray[cnp.complex128_t, ndim=1] coeff,
                      cnp.ndarray[cnp.complex128_t, ndim=2] w,
                      cnp.ndarray[cnp.complex128_t, ndim=2] gram):
    """Return ``sum_{a,b} conj(coeff[a]) * coeff[b] * w[a, b] * gram[a, b]``."""
    cdef Py_ssize_t n_modes = coeff.shape[0]
    if w.shape[0] != n_modes or w.shape[1] != n_modes:
        raise ValueError("pair matrix shape does not match mode count")
    if gram.shape[0] != n_modes or gram.shape[1] != n_modes:
        raise ValueError("gram matrix shape does not match mode count")
    cdef double complex acc = 0
    cdef Py_ssize_t a, b
    for a in range(n_modes):
        for b in range(n_modes):
            acc = acc + coeff[a].conjugate() * coeff[b] * w[a, b] * gram[a, b]
    return complex(acc)
