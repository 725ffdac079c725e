"""Pure-NumPy reference implementations of the contraction kernels."""

from __future__ import annotations

import numpy as np


def quadratic_form(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Return ``out[p] = sum_{a,b} conj(g[a, p]) * w[a, b] * g[b, p]``."""
    if w.shape != (g.shape[0], g.shape[0]):
        raise ValueError("pair matrix shape does not match mode count")
    return np.einsum("ap,ab,bp->p", g.conj(), w, g, optimize=True)


def weighted_pair_sum(coeff: np.ndarray, w: np.ndarray, gram: np.ndarray) -> complex:
    """Return ``sum_{a,b} conj(coeff[a]) * coeff[b] * w[a, b] * gram[a, b]``."""
    n = coeff.shape[0]
    if w.shape != (n, n) or gram.shape != (n, n):
        raise ValueError("pair matrix shape does not match mode count")
    return complex(np.einsum("a,b,ab,ab->", coeff.conj(), coeff, w, gram, optimize=True))
