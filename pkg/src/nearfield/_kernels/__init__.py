"""Kernel backend selection.

The compiled extension is optional.  Set ``NEARFIELD_PURE_PYTHON=1`` to force
the NumPy fallback even when the extension is importable; ``HAVE_COMPILED``
reports whether the extension was built, ``BACKEND`` which one is active.

The two backends win in different regimes: the fallback delegates large
contractions to BLAS through ``einsum``, while the compiled loops avoid the
dispatch overhead that dominates small per-direction evaluations.  When both
are available, ``quadratic_form`` routes on the contraction work
``n_modes**2 * n_points`` (crossover measured at roughly 1e5 on commodity
x86); ``weighted_pair_sum`` is small enough that the compiled loop always
wins.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

try:
    from . import _quadform as _compiled

    HAVE_COMPILED = True
except ImportError:
    _compiled = None
    HAVE_COMPILED = False

_FORCE_PURE = os.environ.get("NEARFIELD_PURE_PYTHON", "").strip() not in ("", "0")

_WORK_THRESHOLD = 100_000


def _quadratic_form_dispatch(mode_table, pair_matrix):
    work = mode_table.shape[0] ** 2 * mode_table.shape[1]
    if work <= _WORK_THRESHOLD:
        return _compiled.quadratic_form(
            np.ascontiguousarray(mode_table), np.ascontiguousarray(pair_matrix)
        )
    return fallback.quadratic_form(mode_table, pair_matrix)


def _weighted_pair_sum_dispatch(coefficients, pair_matrix, gram):
    return _compiled.weighted_pair_sum(
        np.ascontiguousarray(coefficients),
        np.ascontiguousarray(pair_matrix),
        np.ascontiguousarray(gram),
    )


if HAVE_COMPILED and not _FORCE_PURE:
    BACKEND = "compiled"
    quadratic_form = _quadratic_form_dispatch
    weighted_pair_sum = _weighted_pair_sum_dispatch
else:
    BACKEND = "fallback"
    quadratic_form = fallback.quadratic_form
    weighted_pair_sum = fallback.weighted_pair_sum

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "fallback",
    "quadratic_form",
    "weighted_pair_sum",
]
