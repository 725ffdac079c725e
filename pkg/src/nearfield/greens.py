"""Three routes to the free-space point-source kernel.

``greens_point`` evaluates the closed form ``exp(+-ik|R - x|)/(4 pi |R - x|)``
directly and serves as the oracle.  ``greens_multipole`` rebuilds it from the
mode sum over products of the regular solution at the inner radius and the
decaying solution at the outer radius, valid for ``|x| < |R|``.
``greens_asymptotic`` replaces each mode's decaying solution by its distance
expansion truncated at a chosen order, which is the per-mode image of the
operator expansion of the kernel; with the truncation order at or above the
retained degrees it coincides with the multipole sum identically, and its
error against the closed form falls off one power of ``kR`` faster for each
retained order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .special import ChiPolynomial, angles_from_unit, regular_psi, ylm_table

__all__ = [
    "GreensQuery",
    "auto_l_max",
    "greens_asymptotic",
    "greens_multipole",
    "greens_point",
]


@dataclass(frozen=True)
class GreensQuery:
    """One kernel evaluation: wavenumber, outer point, inner point, sign.

    ``sign`` is +1 for the outgoing kernel, -1 for the incoming one.  The
    mode sum converges only inside the sphere through the outer point, so
    ``|x_vec| < |R_vec|`` is enforced at construction.
    """

    k: float
    R_vec: np.ndarray
    x_vec: np.ndarray
    sign: int = +1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError("wavenumber must be positive")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 (outgoing) or -1 (incoming)")
        R = np.asarray(self.R_vec, dtype=float).reshape(3)
        x = np.asarray(self.x_vec, dtype=float).reshape(3)
        R.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "R_vec", R)
        object.__setattr__(self, "x_vec", x)
        if not np.linalg.norm(x) < np.linalg.norm(R):
            raise ValueError("require |x_vec| < |R_vec| for the mode expansion")

    @property
    def big_r(self) -> float:
        return float(np.linalg.norm(self.R_vec))

    @property
    def small_r(self) -> float:
        return float(np.linalg.norm(self.x_vec))


def greens_point(query: GreensQuery) -> complex:
    """Closed-form kernel ``exp(+-ik d)/(4 pi d)``, ``d = |R_vec - x_vec|``."""
    d = float(np.linalg.norm(query.R_vec - query.x_vec))
    if d == 0.0:
        raise ValueError("coincident source and observation points")
    return complex(np.exp(1j * query.sign * query.k * d) / (4.0 * np.pi * d))


def auto_l_max(k: float, r: float) -> int:
    """Default angular cutoff for the mode sums.

    The inner radial factor decays super-exponentially once the degree
    exceeds ``k r``; ``ceil(e * k * r) + 15`` keeps the tail below 1e-9
    relative for inner/outer ratios up to one half.
    """
    if k <= 0 or r < 0:
        raise ValueError("need k > 0 and r >= 0")
    return int(math.ceil(math.e * k * r)) + 15


def _mode_sums(query: GreensQuery, l_max: int) -> np.ndarray:
    """Azimuthal sums ``sum_m Y_l^m(R_hat) conj(Y_l^m(x_hat))`` per degree."""
    theta_n, phi_n = angles_from_unit(query.R_vec)
    theta_s, phi_s = angles_from_unit(query.x_vec)
    table_n = ylm_table(l_max, [theta_n], [phi_n])[:, 0]
    table_s = ylm_table(l_max, [theta_s], [phi_s])[:, 0]
    prod = table_n * np.conj(table_s)
    edges = np.arange(l_max + 1) ** 2
    return np.add.reduceat(prod, edges)


def _assemble(query: GreensQuery, outer_factors: np.ndarray, l_max: int) -> complex:
    k, R, r = query.k, query.big_r, query.small_r
    if r == 0.0:
        # only the degree-0 mode survives; its inner factor tends to 1
        return complex(outer_factors[0] / (4.0 * np.pi * R))
    ls = np.arange(l_max + 1)
    phases = (1j) ** (-query.sign * ls)
    psi = np.array([regular_psi(l, k * r) for l in ls])
    msums = _mode_sums(query, l_max)
    terms = outer_factors * phases * psi * msums
    return complex(np.sum(terms) / (k * r * R))


def greens_multipole(query: GreensQuery, l_max: int | None = None) -> complex:
    """Mode-sum kernel, converging to ``greens_point`` as ``l_max`` grows.

    Per degree the term is ``chi_l(-sign * i k R) i^{-sign * l}
    psi_l(k r) sum_m Y conj(Y) / (k r R)``; the default cutoff comes from
    ``auto_l_max``.
    """
    if l_max is None:
        l_max = auto_l_max(query.k, query.small_r)
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    z = -query.sign * 1j * query.k * query.big_r
    outer = np.array([ChiPolynomial.for_order(l).evaluate(z) for l in range(l_max + 1)])
    return _assemble(query, outer, l_max)


@lru_cache(maxsize=None)
def _operator_products(l: int, s_max: int) -> tuple[int, ...]:
    # prod_{mu=1}^{s} [l(l+1) - mu(mu-1)] / s! for s = 0..min(s_max, l);
    # exact integers, identical to the decaying solution's series coefficients
    out = [1]
    lam = l * (l + 1)
    acc = 1
    for s in range(1, min(s_max, l) + 1):
        acc *= lam - s * (s - 1)
        out.append(acc // math.factorial(s))
    return tuple(out)


def greens_asymptotic(
    query: GreensQuery, s_max: int, l_max: int | None = None
) -> complex:
    """Kernel with each mode's outer factor truncated at expansion order ``s_max``.

    The outer factor becomes ``exp(sign * i k R) sum_{s<=min(s_max,l)}
    g_s(l) / (2z)^s`` where ``g_s(l)`` is the order-``s`` operator product
    ``prod [l(l+1) - mu(mu-1)]/s!`` evaluated on the degree-``l`` eigenvalue.
    With ``s_max >= l_max`` every per-mode series is complete and the result
    equals ``greens_multipole`` at the same cutoff.
    """
    if s_max < 0:
        raise ValueError("s_max must be non-negative")
    if l_max is None:
        l_max = auto_l_max(query.k, query.small_r)
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    z = -query.sign * 1j * query.k * query.big_r
    expfac = np.exp(-z)
    inv2z = 1.0 / (2.0 * z)
    outer = np.empty(l_max + 1, dtype=complex)
    for l in range(l_max + 1):
        coeffs = _operator_products(l, s_max)
        acc = 0.0 + 0.0j
        for c in coeffs[::-1]:
            acc = acc * inv2z + c
        outer[l] = expfac * acc
    return _assemble(query, outer, l_max)
