"""Exact radial pair algebra behind the finite-distance flux.

For two decaying radial solutions, one entering directly with degree ``j``
and one through its complex conjugate with degree ``l``, the radial
probability current of a superposition involves the combination

    HW(j, l; z) = -(1/2) * [chi_l(-z) chi_j'(z) + chi_l'(-z) chi_j(z)]

evaluated at ``z = -i k r`` for outgoing waves.  Because the decaying
solutions terminate, the exponential factors cancel identically and ``HW``
is an exact Laurent polynomial in ``u = 1/(2z)``.  This module computes the
Laurent coefficients exactly (as rationals) through two independent routes
and exposes fast float evaluation for flux assembly.

Structure worth knowing: the constant term is 1 for every pair, and the
diagonal ``j == l`` is *exactly* 1 at every distance, which is why the total
flux through any sphere is distance-independent.  Off-diagonal pairs carry a
terminating correction

    HW = 1 + delta * sum_{n >= 0} A_n u**(n+1) / (n+1),
    delta = j(j+1) - l(l+1),

whose coefficients ``A_n`` are exactly the product coefficients of the two
terminating series, ``A_n = [u**n] P_l(-u) P_j(u)``.  These corrections are
the whole content of pre-asymptotic flux behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .special import ChiPolynomial, chi_coefficient

__all__ = [
    "IntegralCheckReport",
    "WronskianSeries",
    "half_wronskian_exact",
    "integral_representation_check",
    "laurent_coefficients",
    "pair_matrix",
    "wronskian_series",
]


# ----------------------------------------------------------------------
# exact polynomial helpers (ascending coefficient tuples of Fractions)
# ----------------------------------------------------------------------

def _poly_mul(p: tuple[Fraction, ...], q: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        for k, qk in enumerate(q):
            out[i + k] += pi * qk
    return tuple(out)


def _poly_diff(p: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    if len(p) <= 1:
        return (Fraction(0),)
    return tuple(Fraction(n) * c for n, c in enumerate(p))[1:]


def _series_poly(order: int, negate: bool) -> tuple[Fraction, ...]:
    sign = -1 if negate else 1
    return tuple(chi_coefficient(order, s) * sign**s for s in range(order + 1))


@lru_cache(maxsize=None)
def _combination_laurent(conj_deg: int, dir_deg: int) -> tuple[Fraction, ...]:
    """Laurent coefficients of HW via the current combination itself.

    ``q * p + u**2 * (q p' - q' p)`` with ``q = P_conj(-u)``, ``p = P_dir(u)``,
    which is the chain-rule image of the defining derivative combination.
    """
    q = _series_poly(conj_deg, negate=True)
    p = _series_poly(dir_deg, negate=False)
    qp = _poly_mul(q, p)
    cross1 = _poly_mul(q, _poly_diff(p))
    cross2 = _poly_mul(_poly_diff(q), p)
    out = [Fraction(0)] * (max(len(qp), len(cross1) + 2, len(cross2) + 2))
    for n, c in enumerate(qp):
        out[n] += c
    for n, c in enumerate(cross1):
        out[n + 2] += c
    for n, c in enumerate(cross2):
        out[n + 2] -= c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


@lru_cache(maxsize=None)
def _series_product_coefficients(conj_deg: int, dir_deg: int) -> tuple[Fraction, ...]:
    """``A_n = [u**n] P_conj(-u) P_dir(u)``, the series-route coefficients."""
    return _poly_mul(
        _series_poly(conj_deg, negate=True), _series_poly(dir_deg, negate=False)
    )


@lru_cache(maxsize=None)
def _laurent_float(conj_deg: int, dir_deg: int) -> np.ndarray:
    arr = np.array([float(c) for c in _combination_laurent(conj_deg, dir_deg)])
    arr.flags.writeable = False
    return arr


def _check_orders(j: int, l: int) -> None:
    if j < 0 or l < 0:
        raise ValueError("mode degrees must be non-negative")


# ----------------------------------------------------------------------
# public surface
# ----------------------------------------------------------------------

def laurent_coefficients(j: int, l: int) -> tuple[Fraction, ...]:
    """Exact Laurent coefficients of ``HW(j, l; z)`` in ``u = 1/(2z)``.

    Ascending order; the leading entry is always 1 and the polynomial
    terminates at degree ``j + l + 1``.
    """
    _check_orders(j, l)
    return _combination_laurent(l, j)


def half_wronskian_exact(j: int, l: int, z: complex | np.ndarray) -> complex | np.ndarray:
    """Evaluate ``HW(j, l; z)`` from its exact Laurent coefficients.

    ``j`` is the degree of the direct factor ``chi_j(z)``, ``l`` of the
    conjugated factor ``chi_l(-z)``; the outgoing flux pairing uses
    ``z = -i k r``.  On the imaginary axis the pair matrix is Hermitian:
    ``HW(j, l; z) == conj(HW(l, j; z))``.
    """
    _check_orders(j, l)
    z = np.asarray(z)
    if np.any(z == 0):
        raise ValueError("evaluation point z = 0 is singular")
    u = 1.0 / (2.0 * z)
    coeffs = _laurent_float(l, j)
    acc = np.zeros_like(u)
    for c in coeffs[::-1]:
        acc = acc * u + c
    return acc if acc.ndim else acc[()]


@dataclass(frozen=True)
class WronskianSeries:
    """Distance expansion of a radial pair current factor.

    ``correction`` holds ``(n, A_n)`` pairs with exact rational ``A_n`` for
    ``n = 0 .. j + l``; it is empty on the diagonal, where the factor is
    identically ``constant_term == 1``.  ``evaluate(z, n_terms)`` sums
    ``1 + prefactor * sum A_n u**(n+1) / (n+1)`` with ``u = 1/(2z)``; because
    the series terminates, summing all terms reproduces
    ``half_wronskian_exact`` identically.
    """

    j: int
    l: int
    constant_term: Fraction
    prefactor: int
    correction: tuple[tuple[int, Fraction], ...]

    @property
    def n_terms(self) -> int:
        return len(self.correction)

    def a_coefficient(self, n: int) -> Fraction:
        """Exact ``A_n``; zero beyond the terminating order."""
        if n < 0:
            raise ValueError("coefficient index must be non-negative")
        if n >= len(self.correction):
            return Fraction(0)
        return self.correction[n][1]

    def evaluate(self, z: complex, n_terms: int | None = None) -> complex:
        if z == 0:
            raise ValueError("evaluation point z = 0 is singular")
        if n_terms is None:
            n_terms = self.n_terms
        u = 1.0 / (2.0 * complex(z))
        total = 0.0 + 0.0j
        for n in range(min(n_terms, self.n_terms) - 1, -1, -1):
            total = total * u + float(self.correction[n][1]) / (n + 1)
        return float(self.constant_term) + self.prefactor * total * u


def wronskian_series(j: int, l: int) -> WronskianSeries:
    """Series form of the pair factor, built through the product route.

    The ``A_n`` come from the plain product of the two terminating series
    (no derivatives), which is an independent construction from the current
    combination used by ``half_wronskian_exact``; their agreement is an
    exact identity and is enforced in the test suite.
    """
    _check_orders(j, l)
    if j == l:
        return WronskianSeries(
            j=j, l=l, constant_term=Fraction(1), prefactor=0, correction=()
        )
    coeffs = _series_product_coefficients(l, j)
    return WronskianSeries(
        j=j,
        l=l,
        constant_term=Fraction(1),
        prefactor=j * (j + 1) - l * (l + 1),
        correction=tuple(enumerate(coeffs)),
    )


@lru_cache(maxsize=None)
def _pair_coefficient_table(l_max: int) -> tuple[tuple[np.ndarray, ...], ...]:
    return tuple(
        tuple(_laurent_float(row, col) for col in range(l_max + 1))
        for row in range(l_max + 1)
    )


def pair_matrix(l_max: int, z: complex) -> np.ndarray:
    """Dense pair factors for all degree pairs up to ``l_max``.

    ``out[row, col] == half_wronskian_exact(j=col, l=row, z)``: rows index
    the conjugated mode.  Hermitian for purely imaginary ``z``, with unit
    diagonal at any ``z``.
    """
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    if z == 0:
        raise ValueError("evaluation point z = 0 is singular")
    u = 1.0 / (2.0 * complex(z))
    table = _pair_coefficient_table(l_max)
    out = np.empty((l_max + 1, l_max + 1), dtype=complex)
    for row in range(l_max + 1):
        for col in range(l_max + 1):
            acc = 0.0 + 0.0j
            for c in table[row][col][::-1]:
                acc = acc * u + c
            out[row, col] = acc
    return out


@dataclass(frozen=True)
class IntegralCheckReport:
    """Agreement report between closed-form and quadrature evaluation."""

    j: int
    l: int
    z: float
    closed_form: float
    quadrature: float
    quadrature_error: float

    @property
    def difference(self) -> float:
        return abs(self.closed_form - self.quadrature)


def integral_representation_check(j: int, l: int, z: float) -> IntegralCheckReport:
    """Check ``HW - 1`` against its integral representation at real ``z > 0``.

    The correction admits
    ``HW(j, l; z) = 1 + (delta/2) * int_z^inf chi_l(-t) chi_j(t) / t**2 dt``;
    the integrand's exponential factors cancel analytically, so only the
    terminating series enter and the quadrature is well conditioned at any
    ``z``.  Returns both values and the adaptive quadrature's own error
    estimate.
    """
    _check_orders(j, l)
    if not (z > 0):
        raise ValueError("integral representation requires real z > 0")
    delta = j * (j + 1) - l * (l + 1)
    p_conj = ChiPolynomial.for_order(l)
    p_dir = ChiPolynomial.for_order(j)

    def integrand(t: float) -> float:
        return (p_conj.series(-t) * p_dir.series(t)).real / (t * t)

    value, err = quad(integrand, z, np.inf, limit=300)
    closed = float(np.real(half_wronskian_exact(j, l, z)))
    return IntegralCheckReport(
        j=j,
        l=l,
        z=float(z),
        closed_form=closed,
        quadrature=1.0 + 0.5 * delta * value,
        quadrature_error=0.5 * abs(delta) * err,
    )
