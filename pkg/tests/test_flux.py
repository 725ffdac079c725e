"""Detector-sphere flux: exact route, distance expansion, conservation."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from nearfield.amplitudes import Channel, ChannelSet, PartialWaveAmplitude
from nearfield.flux import (
    FluxHermiticityError,
    _real_with_hermitian_check,
    cross_sections,
    differential_flux_asymptotic,
    differential_flux_exact,
    far_field_flux,
    flux_correction_term,
    flux_profile,
    optical_theorem_defect,
    total_flux,
    unitarity_defect,
)
from nearfield.special import gauss_legendre_sphere, unit_from_angles

from conftest import (
    channel_set,
    hard_sphere_sigma_oracle,
    fit_slope,
    raw_amplitude,
    unitary_amplitude,
)


# ----------------------------------------------------------------------
# exact evaluation
# ----------------------------------------------------------------------

def test_single_mode_flux_is_distance_independent():
    f = PartialWaveAmplitude({("a", 2, 1): 0.8 - 0.3j})
    cs = ChannelSet(channels=(Channel("a", 1.1),), entrance="a")
    sigma = cross_sections(f, cs).total
    totals = [
        total_flux(f, cs, R, method="pointwise") for R in (0.4, 1.0, 3.0, 20.0, 500.0)
    ]
    for value in totals:
        assert value == pytest.approx(sigma, rel=1e-13)


def test_differential_flux_input_validation(rng):
    f, cs, _ = unitary_amplitude(2, 1, seed=0)
    nhat = unit_from_angles(1.0, 1.0)
    with pytest.raises(ValueError):
        differential_flux_exact(f, cs, 0.0, nhat)
    with pytest.raises(ValueError):
        differential_flux_exact(f, cs, 1.0, np.ones(4))
    with pytest.raises(ValueError):
        differential_flux_asymptotic(f, cs, 1.0, nhat, order=5)
    with pytest.raises(ValueError):
        flux_correction_term(f, cs, 1.0, nhat, order=0)


def test_exact_accepts_batched_directions(rng):
    f, cs, _ = unitary_amplitude(2, 2, seed=3)
    grid = gauss_legendre_sphere(8)
    batch = differential_flux_exact(f, cs, 5.0, grid.points)
    assert batch.shape == (grid.n_nodes,)
    single = differential_flux_exact(f, cs, 5.0, grid.points[7])
    assert batch[7] == pytest.approx(single, rel=1e-14)


def test_hermiticity_guard_raises_on_complex_residue():
    clean = _real_with_hermitian_check(np.array([1.0 + 1e-14j]), np.array([1.0]))
    assert clean.dtype.kind == "f"
    with pytest.raises(FluxHermiticityError):
        _real_with_hermitian_check(np.array([1.0 + 1e-3j]), np.array([1.0]))


# ----------------------------------------------------------------------
# distance expansion
# ----------------------------------------------------------------------

def test_two_path_agreement_complete_series():
    # every off-diagonal mode pair with l+j <= 3 is fully captured at
    # order 4, so the expansion is exact for amplitudes with l_max <= 2
    f, cs, _ = unitary_amplitude(3, 2, seed=11)
    for kR in (0.7, 2.0, 9.0, 120.0):
        for ang in ((0.0, 0.0), (1.1, 0.7), (2.0, 3.9), (2.9, 5.2)):
            nhat = unit_from_angles(*ang)
            exact = differential_flux_exact(f, cs, kR, nhat)
            series = differential_flux_asymptotic(f, cs, kR, nhat, order=4)
            assert series == pytest.approx(exact, rel=1e-11, abs=1e-18)


def test_two_path_truncation_slope():
    f, cs, _ = unitary_amplitude(2, 3, seed=2)
    directions = [unit_from_angles(1.05, 2.3), unit_from_angles(2.2, 0.9)]
    kr_values = np.geomspace(8.0, 100.0, 10)
    errs = []
    for kR in kr_values:
        acc = 0.0
        for nhat in directions:
            exact = differential_flux_exact(f, cs, kR, nhat)
            series = differential_flux_asymptotic(f, cs, kR, nhat, order=4)
            acc += abs(exact - series) / abs(exact)
        errs.append(acc / len(directions))
    assert fit_slope(kr_values, np.array(errs)) == pytest.approx(-5.0, abs=0.3)


def test_far_field_flux_is_order_zero(rng):
    f, cs, _ = unitary_amplitude(2, 3, seed=5)
    nhat = unit_from_angles(0.9, 4.0)
    assert far_field_flux(f, cs, nhat) == pytest.approx(
        differential_flux_asymptotic(f, cs, 7.0, nhat, order=0), rel=1e-14
    )


def test_far_field_limit_at_huge_distance():
    f, cs, _ = unitary_amplitude(3, 4, seed=9)
    grid = gauss_legendre_sphere(16)
    R = 1e6 / 0.8
    exact = differential_flux_exact(f, cs, R, grid.points)
    far = far_field_flux(f, cs, grid.points)
    assert np.max(np.abs(exact - far)) / np.max(np.abs(far)) < 1e-5


def test_correction_terms_integrate_to_zero():
    # each correction must cancel on the sphere; judge the cancellation
    # against the integrand's own magnitude, which grows like R**-order
    f, cs, _ = unitary_amplitude(2, 6, seed=13)
    grid = gauss_legendre_sphere(16)
    for order in (1, 2, 3, 4):
        for R in (0.8, 3.0, 25.0):
            term = flux_correction_term(f, cs, R, grid.points, order=order)
            scale = float(grid.integrate(np.abs(term)))
            assert abs(grid.integrate(term)) < 1e-10 * scale


def test_correction_terms_sum_to_asymptotic(rng):
    f, cs, _ = unitary_amplitude(2, 3, seed=4)
    nhat = unit_from_angles(1.3, 0.2)
    R = 2.7
    total = far_field_flux(f, cs, nhat)
    for order in (1, 2, 3, 4):
        total = total + flux_correction_term(f, cs, R, nhat, order=order)
        assert total == pytest.approx(
            differential_flux_asymptotic(f, cs, R, nhat, order=order), rel=1e-12
        )


# ----------------------------------------------------------------------
# positivity
# ----------------------------------------------------------------------

def test_positivity_of_physical_amplitudes_at_large_kr():
    grid = gauss_legendre_sphere(20)
    floor = 0.0
    for l_max in (2, 4, 6):
        for seed in range(10):
            f, cs, _ = unitary_amplitude(2, l_max, seed=seed)
            k_min = min(cs.k(label) for label in cs.labels)
            for kR in (10.0, 30.0, 100.0):
                values = differential_flux_exact(f, cs, kR / k_min, grid.points)
                peak = float(np.max(np.abs(values)))
                if peak == 0.0:
                    continue
                floor = min(floor, float(np.min(values)) / peak)
    assert floor >= -1e-10


def test_near_field_dips_are_finite_not_asserted():
    # below kR = 1 the flux may legitimately go negative; just record that
    # the evaluation stays finite there
    f, cs, _ = unitary_amplitude(2, 4, seed=1)
    grid = gauss_legendre_sphere(20)
    values = differential_flux_exact(f, cs, 0.5, grid.points)
    assert np.all(np.isfinite(values))


# ----------------------------------------------------------------------
# cross sections and conservation
# ----------------------------------------------------------------------

def test_hard_sphere_cross_section_oracle():
    from nearfield.amplitudes import amplitudes_from_smatrix, hard_sphere_model

    k, a, l_max = 1.0, 0.5, 10
    model = hard_sphere_model(k, a, l_max)
    cs = ChannelSet(channels=(Channel("el", k),), entrance="el")
    f = amplitudes_from_smatrix(model, cs)
    sections = cross_sections(f, cs)
    oracle = hard_sphere_sigma_oracle(k, a, l_max)
    assert sections.total == pytest.approx(oracle, rel=1e-13)
    assert sections.quadrature_total == pytest.approx(sections.total, rel=1e-12)


def test_cross_sections_parseval_matches_quadrature(rng):
    f, cs, _ = unitary_amplitude(3, 5, seed=21)
    sections = cross_sections(f, cs)
    assert sections.labels == cs.labels
    for label in cs.labels:
        direct = cs.weight(label) * float(
            np.sum(np.abs(f.dense(label, f.l_max)) ** 2)
        )
        assert sections.per_channel[label] == pytest.approx(direct, rel=1e-13)
        assert sections.quadrature_per_channel[label] == pytest.approx(
            sections.per_channel[label], rel=1e-10, abs=1e-16
        )


def test_total_flux_gram_route_is_exact_at_small_kr():
    f, cs, _ = unitary_amplitude(3, 6, seed=8)
    sigma = cross_sections(f, cs).total
    for R in (0.2, 0.5, 2.0, 100.0):
        flux = total_flux(f, cs, R, method="gram")
        assert abs(flux - sigma) / sigma < 1e-12


def test_total_flux_pointwise_route_moderate_kr(rng):
    f, cs, _ = unitary_amplitude(2, 3, seed=6)
    sigma = cross_sections(f, cs).total
    for R in (4.0, 30.0):
        flux = total_flux(f, cs, R, method="pointwise")
        assert flux == pytest.approx(sigma, rel=1e-10)


def test_total_flux_method_validation(rng):
    f, cs, _ = unitary_amplitude(2, 2, seed=6)
    with pytest.raises(ValueError):
        total_flux(f, cs, 1.0, method="magic")
    with pytest.raises(ValueError):
        total_flux(f, cs, 0.0)
    # gram contraction needs the canonical product grid
    grid = gauss_legendre_sphere(8)
    shuffled = type(grid)(
        order=grid.order,
        theta=grid.theta[::-1].copy(),
        phi=grid.phi[::-1].copy(),
        weights=grid.weights[::-1].copy(),
    )
    with pytest.raises(ValueError):
        total_flux(f, cs, 1.0, grid=shuffled, method="gram")


def test_total_flux_warns_on_underresolved_grid(caplog):
    f, cs, _ = unitary_amplitude(2, 4, seed=2)
    with caplog.at_level(logging.WARNING, logger="nearfield.flux"):
        total_flux(f, cs, 3.0, grid=gauss_legendre_sphere(5))
    assert any("grid order" in rec.message for rec in caplog.records)


def test_flux_profile_contents():
    f, cs, _ = unitary_amplitude(2, 2, seed=17)
    r_values = np.geomspace(0.5, 50.0, 7)
    profile = flux_profile(f, cs, r_values)
    assert len(profile) == 7
    sigma = profile.far_field_total
    assert np.max(np.abs(profile.total - sigma)) / sigma < 1e-12
    assert profile.samples.shape == (7, profile.grid.n_nodes)
    assert np.array_equal(
        profile.validity, np.min([cs.k(c) for c in cs.labels]) * r_values >= 1.0
    )
    assert np.all(profile.diff_min <= profile.diff_max)
    with pytest.raises(ValueError):
        flux_profile(f, cs, [])
    with pytest.raises(ValueError):
        flux_profile(f, cs, [1.0, -2.0])


# ----------------------------------------------------------------------
# unitarity and the optical theorem
# ----------------------------------------------------------------------

def test_unitarity_defect_family_vs_scaled():
    f, cs, family = unitary_amplitude(3, 3, seed=31)
    assert unitarity_defect(family, cs) < 1e-12

    def scaled_family(entrance, kappa_hat):
        return family(entrance, kappa_hat).scaled(1.1)

    assert unitarity_defect(scaled_family, cs) > 1e-2


def test_unitarity_defect_bare_amplitude_diagonal_only():
    f, cs, _ = unitary_amplitude(2, 2, seed=19)
    nhat = [(0.0, 0.0, 1.0)]
    assert unitarity_defect(f, cs, kappa_hats=nhat, s_hats=nhat) < 1e-12
    with pytest.raises(ValueError):
        unitarity_defect(f, cs)
    with pytest.raises(ValueError):
        unitarity_defect(
            f, cs, kappa_hats=[(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)]
        )


def test_optical_theorem_defects():
    f, cs, _ = unitary_amplitude(3, 4, seed=23)
    assert optical_theorem_defect(f, cs) < 1e-12
    real_f = PartialWaveAmplitude({("c0", 0, 0): 0.7, ("c0", 1, 0): -0.2})
    assert optical_theorem_defect(real_f, channel_set(1)) == pytest.approx(1.0)
    empty = PartialWaveAmplitude({})
    assert optical_theorem_defect(empty, channel_set(1)) == 0.0


def test_optical_theorem_hard_sphere():
    from nearfield.amplitudes import amplitudes_from_smatrix, hard_sphere_model

    model = hard_sphere_model(1.0, 1.0, 12)
    cs = ChannelSet(channels=(Channel("el", 1.0),), entrance="el")
    f = amplitudes_from_smatrix(model, cs)
    assert optical_theorem_defect(f, cs) < 1e-12
