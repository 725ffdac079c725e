"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nearfield.amplitudes import (
    Channel,
    ChannelSet,
    PartialWaveAmplitude,
    amplitudes_from_smatrix,
    random_unitary_smatrix,
    smatrix_amplitude_family,
)

_CHANNEL_KS = (1.0, 0.8, 1.3, 0.6)


def channel_set(n: int, entrance: int = 0, weight_mode: str = "momentum_ratio") -> ChannelSet:
    """Deterministic n-channel set with fixed wavenumbers."""
    chans = tuple(
        Channel(label=f"c{i}", k=_CHANNEL_KS[i], velocity=_CHANNEL_KS[i] ** 2)
        for i in range(n)
    )
    return ChannelSet(channels=chans, entrance=f"c{entrance}", weight_mode=weight_mode)


def unitary_amplitude(n: int, l_max: int, seed: int):
    """Flux-conserving amplitude drawn from a random unitary S-matrix."""
    model = random_unitary_smatrix(n, l_max, seed=seed)
    channels = channel_set(n)
    f = amplitudes_from_smatrix(model, channels)
    family = smatrix_amplitude_family(model, channels)
    return f, channels, family


def raw_amplitude(rng: np.random.Generator, channels: ChannelSet, l_max: int) -> PartialWaveAmplitude:
    """Unconstrained random coefficients (not flux conserving)."""
    coeffs = {}
    for beta in channels.labels:
        for l in range(l_max + 1):
            for m in range(-l, l + 1):
                coeffs[(beta, l, m)] = complex(rng.normal(), rng.normal())
    return PartialWaveAmplitude(coeffs)


def fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# ----------------------------------------------------------------------
# independent oracles
# ----------------------------------------------------------------------

def macdonald_chi(l: int, z: complex) -> complex:
    """chi_l through the half-odd-order Macdonald function (mpmath)."""
    import mpmath as mp

    with mp.workdps(40):
        zm = mp.mpc(z)
        value = mp.sqrt(2 * zm / mp.pi) * mp.besselk(l + mp.mpf(1) / 2, zm)
        return complex(value)


def bessel_psi_downward(l_max: int, x: float) -> np.ndarray:
    """Regular radial factors x*j_l(x) via Miller downward recurrence.

    Starts the two-term recurrence far above l_max with arbitrary seed
    values and renormalizes against sin(x), which is exact for l=0.
    """
    start = l_max + 30 + int(2 * abs(x))
    jl = np.zeros(start + 2)
    jl[start + 1] = 0.0
    jl[start] = 1e-30
    for l in range(start, 0, -1):
        jl[l - 1] = (2 * l + 1) / x * jl[l] - jl[l + 1]
    scale = (np.sin(x) / x) / jl[0]
    return x * jl[: l_max + 1] * scale


def hard_sphere_sigma_oracle(k: float, a: float, l_max: int) -> float:
    """Total cross section from Bessel-ratio phase shifts (mpmath)."""
    import mpmath as mp

    with mp.workdps(40):
        ka = mp.mpf(k) * mp.mpf(a)
        total = mp.mpf(0)
        for l in range(l_max + 1):
            nu = l + mp.mpf(1) / 2
            j = mp.sqrt(mp.pi / (2 * ka)) * mp.besselj(nu, ka)
            y = mp.sqrt(mp.pi / (2 * ka)) * mp.bessely(nu, ka)
            delta = mp.atan(j / y)
            total += (2 * l + 1) * mp.sin(delta) ** 2
        return float(4 * mp.pi / mp.mpf(k) ** 2 * total)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
