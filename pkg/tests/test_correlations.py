import math
import warnings

import numpy as np
import pytest

from radreact.bath import BlackbodySpectrum, OhmicSpectrum
from radreact.correlations import (
    bose_weight,
    classical_oscillator_autocorr,
    correlation_curve,
    equal_time_xv_commutator,
    force_autocorrelation,
    force_commutator,
    msd_cutoff_integral,
    msd_zero_temperature,
    ohmic_force_autocorrelation_closed,
    position_autocorrelation,
    position_commutator,
)
from radreact.errors import DomainError, UnsupportedError
from radreact.response import Susceptibility


def test_bose_weight_stable():
    assert bose_weight(0.0) == 1.0
    assert bose_weight(1e-12) == pytest.approx(1.0 - 5e-13, rel=1e-15)
    assert bose_weight(800.0) == 0.0
    assert bose_weight(2.0) == pytest.approx(2.0 / math.expm1(2.0))


@pytest.mark.parametrize("T", [0.3, 1.0, 4.0])
def test_ohmic_force_acf_closed_form(T):
    zeta, hbar = 0.8, 1.0
    for dt in (0.05, 0.4, 2.0):
        got = force_autocorrelation(dt, OhmicSpectrum(zeta), T, hbar)
        ref = ohmic_force_autocorrelation_closed(dt, zeta, T, hbar)
        assert got.value == pytest.approx(ref, rel=1e-6)
        assert got.delta == pytest.approx(2 * T * zeta, rel=1e-12)


def test_zero_temperature_tail():
    zeta, hbar = 1.0, 1.0
    for dt in (0.2, 1.0):
        got = force_autocorrelation(dt, OhmicSpectrum(zeta), 0.0, hbar).value
        assert got == pytest.approx(-zeta * hbar / (math.pi * dt * dt), rel=1e-6)
    # the finite-T closed form approaches the T = 0 tail
    assert ohmic_force_autocorrelation_closed(0.5, 1.0, 1e-4, 1.0) == pytest.approx(
        ohmic_force_autocorrelation_closed(0.5, 1.0, 0.0, 1.0), rel=1e-6)


def test_classical_limit_is_pure_delta():
    r = force_autocorrelation(0.7, OhmicSpectrum(1.5), 2.0, 0.0)
    assert r.value == 0.0
    assert r.delta == pytest.approx(6.0)


def test_force_commutator():
    assert force_commutator(0.0, OhmicSpectrum(1.0), 1.0).value == 0.0
    assert force_commutator(0.4, OhmicSpectrum(1.0), 1.0).value == 0.0
    A, W, hbar = 0.5, 2.0, 1.0
    bb = BlackbodySpectrum(A, W)
    for dt in (0.3, 1.0):
        # only the Lorentzian part survives away from dt = 0
        ref = -A * W ** 4 * hbar * math.exp(-W * dt)
        assert force_commutator(dt, bb, hbar).value == pytest.approx(ref, rel=1e-9)
        assert force_commutator(-dt, bb, hbar).value == pytest.approx(-ref, rel=1e-9)


def test_position_acf_classical_and_equipartition():
    K, M, tau, T = 2.0, 1.0, 0.05, 1.5
    s = Susceptibility.ford_oconnell(M, K, tau)
    assert position_autocorrelation(0.0, s, T, 0.0).value == pytest.approx(T / K, rel=1e-9)
    for t in (0.5, 3.0, 11.0):
        got = position_autocorrelation(t, s, T, 0.0).value
        assert got == pytest.approx(classical_oscillator_autocorr(t, K, M, tau, T), abs=1e-8 * T / K)


def test_position_acf_needs_spring():
    with pytest.raises(DomainError):
        position_autocorrelation(1.0, Susceptibility.ford_oconnell(1.0, 0.0, 0.1), 1.0, 0.0)


def test_zero_temperature_width_with_cutoff():
    w0, tau, M, c, hbar = 1.0, 1e-6, 1.0, 1e5, 1.0
    s = Susceptibility.ford_oconnell(M, M * w0 ** 2, tau)
    a = position_autocorrelation(0.0, s, 0.0, hbar, cutoff=M * c * c / hbar).value
    b = msd_cutoff_integral(w0, tau, M, c, hbar).value
    assert a == pytest.approx(b, rel=1e-8)
    assert b == pytest.approx(msd_zero_temperature(w0, tau, M, c, hbar), rel=0.05)


def test_position_commutator():
    s = Susceptibility.ford_oconnell(1.0, 1.0, 0.05)
    assert position_commutator(0.0, s, 1.0).value == 0.0
    bare = Susceptibility.ford_oconnell(2.0, 8.0, 0.0)
    assert position_commutator(0.7, bare, 1.0).value == pytest.approx(math.sin(2.0 * 0.7) / 4.0)
    # lightly damped result tends to the undamped one at short lag
    small = Susceptibility.ford_oconnell(1.0, 1.0, 1e-4)
    assert position_commutator(0.3, small, 1.0).value == pytest.approx(math.sin(0.3), rel=1e-3)


def test_equal_time_commutator():
    for gt in (1e-3, 1e-2):
        tau = math.sqrt(gt)
        val = equal_time_xv_commutator(Susceptibility.ford_oconnell(1.0, 1.0, tau), 1.0)
        assert val == pytest.approx(1.0 - gt, rel=1e-2)
    assert equal_time_xv_commutator(Susceptibility.ford_oconnell(1.0, 1.0, 0.0), 1.0) == pytest.approx(1.0, rel=1e-2)


def test_classical_oscillator_autocorr():
    K, M, tau, T = 1.0, 1.0, 0.01, 1.0
    assert classical_oscillator_autocorr(0.0, K, M, tau, T) == pytest.approx(T / K)
    g = K * tau / M
    w1 = math.sqrt(1 - g * g / 4)
    val = classical_oscillator_autocorr(2 * math.pi / w1, K, M, tau, T)
    assert val == pytest.approx(T / K * math.exp(-math.pi * g / w1), rel=1e-12)
    with pytest.raises(UnsupportedError):
        classical_oscillator_autocorr(1.0, 1.0, 1.0, 3.0, 1.0)


def test_msd_formula():
    assert msd_zero_temperature(2.0, 0.0, 1.0, 1.0, 1.0) == pytest.approx(0.25)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        msd_zero_temperature(1.0, 0.5, 1.0, 10.0, 1.0)
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)


def test_curve_workers_do_not_change_numbers():
    lags = np.linspace(0.1, 2.0, 6)
    a = correlation_curve("force_sym", lags, spectral=OhmicSpectrum(1.0), T=1.0, hbar=1.0)
    b = correlation_curve("force_sym", lags, spectral=OhmicSpectrum(1.0), T=1.0, hbar=1.0, workers=3)
    assert np.array_equal(a.values, b.values)
    with pytest.raises(DomainError):
        correlation_curve("bogus", lags, spectral=OhmicSpectrum(1.0))
