import math
import warnings

import numpy as np
import pytest

from radreact import stochastic as st
from radreact.bath import BlackbodySpectrum, OhmicSpectrum
from radreact.correlations import classical_oscillator_autocorr, ohmic_force_autocorrelation_closed
from radreact.errors import ConfigurationError, DomainError, NumericError
from radreact.seeding import member_rng, member_seedseq


def _smooth(y):
    # (1, 2, 1)/4 removes the alternating Nyquist alias term
    return (y[:-2] + 2 * y[1:-1] + y[2:]) / 4


def test_seeding_is_stable():
    a = member_rng(7, "noise", 3).standard_normal(4)
    b = member_rng(7, "noise", 3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, member_rng(7, "langevin", 3).standard_normal(4))
    assert member_seedseq(7, "noise", 3).entropy == member_seedseq(7, "noise", 3).entropy


def test_classical_noise_moments():
    zeta, T, dt = 1.0, 1.0, 0.01
    n = st.synthesize_noise(OhmicSpectrum(zeta), T, dt=dt, N=4096, seed=1, n_real=8)
    x = n.samples.ravel()
    var = 2 * T * zeta / dt
    N = x.size
    assert abs(x.mean()) <= 3 * math.sqrt(var / N)
    m2 = np.mean(x * x)
    assert abs(m2 - var) <= 3 * var * math.sqrt(2.0 / N)
    skew = np.mean(x ** 3) / m2 ** 1.5
    kurt = np.mean(x ** 4) / m2 ** 2 - 3.0
    assert abs(skew) <= 3 * math.sqrt(6.0 / N)
    assert abs(kurt) <= 3 * math.sqrt(24.0 / N)
    # pairing rule <F^4> = 3 <F^2>^2
    assert abs(np.mean(x ** 4) - 3 * m2 ** 2) <= 3 * math.sqrt(96.0 / N) * m2 ** 2


def test_classical_acf_is_white():
    zeta, T, dt = 0.5, 2.0, 0.02
    n = st.synthesize_noise(OhmicSpectrum(zeta), T, dt=dt, N=8192, seed=2, n_real=16)
    acf = st.sample_acf(n.samples, 20)
    var = 2 * T * zeta / dt
    sig = var / math.sqrt(n.samples.size)
    assert abs(acf[0] - var) <= 3 * var * math.sqrt(2.0 / n.samples.size)
    assert np.all(np.abs(acf[1:]) <= 3 * sig)
    assert np.allclose(n.expected_acf(3), [var, 0, 0, 0], atol=1e-9 * var)


def test_quantum_acf_matches_closed_form():
    zeta, T, hbar, dt = 1.0, 1.0, 1.0, 0.01
    n = st.synthesize_noise(OhmicSpectrum(zeta), T, "quantum", dt=dt, N=2 ** 16, seed=3, n_real=300,
                            hbar=hbar)
    L = 80
    lag = np.arange(L + 1) * dt
    with np.errstate(divide="ignore"):
        ref = ohmic_force_autocorrelation_closed(lag, zeta, T, hbar)
    ref[0] = 0.0
    wT = math.pi * T / hbar
    band = (wT * lag[1:-1] >= 0.2 - 1e-12) & (wT * lag[1:-1] <= 2.0)
    sup = np.max(np.abs(ref[1:-1][band]))
    got = _smooth(st.sample_acf(n.samples, L))
    exact = _smooth(n.expected_acf(L))
    assert np.max(np.abs(got - _smooth(ref))[band]) <= 0.05 * sup
    assert np.max(np.abs(exact - _smooth(ref))[band]) <= 0.05 * sup


def test_periodogram_matches_target():
    bb = BlackbodySpectrum(1.0, 1.0)
    n = st.synthesize_noise(bb, 1.0, dt=0.1, N=1024, seed=5, n_real=400)
    w, P = st.periodogram(n.samples, n.dt)
    wb, Pb = st.binned_psd(w, P, 16)
    _, Sb = st.binned_psd(w, n.psd, 16)
    assert np.max(np.abs(Pb / Sb - 1)) <= 0.05


def test_zero_spectrum_gives_zero_samples():
    n = st.synthesize_noise(OhmicSpectrum(0.0), 1.0, dt=0.1, N=256, seed=0)
    assert np.all(n.samples == 0.0)
    n = st.synthesize_noise(OhmicSpectrum(1.0), 0.0, dt=0.1, N=256, seed=0)
    assert np.all(n.samples == 0.0)


def test_noise_configuration_errors():
    with pytest.raises(ConfigurationError):
        st.synthesize_noise(OhmicSpectrum(1.0), 100.0, "quantum", dt=0.1, N=256)
    with pytest.raises(ConfigurationError):
        st.synthesize_noise(BlackbodySpectrum(1.0, 0.01), 1.0, dt=0.1, N=256)
    with pytest.raises(DomainError):
        st.target_psd(1.0, OhmicSpectrum(1.0), 1.0, "semi")


def test_noise_members_independent_of_count():
    a = st.synthesize_noise(OhmicSpectrum(1.0), 1.0, dt=0.1, N=512, seed=9, n_real=3)
    b = st.synthesize_noise(OhmicSpectrum(1.0), 1.0, dt=0.1, N=512, seed=9, n_real=5)
    assert np.array_equal(a.samples, b.samples[:3])


def test_fdt_closure():
    m, K, zeta, T, dt, N = 1.0, 1.0, 0.5, 1.0, 0.05, 2 ** 17
    n = st.synthesize_noise(OhmicSpectrum(zeta), T, dt=dt, N=N, seed=4, n_real=64)
    x = st.drive_oscillator(n.samples, dt, m, zeta, K)[:, N // 8:]
    w, P = st.psd_welch(x, dt, 4096)
    pred = np.abs(1.0 / (K - m * w ** 2 - 1j * w * zeta)) ** 2 * 2 * T * zeta
    sel = w < 3.0
    _, Pb = st.binned_psd(w[sel], P[sel], 4)
    _, pb = st.binned_psd(w[sel], pred[sel], 4)
    assert np.max(np.abs(Pb / pb - 1)) <= 0.05


def test_ou_propagator_stationary_covariance():
    m, zeta, K, kT, dt = 1.0, 0.7, 2.0, 1.3, 0.05
    Phi, L = st.ou_propagator(m, zeta, K, kT, dt)
    Sigma = np.diag([kT / K, kT / m])
    assert np.allclose(Phi @ Sigma @ Phi.T + L @ L.T, Sigma, atol=1e-13)


def test_free_langevin_velocity():
    ens = st.simulate_langevin_ohmic(1.0, 1.0, 1.0, n_traj=10_000, tspan=(0.0, 20.0), dt=0.01, seed=21)
    assert ens.velocity_variance() == pytest.approx(1.0, rel=0.02)
    acf = ens.velocity_acf(30)
    lag = ens.t[:31]
    assert np.max(np.abs(acf - np.exp(-lag))) <= 0.02


def test_harmonic_position_acf():
    K, tau_e, T = 1.0, 0.01, 1.0
    zeta = K * tau_e
    ens = st.simulate_langevin_ohmic(zeta, T, 1.0, K=K, n_traj=10_000, tspan=(0.0, 30.0), dt=0.01,
                                     seed=22)
    acf = ens.position_acf(100)
    ref = classical_oscillator_autocorr(ens.t[:101], K, 1.0, tau_e, T)
    assert np.max(np.abs(acf - ref)) <= 0.05 * T / K


def test_zero_temperature_is_deterministic():
    m, zeta, K = 1.0, 0.3, 4.0
    ens = st.simulate_langevin_ohmic(zeta, 0.0, m, K=K, n_traj=3, tspan=(0.0, 10.0), dt=0.01, x0=1.0,
                                     v0=0.0, seed=1, record_every=1)
    g = zeta / m
    w1 = math.sqrt(K / m - g * g / 4)
    ref = np.exp(-g * ens.t / 2) * (np.cos(w1 * ens.t) + g / (2 * w1) * np.sin(w1 * ens.t))
    assert np.max(np.abs(ens.x - ref)) < 1e-12


def test_ballistic_regime():
    ens = st.simulate_langevin_ohmic(1.0, 1.0, 1.0, n_traj=10_000, tspan=(0.0, 0.1), dt=0.001, seed=3,
                                     record_every=10)
    s = np.mean((ens.x[:, -1] - ens.x[:, 0]) ** 2)
    t = ens.t[-1]
    # s = 2 (kT/m)(m/zeta)^2 (zeta t/m - 1 + exp(-zeta t/m)) ~ t^2 (1 - t/3)
    assert s == pytest.approx(t * t, rel=0.1)


def test_diffusion_scales_with_friction():
    D = []
    for zeta in (1.0, 2.0):
        ens = st.simulate_langevin_ohmic(zeta, 1.0, 1.0, n_traj=2000, tspan=(0.0, 50.0 / zeta), dt=0.01,
                                         seed=30)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = st.estimate_diffusion(ens)
        D.append(est)
    assert D[0].D == pytest.approx(1.0, abs=max(0.05, 2 * D[0].ci))
    ratio = D[1].D / D[0].D
    err = 2 * math.hypot(D[0].ci / D[0].D, D[1].ci / D[1].D)
    assert abs(ratio - 0.5) <= max(0.05, err)


def test_curving_msd_warns():
    ens = st.simulate_langevin_ohmic(1.0, 0.0, 1.0, n_traj=20, tspan=(0.0, 10.0), dt=0.01, v0=1.0,
                                     seed=0, record_every=1)
    with pytest.warns(RuntimeWarning, match="curving"):
        est = st.estimate_diffusion(ens, window=(0.2, 3.0))
    assert est.window[0] > 0.2


def test_langevin_stability_error():
    with pytest.raises(NumericError):
        st.simulate_langevin_ohmic(10.0, 1.0, 1.0, dt=0.5, n_traj=2)


def test_langevin_determinism_and_chunking():
    kw = dict(n_traj=20, tspan=(0.0, 5.0), dt=0.01, seed=5)
    a = st.simulate_langevin_ohmic(1.0, 1.0, 1.0, chunk=7, **kw)
    b = st.simulate_langevin_ohmic(1.0, 1.0, 1.0, chunk=20, **kw)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.v, b.v)
    c = st.simulate_langevin_ohmic(1.0, 1.0, 1.0, **{**kw, "n_traj": 5})
    assert np.array_equal(a.x[:5], c.x)


def test_nonlinear_kick_path():
    # a quadratic potential passed as a kick must agree with the exact spring
    kw = dict(n_traj=4, tspan=(0.0, 5.0), dt=0.001, seed=5, x0=1.0, v0=0.0, x_thermal=False)
    a = st.simulate_langevin_ohmic(0.2, 0.0, 1.0, K=1.0, **kw)
    b = st.simulate_langevin_ohmic(0.2, 0.0, 1.0, potential_force=lambda x: -x, **kw)
    assert np.max(np.abs(a.x - b.x)) < 1e-5
