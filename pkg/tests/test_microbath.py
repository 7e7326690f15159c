import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from radreact.bath import BlackbodySpectrum, OhmicSpectrum
from radreact.errors import ConfigurationError
from radreact.forces import gaussian_pulse
from radreact.microbath import Microbath, MicrobathConfig, gle_check, two_oscillator_exact


def _single(K, zeta=0.3, w=2.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return Microbath(MicrobathConfig(OhmicSpectrum(zeta), 1, w, T=1.0, K=K))


def test_small_bath_warns():
    with pytest.warns(RuntimeWarning, match="continuum"):
        MicrobathConfig(OhmicSpectrum(1.0), 5, 1.0)


@pytest.mark.parametrize("K", [0.0, 0.7])
def test_single_oscillator_oracle(K):
    b = _single(K)
    z, p = b.thermal_state(2, 11)
    t = np.linspace(0.0, 40.0, 401)
    x, _ = b.particle_series(z, p, t)
    for r in range(2):
        ref = two_oscillator_exact(1.0, K, b.mb[0], b.w[0], z[0, r], p[0, r], z[1, r], p[1, r] / b.mb[0], t)
        assert np.max(np.abs(x[r] - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_frequencies_and_couplings():
    cfg = MicrobathConfig(OhmicSpectrum(2.0), 200, 10.0)
    w = cfg.frequencies()
    assert w[0] > 0 and np.all(np.diff(w) > 0)
    assert np.allclose(cfg.couplings(), 2 * cfg.d_omega / math.pi * 2.0)
    assert cfg.recurrence_time == pytest.approx(2 * math.pi / 0.05)


def test_discrete_spectrum_converges():
    bb = BlackbodySpectrum(1.0, 1.0)

    def cumulative_error(n):
        cfg = MicrobathConfig(bb, n, 10.0)
        w, c = cfg.frequencies(), cfg.couplings()
        errs = []
        for W in (1.0, 3.0, 10.0):
            got = math.pi / 2 * c[w < W].sum()
            exact = W - math.atan(W)  # int_0^W w^2/(w^2+1) dw
            errs.append(abs(got - exact) / exact)
        return max(errs)

    e1, e2 = cumulative_error(100), cumulative_error(400)
    assert e2 < e1 / 10
    assert e2 < 1e-4


def test_zero_temperature_rest():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 200, 20.0, T=0.0, K=1.0))
    run = b.run((0.0, 30.0), n_out=101, n_real=3, seed=0)
    assert np.all(run.x == 0.0) and np.all(run.v == 0.0)


def test_velocity_acf_and_energy():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 400, 40.0, T=1.0))
    run = b.run((0.0, 30.0), n_out=301, n_real=200, seed=1)
    acf = run.velocity_acf(40)
    assert np.max(np.abs(acf - np.exp(-0.1 * np.arange(41)))) <= 0.03
    assert run.max_energy_drift() <= 1e-8


def test_recurrence_guard():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 200, 20.0))
    with pytest.raises(ConfigurationError, match="n_osc >= "):
        b.run((0.0, 100.0), n_real=1)
    run = b.run((0.0, 100.0), n_out=11, n_real=1, allow_recurrence=True)
    assert run.x.shape == (1, 11)


def test_seed_determinism():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 150, 15.0))
    a = b.run((0.0, 10.0), n_out=51, n_real=4, seed=8)
    c = b.run((0.0, 10.0), n_out=51, n_real=6, seed=8)
    assert np.array_equal(a.x, c.x[:4])


def test_gle_agrees_with_normal_modes():
    b = Microbath(MicrobathConfig(OhmicSpectrum(0.5), 100, 10.0, K=0.5))
    z, p = b.thermal_state(1, 4)
    t, xg, xm, err = gle_check(b, z[:, 0], p[:, 0], (0.0, 20.0), rtol=1e-10, atol=1e-13)
    assert err <= 1e-7


def test_split_energy_with_anharmonic_potential():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 100, 20.0, T=1.0),
                  potential_force=lambda x: -x ** 3, potential=lambda x: x ** 4 / 4)
    run = b.run((0.0, 20.0), n_out=201, n_real=4, seed=1, dt=1e-3)
    assert run.meta["scheme"] == "Strang splitting"
    assert run.max_energy_drift() <= 1e-6


def test_driven_single_oscillator_vs_ode():
    K = 0.7
    b = _single(K)
    f = gaussian_pulse(5.0, 1.0, 0.2)
    state = (np.zeros(2), np.zeros(2))
    run = b.run((0.0, 20.0), n_out=201, n_real=1, f=f, state=state, dt=1e-3,
                 allow_recurrence=True)
    m1, c = b.mb[0], b.c[0]

    def rhs(t, y):
        x, q, v, u = y
        return [v, u, (f.f(t) - K * x - c * (x - q)), -c * (q - x) / m1]

    sol = solve_ivp(rhs, (0.0, 20.0), [0, 0, 0, 0], t_eval=run.t, rtol=1e-11, atol=1e-14, method="DOP853")
    assert np.max(np.abs(run.x[0] - sol.y[0])) <= 1e-5 * np.max(np.abs(sol.y[0]))


def test_split_members_independent_of_ensemble_size():
    b = Microbath(MicrobathConfig(OhmicSpectrum(1.0), 100, 20.0), potential_force=lambda x: -x ** 3)
    a = b.run((0.0, 2.0), n_out=21, n_real=2, seed=3, dt=1e-2)
    c = b.run((0.0, 2.0), n_out=21, n_real=3, seed=3, dt=1e-2)
    assert np.array_equal(a.x, c.x[:2])
