import math

import numpy as np
import pytest
from scipy.integrate import simpson

from radreact.dynamics import (
    al_regular_acceleration,
    field_to_force,
    fit_growth_rate,
    integrate_abraham_lorentz,
    integrate_abraham_lorentz_regular,
    integrate_finite_cutoff,
    integrate_fo_free,
    integrate_fo_oscillator,
    larmor_energy,
    radiated_energy,
)
from radreact.errors import ConstraintViolation, DomainError
from radreact.forces import capacitor_gate, gaussian_pulse, parse_pulse, sinusoid, smooth_step, zero


def test_al_newtonian_branch():
    tr = integrate_abraham_lorentz(zero(), 1.0, 0.5, 0.0, (0.0, 20.0))
    assert np.array_equal(tr.x, 1.0 + 0.5 * tr.t) or np.allclose(tr.x, 1.0 + 0.5 * tr.t, rtol=0, atol=1e-14)
    assert not tr.runaway


def test_al_homogeneous_exponential():
    tr = integrate_abraham_lorentz(zero(), 0.0, 0.0, 1e-3, (0.0, 5.0), tau_e=0.5)
    ref = 1e-3 * np.exp(tr.t / 0.5)
    assert np.max(np.abs(tr.a - ref) / ref) < 1e-8


def test_al_runaway_after_pulse():
    tr = integrate_abraham_lorentz(gaussian_pulse(5.0, 0.5, 1e-3), 0.0, 0.0, 0.0, (0.0, 100.0))
    assert tr.runaway
    assert tr.meta["growth_rate"] == pytest.approx(1.0, rel=1e-2)


def test_fit_growth_rate():
    t = np.linspace(0, 10, 200)
    assert fit_growth_rate(t, 3 * np.exp(0.7 * t)) == pytest.approx(0.7, rel=1e-10)


def test_fo_free_uniform_motion():
    tr = integrate_fo_free(zero(), 2.0, -0.3, (0.0, 50.0))
    assert np.allclose(tr.x, 2.0 - 0.3 * tr.t, atol=1e-12)
    assert not tr.runaway


def test_fo_oscillator_damped_ringdown():
    M, K, tau = 1.0, 1.0, 0.05
    tr = integrate_fo_oscillator(zero(), K, 1.0, 0.0, (0.0, 60.0), tau_e=tau, rtol=1e-11, atol=1e-14)
    g = K * tau / M
    w1 = math.sqrt(K / M - g * g / 4)
    ref = np.exp(-g * tr.t / 2) * (np.cos(w1 * tr.t) + g / (2 * w1) * np.sin(w1 * tr.t))
    assert np.max(np.abs(tr.x - ref)) < 1e-9
    assert tr.meta["decay_rate"] == pytest.approx(g / 2)


def test_newtonian_degeneration():
    tr = integrate_fo_oscillator(zero(), 4.0, 1.0, 0.0, (0.0, 20.0), tau_e=0.0, rtol=1e-11, atol=1e-14)
    assert np.max(np.abs(tr.x - np.cos(2.0 * tr.t))) < 1e-9


@pytest.mark.parametrize("pulse", [gaussian_pulse(10.0, 2.0, 1e-2), capacitor_gate(1e-2, 5.0, 20.0, 5.0),
                                   sinusoid(0.3, 1e-2, envelope=capacitor_gate(1.0, 5.0, 30.0, 5.0))])
def test_no_runaway_after_pulse(pulse):
    tr = integrate_fo_free(pulse, 0.0, 0.0, (0.0, 120.0))
    post = tr.v[tr.t > pulse.support[1]]
    assert np.ptp(post) <= 1e-10 * max(np.max(np.abs(tr.v)), 1e-30)


def test_cutoff_matches_fo_at_maximal_omega():
    p = gaussian_pulse(5.0, 1.0, 0.1)
    a = integrate_finite_cutoff(p, 1.0, 1.0, 0.2, 0.0, 0.0, (0.0, 30.0))
    b = integrate_fo_oscillator(p, 1.0, 0.2, 0.0, (0.0, 30.0))
    assert np.max(np.abs(a.x - b.x)) < 10 * 1e-9


def test_cutoff_below_maximum_is_stable():
    tr = integrate_finite_cutoff(zero(), 0.5, 0.0, 0.0, 1.0, 0.0, (0.0, 50.0))
    assert np.allclose(tr.v, 1.0, atol=1e-12)
    assert not tr.runaway


def test_cutoff_above_maximum():
    with pytest.raises(ConstraintViolation):
        integrate_finite_cutoff(zero(), 2.0, 0.0, 0.0, 0.0, 0.0, (0.0, 10.0))
    tr = integrate_finite_cutoff(gaussian_pulse(3.0, 0.5, 1e-3), 10.0, 0.0, 0.0, 0.0, 0.0, (0.0, 200.0),
                                 allow_negative_bare_mass=True)
    assert tr.runaway


def test_al_and_fo_agree_to_second_order():
    p = gaussian_pulse(20.0, 3.0, 1e-2)
    errs = []
    for tau in (0.1, 0.05):
        al = integrate_abraham_lorentz_regular(p, 0.0, 0.0, (0.0, 40.0), tau_e=tau)
        fo = integrate_fo_free(p, 0.0, 0.0, (0.0, 40.0), tau_e=tau, rtol=1e-11, atol=1e-15)
        errs.append(np.max(np.abs(al.v - fo.v)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_regular_al_pre_acceleration():
    p = gaussian_pulse(10.0, 0.5, 1.0)
    assert al_regular_acceleration(p, 0.0) > 0
    tr = integrate_abraham_lorentz_regular(p, 0.0, 0.0, (0.0, 30.0))
    assert not tr.runaway
    assert abs(tr.a[-1]) < 1e-9


def test_radiated_energy_examples():
    assert radiated_energy(zero()).total == 0.0
    f0, sigma, M, tau = 0.3, 2.0, 1.5, 0.7
    r = radiated_energy(gaussian_pulse(0.0, sigma, f0), M=M, tau_e=tau)
    assert r.total == pytest.approx(M * tau * (f0 / M) ** 2 * sigma * math.sqrt(math.pi), rel=1e-10)
    with pytest.raises(DomainError):
        radiated_energy(smooth_step(1.0))


def test_energy_bookkeeping_slow_pulse():
    p = gaussian_pulse(400.0, 100.0, 1e-3)
    tr = integrate_fo_free(p, 0.0, 0.0, (0.0, 800.0), n_out=20001)
    dke = 0.5 * (tr.v[-1] ** 2 - tr.v[0] ** 2)
    work = simpson(tr.f * tr.v, x=tr.t)
    W = radiated_energy(p).total
    assert abs(dke - (work - W)) <= 0.01 * abs(dke)


def test_larmor_vs_generalized_total():
    s = sinusoid(1e-2, 1e-2, envelope=capacitor_gate(1.0, 0.0, 2000.0, 200.0))
    tr = integrate_fo_free(s, 0.0, 0.0, (0.0, 2410.0), n_out=100001)
    W = radiated_energy(s).total
    assert abs(larmor_energy(tr) - W) / W < 1e-3


def test_field_to_force():
    assert field_to_force(2.0, 0.0, 1.0, e=3.0) == 6.0
    assert field_to_force(1.0, 1.0, 1.0) == pytest.approx(1 / math.sqrt(2))
    x = 1e-2
    assert abs(field_to_force(1.0, x, 1.0) - 1.0) <= 0.5 * x * x


def test_parse_pulse():
    p = parse_pulse("gaussian:t0=5,sigma=1,f0=0.1")
    assert p.f(5.0) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        parse_pulse("square:f0=1")
