import math

import numpy as np
import pytest

from radreact.dynamics import integrate_fo_free
from radreact.errors import DomainError, IntegratorError
from radreact.forces import capacitor_gate
from radreact.relativistic import (
    FourVelocity,
    UniformEMField,
    capacitor_scenario,
    integrate_relativistic,
    mass_shell_residual,
    uniform_pulse_velocity_gain,
)

E_CHARGE = math.sqrt(1.5)


def test_four_velocity():
    u = FourVelocity.from_velocity([0.6, 0.0, 0.0])
    assert u.gamma == pytest.approx(1.25)
    assert u.norm_residual() < 1e-15
    assert u.velocity == pytest.approx([0.6, 0.0, 0.0])
    with pytest.raises(DomainError):
        FourVelocity.from_velocity([1.0, 0.0, 0.0])


def test_free_motion():
    u = FourVelocity.from_velocity([0.3, 0.1, 0.0])
    tr = integrate_relativistic(UniformEMField(), u, [0, 0, 0], (0.0, 10.0), n_out=101)
    assert np.allclose(tr.v, [0.3, 0.1, 0.0], atol=1e-15)
    assert np.ptp(tr.gamma) == 0.0
    assert mass_shell_residual(tr) <= 1e-12
    assert tr.tau[-1] == pytest.approx(10.0 / u.gamma, rel=1e-12)


def test_cyclotron_orbit():
    B, v0 = 0.05, 0.5
    u = FourVelocity.from_velocity([v0, 0.0, 0.0])
    tr = integrate_relativistic(UniformEMField(B=(0, 0, B)), u, [0, 0, 0], (0.0, 200.0), tau_e=0.0,
                                n_out=2001)
    speed = np.linalg.norm(tr.v, axis=1)
    assert np.max(np.abs(speed - v0)) / v0 <= 1e-9
    w = E_CHARGE * B / u.gamma  # e B / (gamma M c) with M = c = 1
    R = v0 / w
    # counter-clockwise gyration about (0, -R) for positive charge, B along +z, v along +x
    ref = np.stack([R * np.sin(w * tr.t), R * (np.cos(w * tr.t) - 1.0)], axis=1)
    assert np.max(np.abs(tr.x[:, :2] - ref)) / R <= 1e-8


def test_lorentz_force_degeneration():
    # with tau_e = 0 and a static E along x, gamma v grows linearly: p(t) = p0 + e E t
    E = 1e-3
    u = FourVelocity.from_velocity([0.2, 0.0, 0.0])
    tr = integrate_relativistic(UniformEMField(E=(E, 0, 0)), u, [0, 0, 0], (0.0, 500.0), tau_e=0.0)
    p_ref = u.u1 + E_CHARGE * E * tr.t
    v_ref = p_ref / np.sqrt(1.0 + p_ref ** 2)
    assert np.max(np.abs(tr.v[:, 0] - v_ref) / v_ref) <= 1e-8


def test_nonrelativistic_limit_matches_fo():
    dv_rel, dv_nr, _ = uniform_pulse_velocity_gain(1e-3)
    assert abs(dv_rel - dv_nr) / dv_nr < 1e-4
    # same gate through the one-dimensional module
    env = capacitor_gate(1.0, t_on=50.0, plateau=500.0, ramp=50.0)
    f0 = 0.1 * 1e-3 / 550.0
    fo = integrate_fo_free(env.scaled(f0), 0.0, 1e-3, (0.0, 700.0), rtol=1e-12, atol=1e-17)
    assert fo.v[-1] - 1e-3 == pytest.approx(dv_nr, rel=1e-8)


def test_deviation_scales_as_beta_squared():
    devs = []
    for beta in (1e-3, 2e-3):
        dr, dn, _ = uniform_pulse_velocity_gain(beta)
        devs.append(abs(dr - dn) / dn)
    assert devs[1] / devs[0] == pytest.approx(4.0, abs=0.3)


def test_corrupted_sample_detected():
    u = FourVelocity.from_velocity([0.3, 0.0, 0.0])
    tr = integrate_relativistic(UniformEMField(E=(1e-3, 0, 0)), u, [0, 0, 0], (0.0, 10.0), n_out=11)
    assert mass_shell_residual(tr) <= 1e-9
    tr.g[4] *= 1.0 + 1e-6
    assert mass_shell_residual(tr) > 1e-7
    bad = [FourVelocity(1.0, 0.5, 0.0, 0.0)]
    assert mass_shell_residual(bad) == pytest.approx(0.25)


def test_shell_tolerance_enforced():
    u = FourVelocity.from_velocity([0.3, 0.0, 0.0])
    with pytest.raises(IntegratorError):
        integrate_relativistic(UniformEMField(E=(1e-2, 0, 0)), u, [0, 0, 0], (0.0, 50.0),
                               rtol=1e-3, atol=1e-6, shell_tol=1e-16)
    with pytest.raises(DomainError):
        integrate_relativistic(UniformEMField(), FourVelocity(1.0, 0.5, 0.0, 0.0), [0, 0, 0], (0.0, 1.0))


def test_capacitor_zero_field():
    res = capacitor_scenario(0.0, 4.0, 0.01, 20.0)
    assert res.outcome == "transmitted"
    assert np.all(res.trajectory.power == 0.0)
    assert res.entry_energy == 0.0 and res.exit_energy == 0.0


def test_capacitor_bursts():
    res = capacitor_scenario(2e-8, 8.0, 0.01, 20.0)
    s = res.summary()
    assert res.outcome == "transmitted"
    assert s["mass_shell_residual"] <= 1e-9
    assert s["plateau_ratio"] <= 1e-6
    # opposite-sign edge bursts of equal size up to the relative velocity change
    assert s["entry_burst"] < 0 < s["exit_burst"]
    assert abs(s["entry_burst"]) / s["exit_burst"] == pytest.approx(1.0, abs=2e-3)
    assert s["total_radiated"] == pytest.approx(s["larmor_nonrelativistic"], rel=0.02)


def test_capacitor_reflection_is_an_outcome():
    assert capacitor_scenario(-5e-5, 4.0, 0.01, 20.0).outcome == "reflected"
    with pytest.raises(DomainError):
        capacitor_scenario(1e-8, 0.1, 0.01, 20.0)
