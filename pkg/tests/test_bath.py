import math

import numpy as np
import pytest

from radreact.bath import (
    BlackbodySpectrum,
    OhmicSpectrum,
    TabulatedSpectrum,
    check_admissibility,
    form_factor_sq,
    memory_kernel_time,
    mu_boundary,
    parse_bath,
    spectral_blackbody,
    stieltjes_mu,
)
from radreact.errors import DomainError
from radreact.io import emit_columns


def test_form_factor():
    assert form_factor_sq(0.0, 2.0) == 1.0
    assert form_factor_sq(2.0, 2.0) == pytest.approx(0.5)
    assert form_factor_sq(6.0, 2.0) == pytest.approx(0.1)


def test_spectral_blackbody():
    assert spectral_blackbody(0.0, 1.0, 1.0) == 0.0
    assert spectral_blackbody(1.0, 1.0, 1.0) == pytest.approx(0.5)
    assert spectral_blackbody(1e8, 0.3, 2.0) == pytest.approx(0.3 * 4.0, rel=1e-12)
    bb = BlackbodySpectrum.from_tau_e(1.0, 1.0)
    assert bb(1.0) == pytest.approx(0.5)
    assert bb.high_frequency_limit == pytest.approx(1.0)


def test_stieltjes_ohmic(rng):
    spec = OhmicSpectrum(0.7)
    for z in rng.uniform(-3, 3, 5) + 1j * rng.uniform(0.1, 3, 5):
        assert stieltjes_mu(z, spec) == pytest.approx(0.7, rel=1e-10)


def test_stieltjes_blackbody_examples():
    A, W = 0.4, 1.7
    bb = BlackbodySpectrum(A, W)
    assert stieltjes_mu(1j * W, bb) == pytest.approx(0.5 * A * W ** 2, rel=1e-9)
    assert stieltjes_mu(1e6j, bb) == pytest.approx(A * W ** 2 * 1e6 / (1e6 + W), rel=1e-8)


def test_stieltjes_domain():
    with pytest.raises(DomainError):
        stieltjes_mu(1.0 - 0.1j, OhmicSpectrum(1.0))
    with pytest.raises(DomainError):
        stieltjes_mu(1.0 + 0j, OhmicSpectrum(1.0))


def test_stieltjes_boundary_round_trip():
    bb = BlackbodySpectrum.from_tau_e(1.0, 1.0)
    for w in (0.3, 1.0, 4.0):
        got = stieltjes_mu(w + 1e-4j, bb)
        assert abs(got.real - bb(w)) / bb(w) < 1e-3


def test_mu_boundary_routes_agree():
    bb = BlackbodySpectrum.from_tau_e(1.0, 1.0, 2.0)
    for w in (0.1, 1.0, 5.0):
        a = mu_boundary(w, bb)
        b = mu_boundary(w, bb, quadrature=True)
        assert abs(a - b) / abs(a) < 1e-9
        assert a.real == pytest.approx(bb(w), rel=1e-12)


def test_memory_kernel():
    A, W = 0.5, 2.0
    mk = memory_kernel_time(BlackbodySpectrum(A, W))
    assert mk.delta_coefficient == pytest.approx(A * W * W)
    assert mk(1.0 / W) == pytest.approx(-A * W ** 3 * math.exp(-1.0), rel=1e-7)
    assert abs(mk(30.0 / W)) < 1e-10
    ok = memory_kernel_time(OhmicSpectrum(1.3))
    assert ok.delta_coefficient == 1.3
    assert ok(0.5) == 0.0


def test_admissibility():
    grid = np.linspace(0.01, 20, 200)
    rep = check_admissibility(OhmicSpectrum(2.0), grid)
    assert rep.passed and rep.min_value == 2.0
    rep = check_admissibility(BlackbodySpectrum.from_tau_e(1.0, 1.0), grid)
    assert rep.passed
    # int_0^inf w^2/((w^2+1)(1+w^2)) dw = pi/4 for Omega = A = 1
    assert rep.integrability.value == pytest.approx(math.pi / 4, rel=1e-7)
    w = np.linspace(0.0, 10.0, 11)
    vals = np.ones_like(w)
    vals[4] = -0.5
    rep = check_admissibility(TabulatedSpectrum(w, vals), grid=w)
    assert not rep.passed
    assert rep.negative_points == [4.0]


def test_tabulated_csv_round_trip(tmp_path):
    bb = BlackbodySpectrum.from_tau_e(1.0, 1.0)
    w = np.linspace(0.0, 50.0, 2001)
    path = tmp_path / "spec.csv"
    emit_columns(path, ["omega", "R"], [w, bb(w)])
    tab = TabulatedSpectrum.from_csv(path)
    assert np.array_equal(tab(w), bb(w))


def test_parse_bath():
    assert parse_bath("ohmic:zeta=2").zeta == 2.0
    bb = parse_bath("blackbody", M=1.0, tau_e=0.5)
    assert bb.high_frequency_limit == pytest.approx(0.5 * 4.0)
    with pytest.raises(Exception):
        parse_bath("bogus:x=1")
