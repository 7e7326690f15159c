import math

import numpy as np
import pytest

from radreact.bath import BlackbodySpectrum, OhmicSpectrum, TabulatedSpectrum
from radreact.errors import PoleError, UnsupportedError
from radreact.response import (
    Susceptibility,
    alpha_abraham_lorentz,
    alpha_fo,
    alpha_general,
    kramers_kronig_residual,
    pole_diagnostics,
)


def test_static_limit():
    bb = BlackbodySpectrum.from_tau_e(1.0, 1.0)
    assert alpha_general(1e-9, 0.0, 2.0, bb) == pytest.approx(0.5, rel=1e-8)
    assert alpha_fo(0.0, 1.0, 2.0, 0.3) == pytest.approx(0.5)


def test_ohmic_free_particle_is_imaginary():
    a = alpha_general(0.7, 0.0, 0.0, OhmicSpectrum(2.0))
    assert a == pytest.approx(1.0 / (-1j * 0.7 * 2.0), rel=1e-12)
    assert abs(a.real) < 1e-15


def test_general_pole():
    with pytest.raises(PoleError):
        alpha_general(0.0, 1.0, 0.0, OhmicSpectrum(1.0))
    with pytest.raises(PoleError):
        alpha_fo(0.0, 1.0, 0.0, 1.0)


def test_fo_examples():
    w = np.linspace(0.1, 3, 7)
    assert np.allclose(alpha_fo(w, 1.0, 2.0, 0.0), 1.0 / (2.0 - w ** 2), rtol=1e-14)
    M, K, tau = 1.0, 4.0, 0.2
    w0 = math.sqrt(K / M)
    a = alpha_fo(w0, M, K, tau)
    assert abs(a) == pytest.approx(math.sqrt(1 + (w0 * tau) ** 2) / (w0 * tau * K), rel=1e-12)


def test_al_differs_from_fo_at_order_tau_sq():
    M, K = 1.0, 1.0
    errs = []
    for tau in (1e-2, 5e-3):
        errs.append(abs(alpha_abraham_lorentz(0.5, M, K, tau) - alpha_fo(0.5, M, K, tau)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_poles_fo_and_al():
    rep = pole_diagnostics(Susceptibility.ford_oconnell(1.0, 1.0, 0.05))
    assert rep.causal and all(p.half_plane == "lower" for p in rep.poles)
    al = pole_diagnostics(Susceptibility.abraham_lorentz(1.0, 0.0, 0.5))
    up = [p.value for p in al.poles if p.half_plane == "upper"]
    assert len(up) == 1 and up[0] == pytest.approx(2j, abs=1e-12)
    bare = pole_diagnostics(Susceptibility.ford_oconnell(1.0, 4.0, 0.0))
    vals = sorted(p.value.real for p in bare.poles)
    assert vals == pytest.approx([-2.0, 2.0])
    assert all(p.half_plane == "real" for p in bare.poles)


def test_poles_general():
    rep = pole_diagnostics(Susceptibility.general(1.0, 1.0, OhmicSpectrum(0.5)))
    assert rep.causal and len(rep.poles) == 2
    tab = TabulatedSpectrum(np.linspace(0.0, 5.0, 6), np.ones(6))
    with pytest.raises(UnsupportedError):
        pole_diagnostics(Susceptibility.general(1.0, 1.0, tab))


def test_kramers_kronig():
    grid = np.linspace(-10.0, 10.0, 41)
    fo = kramers_kronig_residual(Susceptibility.ford_oconnell(1.0, 1.0, 0.1), grid)
    assert fo < 1e-3
    al = kramers_kronig_residual(Susceptibility.abraham_lorentz(1.0, 1.0, 1.0), grid)
    assert al > 0.1
    with pytest.raises(PoleError):
        kramers_kronig_residual(Susceptibility.ford_oconnell(1.0, 1.0, 0.0), grid)


def test_susceptibility_callable_matches_functions():
    s = Susceptibility.ford_oconnell(1.0, 0.3, 1.0)
    assert s(0.8) == alpha_fo(0.8, 1.0, 0.3, 1.0)
    im = s.imag_real_axis(np.array([0.8]))
    assert im[0] == pytest.approx(alpha_fo(0.8, 1.0, 0.3, 1.0).imag, rel=1e-12)
