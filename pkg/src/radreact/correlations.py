"""Fluctuation-dissipation correlation functions.

Symmetric correlations carry the thermal factor ``hbar w coth(hbar w / 2kT)``.
It is split as ``hbar w + 2 hbar w n(w)`` with ``n`` the Bose occupation: the
second piece decays exponentially and is integrated numerically, the first is
the zero-point part whose flat high-frequency component has a closed-form
transform.  ``hbar = 0`` selects the classical limit, ``coth -> 2kT/(hbar w)``.

Temperatures are passed together with ``k_B`` (default 1, i.e. ``T`` already
in energy units).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bath import OhmicSpectrum, SpectralDistribution
from .core import oscillator_derived
from .errors import DomainError, NumericError, UnsupportedError
from .quadrature import adaptive_panels, feature_edges, fourier_integral
from .response import Susceptibility

__all__ = [
    "CorrValue",
    "CorrelationFunction",
    "bose_weight",
    "force_autocorrelation",
    "force_commutator",
    "ohmic_force_autocorrelation_closed",
    "position_autocorrelation",
    "position_commutator",
    "equal_time_xv_commutator",
    "classical_oscillator_autocorr",
    "msd_zero_temperature",
    "msd_cutoff_integral",
    "correlation_curve",
]


class CorrValue(NamedTuple):
    """Smooth value at one lag, its error estimate and the separate delta weight."""

    value: float
    abserr: float
    delta: float = 0.0


def bose_weight(y):
    """``y / (e^y - 1)`` evaluated stably; equals 1 at ``y = 0``.

    ``2 kT * bose_weight(hbar w / kT)`` is ``2 hbar w n(w)``.
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.where(y == 0, 1.0, y / np.expm1(np.where(y == 0, 1.0, y)))
    out = np.where(y > 700, 0.0, out)
    return out if out.ndim else float(out)


def _check_T(T, k_B):
    if T < 0:
        raise DomainError("temperature must be non-negative")
    if k_B <= 0:
        raise DomainError("k_B must be positive")


def _flat_limit(spectral):
    r_inf = spectral.high_frequency_limit
    if not math.isfinite(r_inf):
        raise NumericError("spectrum grows without bound; the correlation integral diverges")
    return r_inf


def _head(spectral, *scales):
    return 4.0 * max([spectral.scale] + [s for s in scales if s > 0])


# --------------------------------------------------------------------------
# Force correlations


def force_autocorrelation(dt, spectral: SpectralDistribution, T, hbar, k_B=1.0, rtol=1e-10):
    """Symmetrised equilibrium force correlation at lag ``dt``.

    Smooth part of ``(1/pi) int_0^inf R(w) hbar w coth(hbar w/2kT) cos(w dt) dw``.
    The flat tail ``R(inf)`` contributes, besides its smooth finite part, a
    delta function ``2 kT R(inf) delta(dt)``; its weight is returned in
    ``.delta`` and never folded into ``.value``.

    Returns
    -------
    CorrValue
    """
    _check_T(T, k_B)
    if hbar < 0:
        raise DomainError("hbar must be non-negative")
    r_inf = _flat_limit(spectral)
    kT = k_B * T
    dt = abs(float(dt))
    feats = spectral.features
    delta = 2.0 * kT * r_inf

    def g(w):
        return spectral(w) - r_inf

    if hbar == 0.0:
        if kT == 0.0:
            return CorrValue(0.0, 0.0, 0.0)
        if isinstance(spectral, OhmicSpectrum):
            return CorrValue(0.0, 0.0, delta)
        res = fourier_integral(g, dt, "cos", head=_head(spectral), features=feats, rtol=rtol)
        return CorrValue(2.0 * kT / math.pi * res.value, 2.0 * kT / math.pi * res.abserr, delta)

    if dt == 0.0:
        raise NumericError("quantum force correlation diverges at zero lag (zero-point 1/t^2 tail)")
    total, err = 0.0, 0.0
    # zero-point, flat part: (hbar R_inf / pi) * finite part of int w cos(w t) = -1/t^2
    total += -hbar * r_inf / (math.pi * dt * dt)
    # zero-point, decaying part
    if not isinstance(spectral, OhmicSpectrum):
        res = fourier_integral(lambda w: g(w) * w, dt, "cos", head=_head(spectral),
                               features=feats, rtol=rtol)
        total += hbar / math.pi * res.value
        err += hbar / math.pi * res.abserr
    # thermal part 2 hbar w n(w) R(w), exponentially decaying
    if kT > 0:
        wT = kT / hbar
        res = fourier_integral(lambda w: spectral(w) * bose_weight(w / wT), dt, "cos",
                               head=_head(spectral, 8 * wT), features=feats, rtol=rtol)
        total += 2.0 * kT / math.pi * res.value
        err += 2.0 * kT / math.pi * res.abserr
    return CorrValue(total, err, delta)


def ohmic_force_autocorrelation_closed(dt, zeta, T, hbar, k_B=1.0):
    """Closed-form smooth part ``-kT zeta Omega_T / sinh^2(Omega_T dt)`` for an Ohmic bath.

    ``Omega_T = pi kT / hbar``; at ``T = 0`` the limit ``-zeta hbar / (pi dt^2)``.
    """
    dt = np.asarray(dt, dtype=float)
    kT = k_B * T
    if T == 0:
        out = -zeta * hbar / (math.pi * dt * dt)
    else:
        wT = math.pi * kT / hbar
        out = -kT * zeta * wT / np.sinh(wT * dt) ** 2
    return out if out.ndim else float(out)


def force_commutator(dt, spectral: SpectralDistribution, hbar, rtol=1e-10):
    """Magnitude of the force commutator, ``(2/pi) int R(w) hbar w sin(w dt) dw``.

    The flat tail contributes only ``-2 R(inf) hbar delta'(dt)``, which vanishes
    for ``dt != 0``; the value returned is that regularised finite part.  Odd
    in ``dt`` and independent of temperature.
    """
    if hbar < 0:
        raise DomainError("hbar must be non-negative")
    r_inf = _flat_limit(spectral)
    dt = float(dt)
    if dt == 0.0 or hbar == 0.0 or isinstance(spectral, OhmicSpectrum):
        return CorrValue(0.0, 0.0, 0.0)
    res = fourier_integral(lambda w: (spectral(w) - r_inf) * w, dt, "sin",
                           head=_head(spectral), features=spectral.features, rtol=rtol)
    return CorrValue(2.0 * hbar / math.pi * res.value, 2.0 * hbar / math.pi * res.abserr, 0.0)


# --------------------------------------------------------------------------
# Position correlations


def _bound(sus: Susceptibility):
    if sus.K <= 0:
        raise DomainError(
            "position correlations of a free particle diverge at low frequency; "
            "use the mean-square-displacement or diffusion estimators instead"
        )


def _sus_features(sus):
    if sus.kind == "general":
        return list(sus.spectral.features), math.sqrt(sus.K / max(sus.m_bare, 1e-300))
    p = oscillator_derived(sus.K, sus.M, sus.tau_e)
    width = max(p.gamma / 2, 1e-300)
    if p.overdamped:
        return [], p.omega0
    return [(p.omega1, width)], p.omega0


def _undamped(sus):
    return sus.kind == "ford_oconnell" and sus.tau_e == 0


def position_autocorrelation(dt, sus: Susceptibility, T, hbar, k_B=1.0, cutoff=None, rtol=1e-10):
    """``(hbar/pi) int_0^inf Im alpha(w) coth(hbar w / 2kT) cos(w dt) dw``.

    ``hbar = 0`` gives the classical limit.  At zero lag with ``hbar > 0`` the
    radiation-damped oscillator has a logarithmically divergent integral; pass
    ``cutoff`` (an upper frequency limit) in that case.
    """
    _check_T(T, k_B)
    _bound(sus)
    kT = k_B * T
    dt = abs(float(dt))
    if _undamped(sus):
        w0 = math.sqrt(sus.K / sus.M)
        if hbar == 0:
            amp = kT / sus.K
        else:
            amp = hbar / (2 * sus.M * w0) / math.tanh(hbar * w0 / (2 * kT)) if kT > 0 \
                else hbar / (2 * sus.M * w0)
        return CorrValue(amp * math.cos(w0 * dt), 0.0)
    feats, w0 = _sus_features(sus)
    im = sus.imag_real_axis
    head = 4.0 * max(w0, 1e-300)
    total, err = 0.0, 0.0

    def run(f, kind_head):
        if cutoff is not None:
            edges = np.unique(np.concatenate([
                feature_edges(0.0, min(kind_head, cutoff), feats, n_base=16),
                np.geomspace(min(kind_head, cutoff), cutoff, 64) if cutoff > kind_head else [],
            ]))
            r = adaptive_panels(lambda w: f(w) * np.cos(w * dt), edges, rtol=rtol)
            return r.value, r.abserr
        r = fourier_integral(f, dt, "cos", head=kind_head, features=feats, rtol=rtol)
        return r.value, r.abserr

    if hbar == 0.0:
        if kT == 0:
            return CorrValue(0.0, 0.0)
        v, e = run(lambda w: _safe_div(im(w), w), head)
        return CorrValue(2 * kT / math.pi * v, 2 * kT / math.pi * e)
    if dt == 0.0 and cutoff is None:
        raise NumericError("zero-lag quantum position correlation diverges logarithmically; "
                           "supply a frequency cutoff")
    v, e = run(im, head)
    total += hbar / math.pi * v
    err += hbar / math.pi * e
    if kT > 0:
        wT = kT / hbar
        v, e = run(lambda w: _safe_div(im(w), w) * bose_weight(w / wT), max(head, 8 * wT))
        total += 2 * kT / math.pi * v
        err += 2 * kT / math.pi * e
    return CorrValue(total, err)


def _safe_div(a, w):
    w = np.asarray(w, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(w == 0, 0.0, a / np.where(w == 0, 1.0, w))
    return out


def position_commutator(dt, sus: Susceptibility, hbar, rtol=1e-10):
    """``(2 hbar / pi) int_0^inf Im alpha(w) sin(w dt) dw`` (the magnitude of ``[x(t), x(t+dt)]/i``).

    For the undamped oscillator the integral is a pair of delta functions and
    the residue result ``(hbar / M w0) sin(w0 dt)`` is returned.
    """
    _bound(sus)
    dt = float(dt)
    if dt == 0.0 or hbar == 0.0:
        return CorrValue(0.0, 0.0)
    if _undamped(sus):
        w0 = math.sqrt(sus.K / sus.M)
        return CorrValue(hbar / (sus.M * w0) * math.sin(w0 * dt), 0.0)
    feats, w0 = _sus_features(sus)
    r = fourier_integral(sus.imag_real_axis, dt, "sin", head=4 * w0, features=feats, rtol=rtol)
    return CorrValue(2 * hbar / math.pi * r.value, 2 * hbar / math.pi * r.abserr)


@dataclass
class CommutatorReport:
    value: float
    direct: float
    etas: list
    samples: list
    fit_coefficients: list
    spread: float

    def as_dict(self):
        return dict(self.__dict__)


def equal_time_xv_commutator(sus: Susceptibility, hbar, n_eta=10, eta0=None, return_report=False):
    """Magnitude of ``[x(t), xdot(t)]`` for the FO oscillator.

    The derivative of the position commutator at zero lag is
    ``(2 hbar/pi) int w Im alpha(w) dw``, which is conditionally defined because
    ``w Im alpha -> tau_e/M``.  It is regularised with ``exp(-eta w)``:
    ``J(eta)`` is evaluated on a geometric sequence of ``eta`` and fitted to
    ``c_-1/eta + c_0 + c_1 eta log eta + c_2 eta``; ``c_0`` is the answer.  A
    second estimate subtracts the flat tail analytically and is kept in the
    report.

    Raises
    ------
    NumericError
        if the two estimates disagree by more than 1e-3 relative.
    """
    if sus.kind != "ford_oconnell":
        raise UnsupportedError("the equal-time commutator is implemented for the FO kind")
    _bound(sus)
    M, tau = sus.M, sus.tau_e
    p = oscillator_derived(sus.K, M, tau)
    im = sus.imag_real_axis
    feats = [] if p.overdamped else [(p.omega1, max(p.gamma / 2, 1e-300))]
    if tau == 0:
        val = hbar / M
        rep = CommutatorReport(val, val, [], [], [], 0.0)
        return (val, rep) if return_report else val
    w0 = p.omega0
    if eta0 is None:
        eta0 = 1e-2 / max(w0, 1.0 / tau)
    etas = [eta0 * 0.5 ** k for k in range(n_eta)]

    edges0 = feature_edges(0.0, 8 * w0, feats, n_base=16)

    def J(eta):
        f = lambda w: w * im(w) * np.exp(-eta * w)  # noqa: E731
        body = adaptive_panels(f, edges0, rtol=1e-13).value
        lo = 8 * w0
        tail = 0.0
        for _ in range(400):
            hi = 2 * lo
            v = adaptive_panels(f, np.linspace(lo, hi, 5), rtol=1e-13, scale=abs(body + tail)).value
            tail += v
            if abs(v) < 1e-16 * abs(body + tail) and eta * lo > 40:
                break
            lo = hi
        return body + tail

    samples = [J(e) for e in etas]
    E = np.array(etas)
    A = np.column_stack([1 / E, np.ones_like(E), E * np.log(E), E])
    # rescale columns for conditioning
    s = np.max(np.abs(A), axis=0)
    coef, *_ = np.linalg.lstsq(A / s, np.array(samples), rcond=None)
    coef = coef / s
    c0 = float(coef[1])
    # leave-two-out spread as an extrapolation error estimate
    coef2, *_ = np.linalg.lstsq((A / s)[2:], np.array(samples)[2:], rcond=None)
    spread = abs(float(coef2[1] / s[1]) - c0)

    # w Im alpha - tau/M written without cancellation
    w0sq = p.omega0 ** 2
    b1 = p.gamma ** 2 - 2 * w0sq

    def g(w):
        w2 = w * w
        return tau / M * (-(b1 * w2) - w0sq * w0sq) / (w2 * w2 + b1 * w2 + w0sq * w0sq)

    direct = adaptive_panels(g, edges0, rtol=1e-13).value
    lo = 8 * w0
    for _ in range(400):
        hi = 2 * lo
        v = adaptive_panels(g, np.linspace(lo, hi, 5), rtol=1e-13, scale=abs(direct)).value
        direct += v
        if abs(v) < 1e-15 * abs(direct):
            break
        lo = hi
    val = 2 * hbar / math.pi * c0
    direct_val = 2 * hbar / math.pi * direct
    rep = CommutatorReport(val, direct_val, etas, samples, [float(c) for c in coef], spread)
    if abs(val - direct_val) > 1e-3 * abs(direct_val):
        raise NumericError(
            f"eta extrapolation ({val!r}) disagrees with tail subtraction ({direct_val!r})",
            residual=abs(val - direct_val), details=rep.as_dict())
    return (val, rep) if return_report else val


def classical_oscillator_autocorr(t, K, M, tau_e, T, k_B=1.0):
    """``(kT/K) e^{-gamma|t|/2} [cos(w1 t) - (gamma / 2 w1) sin(w1 |t|)]``.

    Vectorised over ``t``.  Only the underdamped case has this form.
    """
    if K <= 0:
        raise DomainError("K must be positive")
    p = oscillator_derived(K, M, tau_e)
    if p.overdamped or p.omega1 == 0:
        raise UnsupportedError("closed form is given for the underdamped oscillator only")
    t = np.abs(np.asarray(t, dtype=float))
    kT = k_B * T
    out = kT / K * np.exp(-0.5 * p.gamma * t) * (
        np.cos(p.omega1 * t) - p.gamma / (2 * p.omega1) * np.sin(p.omega1 * t))
    return out if out.ndim else float(out)


def msd_zero_temperature(omega0, tau_e, M, c, hbar, cutoff_factor=1.0):
    """Leading-log ground-state width ``(hbar/2 M w0)(1 + (2 w0 tau_e/pi) log(w_c/w0))``.

    ``w_c = cutoff_factor * M c^2 / hbar``.  Warns when ``w0 tau_e > 0.1``,
    where the leading-log form is unreliable.
    """
    if min(omega0, M, c, hbar, cutoff_factor) <= 0 or tau_e < 0:
        raise DomainError("need positive omega0, M, c, hbar, cutoff_factor and tau_e >= 0")
    if omega0 * tau_e > 0.1:
        warnings.warn("omega0*tau_e > 0.1: the leading-log width formula is not accurate",
                      RuntimeWarning, stacklevel=2)
    wc = cutoff_factor * M * c * c / hbar
    return hbar / (2 * M * omega0) * (1 + 2 * omega0 * tau_e / math.pi * math.log(wc / omega0))


def msd_cutoff_integral(omega0, tau_e, M, c, hbar, cutoff_factor=1.0, rtol=1e-12):
    """Direct ``(hbar/pi) int_0^{w_c} Im alpha(w) dw`` for the FO oscillator."""
    wc = cutoff_factor * M * c * c / hbar
    K = M * omega0 ** 2
    sus = Susceptibility.ford_oconnell(M, K, tau_e)
    p = oscillator_derived(K, M, tau_e)
    head = min(4 * omega0, wc)
    feats = [] if p.overdamped else [(p.omega1, max(p.gamma / 2, 1e-300))]
    edges = feature_edges(0.0, head, feats, n_base=16)
    if wc > head:
        n = max(8, int(math.ceil(4 * math.log10(wc / head))))
        edges = np.unique(np.concatenate([edges, np.geomspace(head, wc, n + 1)]))
    r = adaptive_panels(sus.imag_real_axis, edges, rtol=rtol)
    return CorrValue(hbar / math.pi * r.value, hbar / math.pi * r.abserr)


# --------------------------------------------------------------------------
# Curves


@dataclass
class CorrelationFunction:
    """A correlation function sampled on a lag grid."""

    t: np.ndarray
    values: np.ndarray
    abserr: np.ndarray
    kind: str
    delta: float = 0.0
    meta: dict = field(default_factory=dict)

    def as_rows(self):
        return list(zip(self.t.tolist(), self.values.tolist(), self.abserr.tolist()))


_KINDS = ("force_sym", "force_comm", "position_sym", "position_comm")


def correlation_curve(kind, lags, *, spectral=None, susceptibility=None, T=0.0, hbar=1.0,
                      k_B=1.0, workers=1, cutoff=None):
    """Evaluate one correlation kind on ``lags``.

    Each lag is an independent evaluation, so ``workers > 1`` only changes the
    schedule, never the numbers.
    """
    if kind not in _KINDS:
        raise DomainError(f"unknown correlation kind {kind!r}; expected one of {_KINDS}")
    lags = np.asarray(lags, dtype=float)
    if kind.startswith("force") and spectral is None:
        raise DomainError("force correlations need a spectral distribution")
    if kind.startswith("position") and susceptibility is None:
        raise DomainError("position correlations need a susceptibility")

    def one(t):
        if kind == "force_sym":
            return force_autocorrelation(t, spectral, T, hbar, k_B)
        if kind == "force_comm":
            return force_commutator(t, spectral, hbar)
        if kind == "position_sym":
            return position_autocorrelation(t, susceptibility, T, hbar, k_B, cutoff=cutoff)
        return position_commutator(t, susceptibility, hbar)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(one, lags.tolist()))
    else:
        res = [one(t) for t in lags.tolist()]
    delta = res[0].delta if res else 0.0
    meta = {"T": T, "hbar": hbar, "k_B": k_B}
    if spectral is not None:
        meta["bath"] = spectral.describe()
    if susceptibility is not None:
        meta["susceptibility"] = susceptibility.describe()
    return CorrelationFunction(
        lags,
        np.array([r.value for r in res]),
        np.array([r.abserr for r in res]),
        kind,
        delta,
        meta,
    )
