"""Linear response of the bound particle: susceptibilities, poles, causality.

Two families are modelled.  The *general* susceptibility combines a bare mass
with any bath, ``alpha = 1 / (-m w^2 - i w mu(w) + K)``; the runaway-free
FO polarizability is the special case with a blackbody bath at maximal
cutoff and zero bare mass.  An Abraham-Lorentz comparison response, whose denominator
carries the runaway pole, is provided for contrast.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bath import (
    BlackbodySpectrum,
    OhmicSpectrum,
    SpectralDistribution,
    mu_boundary,
    stieltjes_mu,
)
from .core import oscillator_derived
from .errors import DomainError, NumericError, PoleError, UnsupportedError
from .quadrature import adaptive_panels, feature_edges

__all__ = [
    "Susceptibility",
    "Pole",
    "PoleReport",
    "alpha_general",
    "alpha_fo",
    "alpha_abraham_lorentz",
    "pole_diagnostics",
    "kramers_kronig_residual",
]


def _mu(z, spectral, quadrature=False):
    z = complex(z)
    if not quadrature:
        cf = spectral.closed_form_mu(z)
        if cf is not None:
            return complex(cf)
    if z.imag > 0:
        return stieltjes_mu(z, spectral)
    if z.imag < 0:
        raise DomainError("mu(z) is only defined on the real axis and the upper half plane")
    return mu_boundary(z.real, spectral, quadrature)


def alpha_general(omega, m_bare, K, spectral: SpectralDistribution, quadrature=False):
    """``1 / (-m w^2 - i w mu(w) + K)`` at one real or upper-half-plane point.

    ``quadrature`` forces the Stieltjes route for ``mu`` even when the bath has
    a closed form.
    """
    w = complex(omega)
    den = -m_bare * w * w - 1j * w * _mu(w, spectral, quadrature) + K
    if den == 0:
        raise PoleError(f"susceptibility has a pole at omega={omega!r}")
    return 1.0 / den


def alpha_fo(omega, M, K, tau_e):
    """FO polarizability ``(1 - i w tau_e) / (-M w^2 + (1 - i w tau_e) K)``.

    Vectorised over ``omega``.
    """
    w = np.asarray(omega, dtype=complex)
    num = 1.0 - 1j * w * tau_e
    den = -M * w * w + num * K
    if np.any(den == 0):
        raise PoleError("FO susceptibility evaluated on a pole (K = 0, omega = 0)")
    out = num / den
    return out if out.ndim else complex(out)


def alpha_abraham_lorentz(omega, M, K, tau_e):
    """Response implied by the Abraham-Lorentz equation, ``1/(-M w^2 - i M tau_e w^3 + K)``."""
    w = np.asarray(omega, dtype=complex)
    den = -M * w * w - 1j * M * tau_e * w ** 3 + K
    if np.any(den == 0):
        raise PoleError("Abraham-Lorentz response evaluated on a pole")
    out = 1.0 / den
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class Susceptibility:
    """A response function ``alpha(w)`` with enough structure to find its poles.

    kind
        ``"general"`` (``m_bare``, ``K``, ``spectral``), ``"ford_oconnell"``
        (``M``, ``K``, ``tau_e``) or ``"abraham_lorentz"`` (same fields; the
        non-causal comparison response).
    """

    kind: str
    K: float
    M: float | None = None
    tau_e: float | None = None
    m_bare: float | None = None
    spectral: SpectralDistribution | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("general", "ford_oconnell", "abraham_lorentz"):
            raise DomainError(f"unknown susceptibility kind {self.kind!r}")
        if self.K < 0:
            raise DomainError("K must be non-negative")
        if self.kind == "general":
            if self.m_bare is None or self.spectral is None:
                raise DomainError("general susceptibility needs m_bare and spectral")
        else:
            if self.M is None or self.tau_e is None:
                raise DomainError(f"{self.kind} susceptibility needs M and tau_e")
            if self.M <= 0 or self.tau_e < 0:
                raise DomainError("need M > 0 and tau_e >= 0")

    @classmethod
    def ford_oconnell(cls, M, K, tau_e):
        return cls("ford_oconnell", K, M=M, tau_e=tau_e)

    @classmethod
    def abraham_lorentz(cls, M, K, tau_e):
        return cls("abraham_lorentz", K, M=M, tau_e=tau_e)

    @classmethod
    def general(cls, m_bare, K, spectral):
        return cls("general", K, m_bare=m_bare, spectral=spectral)

    def __call__(self, omega):
        if self.kind == "ford_oconnell":
            return alpha_fo(omega, self.M, self.K, self.tau_e)
        if self.kind == "abraham_lorentz":
            return alpha_abraham_lorentz(omega, self.M, self.K, self.tau_e)
        w = np.asarray(omega, dtype=complex)
        if w.ndim == 0:
            return alpha_general(complex(w), self.m_bare, self.K, self.spectral)
        return np.array([alpha_general(x, self.m_bare, self.K, self.spectral) for x in w.ravel()]
                        ).reshape(w.shape)

    def imag_real_axis(self, omega):
        """``Im alpha`` on real ``omega`` (vectorised, odd in ``omega``)."""
        w = np.asarray(omega, dtype=float)
        if self.kind == "ford_oconnell":
            # closed form keeps full relative precision far from resonance
            M, K, tau = self.M, self.K, self.tau_e
            w2 = w * w
            w0 = math.sqrt(K / M)
            # factored so that K - M w^2 keeps relative precision near resonance
            den = (M * (w0 - w) * (w0 + w)) ** 2 + (w * tau * K) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                out = M * tau * w2 * w / den
            if np.any(den == 0):
                raise PoleError("Im alpha evaluated on a real pole")
            return out
        return np.imag(self(w))

    @property
    def mass(self):
        return self.M if self.M is not None else self.m_bare

    def oscillator(self):
        if self.kind == "general":
            raise UnsupportedError("oscillator parameters are defined for the FO kind")
        return oscillator_derived(self.K, self.M, self.tau_e)

    def rational_form(self):
        """``(numerator, denominator)`` polynomial coefficients in ``w``, highest power first.

        Available for FO, Abraham-Lorentz and general susceptibilities
        over Ohmic or blackbody baths.
        """
        K = self.K
        if self.kind == "ford_oconnell":
            M, t = self.M, self.tau_e
            return [-1j * t, 1.0], [-M, -1j * t * K, K]
        if self.kind == "abraham_lorentz":
            M, t = self.M, self.tau_e
            return [1.0], [-1j * M * t, -M, 0.0, K]
        m, sp = self.m_bare, self.spectral
        if isinstance(sp, OhmicSpectrum):
            return [1.0], [-m, -1j * sp.zeta, K]
        if isinstance(sp, BlackbodySpectrum):
            # multiply through by (w + i Omega)
            A, Om = sp.coupling, sp.Omega
            den = np.polyadd(np.polymul([-m, 0.0, K], [1.0, 1j * Om]), [-1j * A * Om ** 2, 0.0, 0.0])
            return [1.0, 1j * Om], list(den)
        raise UnsupportedError(f"no rational form for a {sp.kind} bath")

    def describe(self):
        d: dict[str, Any] = {"kind": self.kind, "K": self.K}
        if self.kind == "general":
            d.update(m_bare=self.m_bare, bath=self.spectral.describe())
        else:
            d.update(M=self.M, tau_e=self.tau_e)
        return d


# --------------------------------------------------------------------------
# Poles


@dataclass(frozen=True)
class Pole:
    value: complex
    half_plane: str  # "upper", "lower" or "real"

    def as_dict(self):
        return {"re": self.value.real, "im": self.value.imag, "half_plane": self.half_plane}


@dataclass(frozen=True)
class PoleReport:
    poles: tuple
    kind: str

    @property
    def n_upper(self):
        return sum(p.half_plane == "upper" for p in self.poles)

    @property
    def causal(self):
        return self.n_upper == 0

    def as_dict(self):
        return {"kind": self.kind, "poles": [p.as_dict() for p in self.poles],
                "n_upper": self.n_upper, "causal": self.causal}


def _trim(coeffs):
    c = [complex(x) for x in coeffs]
    while c and c[0] == 0:
        c.pop(0)
    return c


def _poly_roots(coeffs):
    """Roots of a polynomial of degree <= 3 from closed formulas."""
    c = _trim(coeffs)
    roots = []
    # factor out exact zero roots first
    while len(c) > 1 and c[-1] == 0:
        roots.append(0j)
        c.pop()
    deg = len(c) - 1
    if deg <= 0:
        return roots
    if deg == 1:
        return roots + [-c[1] / c[0]]
    if deg == 2:
        a, b, cc = c
        d = cmath.sqrt(b * b - 4 * a * cc)
        # cancellation-free pair
        q = -0.5 * (b + d if (b.conjugate() * d).real >= 0 else b - d)
        if q == 0:
            return roots + [0j, 0j]
        return roots + [q / a, cc / q]
    if deg == 3:
        r = np.roots(np.array(c))
        # one Newton step on the exact polynomial removes eigen-solver rounding
        p = np.poly1d(np.array(c))
        dp = p.deriv()
        out = []
        for x in r:
            x = complex(x)
            dx = dp(x)
            if dx != 0:
                x = x - p(x) / dx
            out.append(complex(x))
        return roots + out
    raise UnsupportedError("pole finding is implemented for degree <= 3")


def _classify(z, scale):
    tol = 1e-12 * max(scale, abs(z))
    if z.imag > tol:
        return "upper"
    if z.imag < -tol:
        return "lower"
    return "real"


def pole_diagnostics(susceptibility: Susceptibility) -> PoleReport:
    """All poles of ``alpha`` with their half-plane classification.

    Roots come from closed-form formulas on the exact denominator, so a pole
    on the imaginary axis is classified without sampling error.

    Raises
    ------
    UnsupportedError
        for susceptibilities without a rational form (tabulated baths).
    """
    num, den = susceptibility.rational_form()
    roots = _poly_roots(den)
    # a numerator zero that cancels a denominator root is not a pole
    nroots = _poly_roots(num) if len(_trim(num)) > 1 else []
    scale = max([abs(r) for r in roots] + [1e-300])
    poles = []
    for r in roots:
        if any(abs(r - q) <= 1e-12 * scale for q in nroots):
            continue
        poles.append(Pole(complex(r), _classify(r, scale)))
    poles.sort(key=lambda p: (p.value.imag, p.value.real))
    return PoleReport(tuple(poles), susceptibility.kind)


# --------------------------------------------------------------------------
# Kramers-Kronig


def _im_features(sus):
    try:
        rep = pole_diagnostics(sus)
    except UnsupportedError:
        return []
    return [(abs(p.value.real), max(abs(p.value.imag), 1e-12 * abs(p.value)))
            for p in rep.poles if abs(p.value.real) > 0]


def _kk_real_part(sus, w, L, feats, atol=0.0):
    """``(1/pi) P int Im alpha(s)/(s - w) ds`` over the real line, ``w >= 0``.

    Uses oddness of ``Im alpha`` to fold onto ``s > 0`` and subtracts the
    value at ``s = w`` so the principal value becomes an ordinary integral.
    """
    im = sus.imag_real_axis
    u0 = 2.0 * w * float(im(w)) if w > 0 else 0.0
    if w > 0:
        dstep = 1e-6 * w
        slope = float(2 * (w + dstep) * im(w + dstep) - 2 * (w - dstep) * im(w - dstep)) / (2 * dstep)
        limit = slope / (2 * w)
    else:
        limit = 0.0

    def g(s):
        num = 2.0 * s * im(s) - u0
        den = s * s - w * w
        with np.errstate(invalid="ignore", divide="ignore"):
            out = num / den
        return np.where(den == 0, limit, out)

    pts = list(feats)
    if w > 0:
        pts.append((w, 1e-3 * max(w, 1e-300)))
    edges = feature_edges(0.0, L, pts, n_base=32)
    body = adaptive_panels(g, edges, rtol=1e-11, atol=atol)
    # tail beyond L: 2 s Im alpha(s) ~ a + b/s^2
    u1 = 2 * L * float(im(L))
    u2 = 2 * (2 * L) * float(im(2 * L))
    b = (u1 - u2) / (1.0 / L ** 2 - 1.0 / (4 * L ** 2))
    a = u1 - b / L ** 2
    if w > 0:
        i0 = math.log((L + w) / (L - w)) / (2 * w)
        i2 = (i0 - 1.0 / L) / (w * w)
    else:
        i0 = 1.0 / L
        i2 = 1.0 / (3 * L ** 3)
    tail = (a - u0) * i0 + b * i2
    return (body.value + tail) / math.pi


def kramers_kronig_residual(susceptibility: Susceptibility, grid, L=None):
    """Largest Kramers-Kronig mismatch on ``grid``, relative to ``max |alpha|``.

    For each grid point the real part predicted from ``Im alpha`` by the
    principal-value dispersion integral is compared with the actual real
    part.  The integral is truncated at ``L`` (default ``1e3 * max|grid|``) and
    the remainder is added from a fitted ``a + b/s^2`` model of
    ``s Im alpha(s)``.

    Returns
    -------
    float
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty grid")
    rep = None
    try:
        rep = pole_diagnostics(susceptibility)
    except UnsupportedError:
        pass
    if rep is not None and any(p.half_plane == "real" and p.value != 0 for p in rep.poles):
        raise PoleError("susceptibility has real-axis poles; the dispersion integral diverges")
    if rep is not None and susceptibility.K == 0:
        raise PoleError("free particle: alpha has a pole at omega = 0")
    wmax = float(np.max(np.abs(grid))) or 1.0
    if L is None:
        L = 1e3 * max(wmax, max((abs(p.value) for p in rep.poles), default=0.0) if rep else wmax)
    feats = _im_features(susceptibility)
    alpha = np.asarray(susceptibility(grid), dtype=complex)
    if not np.all(np.isfinite(alpha)):
        raise NumericError("susceptibility not finite on grid")
    amax = float(np.max(np.abs(alpha)))
    worst = 0.0
    for w, a in zip(grid, alpha):
        re_pred = _kk_real_part(susceptibility, abs(float(w)), L, feats, atol=1e-10 * amax)
        if not math.isfinite(re_pred):
            raise NumericError("dispersion integral diverged", residual=math.inf)
        worst = max(worst, abs(a.real - re_pred))
    return worst / amax
