"""Heat-bath spectral distributions, memory kernels and the Stieltjes inversion.

A bath is fully characterised by its spectral distribution
``R(w) = Re mu(w + i0)`` for ``w >= 0``.  Three kinds are provided: Ohmic
(constant friction), blackbody radiation with a Lorentzian form factor, and
tabulated data read from a two-column CSV file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError
from .quadrature import QuadResult, adaptive_panels, feature_edges, fourier_integral

__all__ = [
    "SpectralDistribution",
    "OhmicSpectrum",
    "BlackbodySpectrum",
    "TabulatedSpectrum",
    "MemoryKernel",
    "AdmissibilityReport",
    "form_factor_sq",
    "spectral_blackbody",
    "stieltjes_mu",
    "mu_boundary",
    "memory_kernel_time",
    "check_admissibility",
    "parse_bath",
]


def form_factor_sq(omega, Omega):
    """Squared electron form factor ``Omega^2 / (omega^2 + Omega^2)``."""
    if not Omega > 0:
        raise DomainError("cutoff Omega must be positive")
    omega = np.asarray(omega, dtype=float)
    out = Omega * Omega / (omega * omega + Omega * Omega)
    return out if out.ndim else float(out)


def spectral_blackbody(omega, coupling, Omega):
    """Blackbody spectral distribution ``coupling * omega^2 * f_k^2(omega)``.

    ``coupling`` is ``2 e^2 / 3 c^3`` (equivalently ``M tau_e``).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError("spectral distribution is queried on omega >= 0 only")
    out = coupling * omega * omega * form_factor_sq(omega, Omega)
    return out if np.ndim(out) else float(out)


class SpectralDistribution:
    """Base class; subclasses implement :meth:`evaluate` on ``omega >= 0``.

    Attributes
    ----------
    kind : str
    scale : float
        Characteristic frequency, used to place quadrature breakpoints.
    """

    kind = "abstract"
    scale = 1.0

    def evaluate(self, omega):
        raise NotImplementedError

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        out = self.evaluate(w)
        return out if np.ndim(out) else float(out)

    @property
    def high_frequency_limit(self):
        """``R(inf)``; the weight of the delta part of the memory kernel."""
        raise NotImplementedError

    def closed_form_mu(self, z):
        """Analytic continuation ``mu(z)`` if known in closed form, else ``None``."""
        return None

    @property
    def features(self):
        return ()

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class OhmicSpectrum(SpectralDistribution):
    """Frequency-independent friction ``zeta``."""

    zeta: float
    scale: float = 1.0
    kind = "ohmic"

    def __post_init__(self):
        if self.zeta < 0:
            raise DomainError("Ohmic friction must be non-negative")

    def evaluate(self, omega):
        return np.full_like(omega, self.zeta, dtype=float)

    @property
    def high_frequency_limit(self):
        return self.zeta

    def closed_form_mu(self, z):
        return complex(self.zeta) + 0j * z

    def describe(self):
        return {"kind": self.kind, "zeta": self.zeta}


@dataclass(frozen=True)
class BlackbodySpectrum(SpectralDistribution):
    """Radiation-field bath, ``R(w) = coupling w^2 Omega^2 / (w^2 + Omega^2)``."""

    coupling: float
    Omega: float
    kind = "blackbody"

    def __post_init__(self):
        if self.coupling < 0:
            raise DomainError("coupling must be non-negative")
        if not self.Omega > 0:
            raise DomainError("cutoff Omega must be positive")

    @classmethod
    def from_charge(cls, e, c, Omega):
        return cls(2.0 * e * e / (3.0 * c ** 3), Omega)

    @classmethod
    def from_tau_e(cls, M, tau_e, Omega=None):
        """Coupling ``M tau_e``; the cutoff defaults to ``1/tau_e``."""
        return cls(M * tau_e, 1.0 / tau_e if Omega is None else Omega)

    @property
    def scale(self):
        return self.Omega

    def evaluate(self, omega):
        return self.coupling * omega * omega * self.Omega ** 2 / (omega * omega + self.Omega ** 2)

    @property
    def high_frequency_limit(self):
        return self.coupling * self.Omega ** 2

    def closed_form_mu(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.coupling * z * self.Omega ** 2 / (z + 1j * self.Omega)
        return out if out.ndim else complex(out)

    def describe(self):
        return {"kind": self.kind, "coupling": self.coupling, "Omega": self.Omega}


class TabulatedSpectrum(SpectralDistribution):
    """Spectrum sampled on a grid.

    Interpolation is linear in ``(log w, log R)`` between positive samples
    (linear in ``(w, R)`` where a sample is zero or negative); beyond the grid
    the first/last power-law slope is continued.
    """

    kind = "tabulated"

    def __init__(self, omega, values, source=None):
        w = np.asarray(omega, dtype=float)
        v = np.asarray(values, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size < 2:
            raise DomainError("tabulated spectrum needs two equal-length 1-D columns (>= 2 rows)")
        if np.any(w < 0) or np.any(np.diff(w) <= 0):
            raise DomainError("tabulated frequencies must be non-negative and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise DomainError("tabulated values must be finite")
        self.omega = w
        self.values = v
        self.source = source
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (w[:-1] > 0) & (v[:-1] > 0) & (v[1:] > 0)
            slopes = np.where(ok, np.log(v[1:] / v[:-1]) / np.log(w[1:] / w[:-1]), np.nan)
        self._slopes = slopes
        self.tail_slope = float(slopes[-1]) if np.isfinite(slopes[-1]) else None
        self.head_slope = float(slopes[0]) if np.isfinite(slopes[0]) else None
        self.scale = float(w[-1]) if w[-1] > 0 else 1.0

    def evaluate(self, omega):
        w, v, s = self.omega, self.values, self._slopes
        x0 = np.asarray(omega, dtype=float)
        x = np.atleast_1d(x0)
        out = np.empty_like(x)
        i = np.clip(np.searchsorted(w, x, side="right") - 1, 0, w.size - 2)
        si = s[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            loglin = v[i] * np.power(x / w[i], si)
            lin = v[i] + (v[i + 1] - v[i]) * (x - w[i]) / (w[i + 1] - w[i])
        out[:] = np.where(np.isfinite(si), loglin, lin)
        j = np.clip(np.searchsorted(w, x), 0, w.size - 1)
        node = w[j] == x  # grid points return the tabulated value exactly
        out[node] = v[j[node]]
        above = x > w[-1]
        if np.any(above):
            if self.tail_slope is not None and abs(self.tail_slope) >= 1e-2:
                out[above] = v[-1] * np.power(x[above] / w[-1], self.tail_slope)
            else:
                out[above] = v[-1]
        below = x < w[0]
        if np.any(below):
            if self.head_slope is not None:
                out[below] = v[0] * np.power(x[below] / w[0], self.head_slope)
            else:
                out[below] = v[0]
        return out.reshape(x0.shape)

    @property
    def high_frequency_limit(self):
        p = self.tail_slope
        if p is None:
            return float(self.values[-1]) if self.values[-1] > 0 else 0.0
        if abs(p) < 1e-2:
            # flat within sampling resolution
            return float(self.values[-1])
        if p < 0:
            return 0.0
        return math.inf

    @classmethod
    def from_csv(cls, path):
        from .io import read_series

        header, cols = read_series(path)
        if len(cols) < 2:
            raise DomainError(f"{path}: expected two columns (omega, value)")
        return cls(cols[0], cols[1], source=str(path))

    def describe(self):
        return {"kind": self.kind, "source": self.source, "n": int(self.omega.size)}


# --------------------------------------------------------------------------
# Stieltjes inversion


def _stieltjes(z, spectral, rtol=1e-13):
    """``(2iz/pi) int_0^inf R(w) / (z^2 - w^2) dw`` for ``Im z >= 0``.

    ``R(|Re z|)`` is subtracted from the numerator so the near-singularity at
    ``w = |Re z|`` cancels; the subtracted piece integrates to ``-i pi/(2z)``.
    """
    z = complex(z)
    x0 = abs(z.real)
    r0 = float(spectral(x0))
    z2 = z * z

    d = 1e-6 * max(x0, 1e-300)
    slope0 = 0.0
    if z.imag == 0.0 and x0 > 0:
        slope0 = float(spectral(x0 + d) - spectral(x0 - d)) / (2 * d)

    def h(w):
        num = spectral.evaluate(w) - r0
        den = z2 - w * w
        with np.errstate(invalid="ignore", divide="ignore"):
            out = num / den
        if z.imag == 0.0:
            # removable singularity at w = x0 on the real axis
            out = np.where(den == 0, -slope0 / (2 * x0), out)
        return out

    sc = spectral.scale
    head = 4.0 * max(sc, x0, abs(z.imag), 1e-300)
    # on the real axis h is smooth through x0, so no deep refinement there
    width = abs(z.imag) if z.imag else 1e-3 * max(x0, sc)
    feats = [(x0, width)] + list(spectral.features)
    edges = feature_edges(0.0, head, feats, n_base=16)
    if isinstance(spectral, TabulatedSpectrum):
        grid = spectral.omega[(spectral.omega > 0) & (spectral.omega < head)]
        edges = np.unique(np.concatenate([edges, grid]))
    # rounding in R(w) - r0 is amplified by 1/|z^2 - w^2| near w = x0
    noise = 1e2 * np.finfo(float).eps * abs(r0) * math.pi / (
        2.0 * abs(z) * max(abs(z.imag), 1e-8 * max(x0, sc)))
    val, err = adaptive_panels(h, edges, rtol=rtol, atol=noise)
    lo = head
    for _ in range(400):
        hi = 2.0 * lo
        v, e = adaptive_panels(h, np.linspace(lo, hi, 3), rtol=rtol, scale=abs(val))
        val += v
        err += e
        if abs(v) <= 1e-3 * rtol * max(abs(val), 1e-300):
            break
        lo = hi
    else:
        raise NumericError("Stieltjes integral did not converge", residual=abs(v))
    mu = r0 + (2j * z / math.pi) * val
    return mu, abs(2 * z / math.pi) * err


def stieltjes_mu(z, spectral, rtol=1e-13):
    """Continuation ``mu(z)`` into the upper half plane from the spectrum alone.

    Parameters
    ----------
    z : complex
        Point with ``Im z > 0``.
    spectral : SpectralDistribution

    Notes
    -----
    Computed by quadrature even when a closed form exists, so the two can be
    compared.
    """
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"Stieltjes continuation needs Im z > 0, got {z!r}")
    return _stieltjes(z, spectral, rtol)[0]


def mu_boundary(omega, spectral, quadrature=False):
    """Boundary value ``mu(omega + i0)`` on the real axis.

    Uses the closed form when available (unless ``quadrature`` is set),
    otherwise the Stieltjes integral with its imaginary part taken as a
    principal value.
    """
    cf = None if quadrature else spectral.closed_form_mu(complex(omega))
    if cf is not None:
        return complex(cf)
    w = float(np.real(omega))
    if w == 0.0:
        return complex(spectral(0.0))
    mu = _stieltjes(complex(abs(w), 0.0), spectral)[0]
    return mu if w > 0 else mu.conjugate()


# --------------------------------------------------------------------------
# Memory kernel


@dataclass
class MemoryKernel:
    """Time-domain memory function, split as ``2 c delta(t) theta(t) + smooth(t)``.

    ``delta_coefficient`` is ``c = R(inf)``; with the convention that
    ``delta(t) theta(t)`` is half a delta function, the delta part acts on a
    velocity history with weight exactly ``c``.
    """

    delta_coefficient: float
    smooth_part: Callable[[float], float]
    spectral: SpectralDistribution | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.smooth_part(t)


def memory_kernel_time(spectral, rtol=1e-11):
    """Cosine-transform the spectrum into a :class:`MemoryKernel`.

    The flat limit ``R(inf)`` is split off analytically (its transform is a
    pure delta) before the remainder ``R - R(inf)`` is transformed
    numerically.
    """
    r_inf = spectral.high_frequency_limit
    if not math.isfinite(r_inf):
        raise NumericError(
            "spectrum grows at high frequency; the memory kernel has no convergent tail"
        )
    if isinstance(spectral, OhmicSpectrum):
        return MemoryKernel(r_inf, lambda t: 0.0, spectral, {"method": "exact"})

    def rem(w):
        return spectral.evaluate(w) - r_inf

    head = 8.0 * spectral.scale

    def smooth(t):
        t = float(t)
        if t < 0:
            return 0.0
        val = fourier_integral(rem, t, "cos", head=head, features=spectral.features, rtol=rtol)
        return 2.0 / math.pi * val.value

    return MemoryKernel(r_inf, smooth, spectral, {"method": "fourier_integral"})


# --------------------------------------------------------------------------
# Admissibility


@dataclass
class AdmissibilityReport:
    passed: bool
    min_value: float
    negative_points: list
    gaps: list
    integrability: QuadResult | None
    messages: list

    def as_dict(self):
        return {
            "passed": self.passed,
            "min_value": self.min_value,
            "negative_points": self.negative_points,
            "gaps": self.gaps,
            "integrability": None if self.integrability is None else self.integrability.value,
            "messages": self.messages,
        }


def check_admissibility(spectral, grid):
    """Positivity, gap and integrability checks on a frequency grid.

    Reports the minimum of ``R`` on the grid, every grid frequency where it is
    negative, runs of consecutive zeros (gaps), and an estimate of
    ``int_0^inf R(w)/(1+w^2) dw``.  Never raises for an inadmissible spectrum.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(spectral(grid), dtype=float) * np.ones_like(grid)
    msgs = []
    negative = [float(w) for w, v in zip(grid, vals) if v < 0]
    if negative:
        msgs.append(f"negative spectral density at {len(negative)} grid point(s)")
    gaps = []
    zero = vals == 0
    i = 0
    while i < zero.size:
        if zero[i]:
            j = i
            while j + 1 < zero.size and zero[j + 1]:
                j += 1
            if j > i:
                gaps.append((float(grid[i]), float(grid[j])))
            i = j + 1
        else:
            i += 1
    if gaps:
        msgs.append(f"spectrum vanishes on {len(gaps)} interval(s)")
    integ = None
    try:
        f = lambda w: spectral.evaluate(w) / (1.0 + w * w)  # noqa: E731
        integ = fourier_integral(f, 0.0, head=max(8.0, 8.0 * spectral.scale), rtol=1e-9)
        if not math.isfinite(integ.value):
            msgs.append("integrability condition fails")
    except NumericError as exc:
        msgs.append(f"integrability condition fails: {exc}")
    passed = not negative and not gaps and integ is not None and math.isfinite(integ.value)
    return AdmissibilityReport(
        passed, float(np.min(vals)) if vals.size else math.nan, negative, gaps, integ, msgs
    )


def parse_bath(text, M=1.0, tau_e=1.0, dims=None):
    """Spectrum from ``kind:key=value,...``.

    ``ohmic:zeta=Z``; ``blackbody[:Omega=W][,coupling=A]`` (defaults ``1/tau_e``
    and ``M tau_e``); ``tabulated:path=FILE``.  ``dims`` optionally maps a key to
    a callable converting its value to internal units.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    kw = {}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"bath parameter {item!r} is not key=value")
        kw[key.strip()] = val.strip()
    if kind == "tabulated":
        if set(kw) != {"path"}:
            raise DomainError("tabulated bath takes exactly path=FILE")
        return TabulatedSpectrum.from_csv(kw["path"])
    try:
        num = {k: float(v) for k, v in kw.items()}
    except ValueError as exc:
        raise DomainError(f"bad numeric bath parameter: {exc}") from exc
    if dims:
        num = {k: dims[k](v) if k in dims else v for k, v in num.items()}
    if kind == "ohmic":
        if set(num) != {"zeta"}:
            raise DomainError("ohmic bath takes exactly zeta=VALUE")
        return OhmicSpectrum(num["zeta"])
    if kind == "blackbody":
        extra = set(num) - {"Omega", "coupling"}
        if extra:
            raise DomainError(f"unknown blackbody parameters {sorted(extra)}")
        Omega = num.get("Omega", 1.0 / tau_e if tau_e > 0 else None)
        if Omega is None:
            raise DomainError("blackbody bath needs Omega when tau_e = 0")
        return BlackbodySpectrum(num.get("coupling", M * tau_e), Omega)
    raise DomainError(f"unknown bath kind {kind!r}; choose ohmic, blackbody or tabulated")
