"""Applied-force profiles with analytic time derivatives.

Every profile is C^1, so ``f + tau_e fdot`` is well defined.  Steps are
replaced by smooth ramps built from the cubic ``3u^2 - 2u^3``, whose
derivative vanishes at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

__all__ = [
    "ForceProfile",
    "smoothstep",
    "zero",
    "smooth_step",
    "gaussian_pulse",
    "sinusoid",
    "capacitor_gate",
    "sampled",
    "parse_pulse",
    "PULSE_KINDS",
]


def smoothstep(u):
    """``(s(u), s'(u))`` for the C^1 ramp ``s = 3u^2 - 2u^3`` clipped to [0, 1]."""
    u = np.asarray(u, dtype=float)
    c = np.clip(u, 0.0, 1.0)
    s = c * c * (3.0 - 2.0 * c)
    ds = np.where((u > 0) & (u < 1), 6.0 * c * (1.0 - c), 0.0)
    return s, ds


def _out(x):
    return x if np.ndim(x) else float(x)


@dataclass(frozen=True)
class ForceProfile:
    """Scalar force ``f(t)`` with derivative ``fdot(t)``; both vectorised.

    ``support`` is ``(t_on, t_off)``; outside it the force is zero (``t_off``
    may be ``inf`` for profiles that stay on).  ``breakpoints`` lists the times
    where higher derivatives jump, for quadrature and step control.
    """

    kind: str
    _f: Callable
    _fdot: Callable
    support: tuple = (-math.inf, math.inf)
    params: dict = field(default_factory=dict)
    breakpoints: tuple = ()

    def f(self, t):
        return _out(self._f(np.asarray(t, dtype=float)))

    def fdot(self, t):
        return _out(self._fdot(np.asarray(t, dtype=float)))

    __call__ = f

    def scaled(self, factor):
        """Same shape with amplitude multiplied by ``factor``."""
        return ForceProfile(self.kind, lambda t: factor * self._f(t), lambda t: factor * self._fdot(t),
                            self.support, dict(self.params, scale=factor * self.params.get("scale", 1.0)),
                            self.breakpoints)

    @property
    def compact(self):
        return all(math.isfinite(s) for s in self.support)

    def describe(self):
        return {"kind": self.kind, **{k: v for k, v in self.params.items()
                                      if isinstance(v, (int, float, str))}}


def zero():
    return ForceProfile("zero", lambda t: np.zeros_like(t), lambda t: np.zeros_like(t),
                        (0.0, 0.0), {})


def _check_ramp(ramp):
    if not ramp > 0:
        raise DomainError("ramp duration must be strictly positive")


def smooth_step(f0, t_on=0.0, ramp=10.0):
    """Switch on to ``f0`` over ``[t_on, t_on + ramp]`` and stay there."""
    _check_ramp(ramp)

    def f(t):
        return f0 * smoothstep((t - t_on) / ramp)[0]

    def fd(t):
        return f0 / ramp * smoothstep((t - t_on) / ramp)[1]

    return ForceProfile("smooth_step", f, fd, (t_on, math.inf),
                        {"f0": f0, "t_on": t_on, "ramp": ramp}, (t_on, t_on + ramp))


def capacitor_gate(f0, t_on=0.0, plateau=100.0, ramp=10.0):
    """Ramp up, hold ``f0`` for ``plateau``, ramp down; zero outside."""
    _check_ramp(ramp)
    if plateau < 0:
        raise DomainError("plateau must be non-negative")
    t_down = t_on + ramp + plateau

    def f(t):
        return f0 * (smoothstep((t - t_on) / ramp)[0] - smoothstep((t - t_down) / ramp)[0])

    def fd(t):
        return f0 / ramp * (smoothstep((t - t_on) / ramp)[1] - smoothstep((t - t_down) / ramp)[1])

    return ForceProfile("capacitor_gate", f, fd, (t_on, t_down + ramp),
                        {"f0": f0, "t_on": t_on, "plateau": plateau, "ramp": ramp},
                        (t_on, t_on + ramp, t_down, t_down + ramp))


def gaussian_pulse(t0=0.0, sigma=1.0, f0=1.0, cut=12.0):
    """``f0 exp(-(t - t0)^2 / 2 sigma^2)``; support is taken as ``t0 +- cut*sigma``."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")

    def f(t):
        return f0 * np.exp(-0.5 * ((t - t0) / sigma) ** 2)

    def fd(t):
        return -(t - t0) / sigma ** 2 * f(t)

    return ForceProfile("gaussian_pulse", f, fd, (t0 - cut * sigma, t0 + cut * sigma),
                        {"t0": t0, "sigma": sigma, "f0": f0}, ())


def sinusoid(omega, f0=1.0, phase=0.0, envelope: ForceProfile | None = None):
    """``f0 cos(omega t + phase)``, optionally multiplied by a unit-amplitude envelope."""
    if omega < 0:
        raise DomainError("omega must be non-negative")

    def c(t):
        return f0 * np.cos(omega * t + phase)

    def cd(t):
        return -f0 * omega * np.sin(omega * t + phase)

    params = {"omega": omega, "f0": f0, "phase": phase}
    if envelope is None:
        return ForceProfile("sinusoid", c, cd, (-math.inf, math.inf), params)
    params["envelope"] = envelope.kind
    return ForceProfile(
        "sinusoid",
        lambda t: c(t) * envelope._f(t),
        lambda t: cd(t) * envelope._f(t) + c(t) * envelope._fdot(t),
        envelope.support,
        params,
        envelope.breakpoints,
    )


def sampled(t, values):
    """Force from samples, interpolated by a cubic spline (zero outside the samples)."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != values.shape or t.size < 4:
        raise DomainError("sampled force needs >= 4 (t, f) samples of equal length")
    if np.any(np.diff(t) <= 0):
        raise DomainError("sample times must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise DomainError("sampled force values must be finite")
    spl = CubicSpline(t, values, bc_type="clamped")
    dspl = spl.derivative()
    lo, hi = float(t[0]), float(t[-1])

    def f(x):
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, spl(np.clip(x, lo, hi)), 0.0)

    def fd(x):
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, dspl(np.clip(x, lo, hi)), 0.0)

    return ForceProfile("sampled", f, fd, (lo, hi), {"n": int(t.size)}, tuple(t.tolist()))


PULSE_KINDS = {
    "zero": zero,
    "smooth_step": smooth_step,
    "step": smooth_step,
    "gaussian": gaussian_pulse,
    "gaussian_pulse": gaussian_pulse,
    "capacitor": capacitor_gate,
    "capacitor_gate": capacitor_gate,
    "sinusoid": sinusoid,
}


def parse_pulse(text):
    """Build a profile from ``kind:key=value,key=value``.

    A sinusoid accepts ``envelope=capacitor`` plus ``t_on``, ``plateau`` and
    ``ramp`` for a unit gate.

    >>> parse_pulse("gaussian:t0=5,sigma=1,f0=0.1").params["sigma"]
    1.0
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind not in PULSE_KINDS:
        raise DomainError(f"unknown pulse kind {kind!r}; choose from {sorted(PULSE_KINDS)}")
    kw = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"pulse parameter {item!r} is not key=value")
        kw[key.strip()] = val.strip()
    if kind == "sinusoid":
        env = kw.pop("envelope", None)
        gate = {k: float(kw.pop(k)) for k in ("t_on", "plateau", "ramp") if k in kw}
        try:
            num = {k: float(v) for k, v in kw.items()}
        except ValueError as exc:
            raise DomainError(f"bad numeric pulse parameter: {exc}") from exc
        envelope = capacitor_gate(1.0, **gate) if env else None
        return _call(sinusoid, num, envelope=envelope)
    try:
        num = {k: float(v) for k, v in kw.items()}
    except ValueError as exc:
        raise DomainError(f"bad numeric pulse parameter: {exc}") from exc
    return _call(PULSE_KINDS[kind], num)


def _call(fn, kw, **extra):
    try:
        return fn(**kw, **extra)
    except TypeError as exc:
        raise DomainError(f"bad pulse parameters for {fn.__name__}: {exc}") from exc
