"""Deterministic trajectories for the Abraham-Lorentz, finite-cutoff and
FO equations, plus radiated-energy functionals.

"FO" denotes the second-order, runaway-free equation
``M xddot + tau_e K xdot + K x = f + tau_e fdot`` that the finite-cutoff
equation reduces to at ``Omega = 1/tau_e``.

Third-order equations are reduced to first-order systems in ``(x, v, a)`` and
handed to :func:`scipy.integrate.solve_ivp`.  Unstable (runaway) modes are not
suppressed: a terminal event stops the run once ``|a|`` exceeds a fixed
multiple of its initial scale and the trajectory is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import bare_mass
from .errors import DomainError, IntegratorError
from .forces import ForceProfile
from .quadrature import adaptive_panels

__all__ = [
    "Trajectory",
    "RadiatedEnergy",
    "integrate_abraham_lorentz",
    "integrate_fo_free",
    "integrate_fo_oscillator",
    "integrate_finite_cutoff",
    "al_regular_acceleration",
    "integrate_abraham_lorentz_regular",
    "radiated_energy",
    "larmor_energy",
    "field_to_force",
    "fit_growth_rate",
    "RUNAWAY_FACTOR",
]

RUNAWAY_FACTOR = 1e6


@dataclass
class Trajectory:
    """Sampled 1-D motion.  ``a`` and ``f`` may be ``None``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray | None = None
    f: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def runaway(self):
        return bool(self.meta.get("runaway", False))

    def columns(self):
        cols = {"t": self.t, "x": self.x, "v": self.v}
        if self.a is not None:
            cols["a"] = self.a
        if self.f is not None:
            cols["f"] = self.f
        cols.update(self.extra)
        return cols

    def validate(self):
        if np.any(np.diff(self.t) <= 0):
            raise IntegratorError("trajectory time grid is not strictly increasing")
        for name, col in self.columns().items():
            if not np.all(np.isfinite(col)):
                raise IntegratorError(f"non-finite values in trajectory column {name!r}")
        return self


def _grid(tspan, n_out, t_eval):
    t0, t1 = map(float, tspan)
    if not t1 > t0:
        raise DomainError("tspan must be increasing")
    if t_eval is not None:
        g = np.asarray(t_eval, dtype=float)
        if g[0] < t0 or g[-1] > t1 or np.any(np.diff(g) <= 0):
            raise DomainError("t_eval must be increasing and inside tspan")
        return t0, t1, g
    return t0, t1, np.linspace(t0, t1, int(n_out))


def _max_step(f: ForceProfile, tspan):
    """Step cap so the integrator cannot leap over a short pulse."""
    p = f.params
    widths = [p[k] for k in ("sigma", "ramp") if k in p]
    if "omega" in p and p["omega"] > 0:
        widths.append(2 * math.pi / p["omega"] / 8)
    return min(widths) / 2 if widths else np.inf


def _force_scale(f, t):
    vals = np.abs(np.asarray(f.f(t)))
    return float(np.max(vals)) if vals.size else 0.0


def _solve(rhs, t0, t1, y0, grid, method, rtol, atol, events=None, max_step=np.inf):
    sol = solve_ivp(rhs, (t0, t1), y0, method=method, t_eval=grid, rtol=rtol, atol=atol,
                    events=events, max_step=max_step, dense_output=False)
    if sol.status == -1:
        last = sol.y[:, -1] if sol.y.size else np.asarray(y0)
        tl = sol.t[-1] if sol.t.size else t0
        raise IntegratorError(f"integration failed: {sol.message}", t=float(tl),
                              state=np.asarray(last).tolist())
    return sol


def _runaway_event(scale, factor):
    thr = factor * scale

    def ev(t, y):
        return abs(y[2]) - thr

    ev.terminal = True
    ev.direction = 1
    return ev, thr


def fit_growth_rate(t, a, window=None):
    """Least-squares slope of ``log|a|`` against ``t`` over ``window`` (default: last half)."""
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(a, dtype=float))
    if window is None:
        m = t >= t[0] + 0.5 * (t[-1] - t[0])
    else:
        m = (t >= window[0]) & (t <= window[1])
    m &= a > 0
    if np.count_nonzero(m) < 3:
        raise DomainError("not enough samples to fit a growth rate")
    slope, _ = np.polyfit(t[m], np.log(a[m]), 1)
    return float(slope)


def integrate_abraham_lorentz(f: ForceProfile, x0, v0, a0, tspan, *, M=1.0, tau_e=1.0,
                              rtol=1e-9, atol=1e-12, n_out=2001, t_eval=None,
                              runaway_factor=RUNAWAY_FACTOR, method="DOP853"):
    """Integrate ``M xddot - M tau_e xdddot = f(t)``.

    The run stops when ``|a|`` exceeds ``runaway_factor`` times the initial
    scale ``max(|a0|, max|f|/M)``; ``meta['runaway']`` is then set and
    ``meta['growth_rate']`` holds the fitted exponent of ``|a|`` over the
    force-free part of the run.
    """
    if not tau_e > 0:
        raise DomainError("the Abraham-Lorentz equation needs tau_e > 0")
    t0, t1, grid = _grid(tspan, n_out, t_eval)
    probe = np.linspace(t0, t1, 4001)
    scale = max(abs(a0), _force_scale(f, probe) / M, 1e-300)
    ev, thr = _runaway_event(scale, runaway_factor)

    def rhs(t, y):
        return [y[1], y[2], (y[2] - f._f(np.asarray(t)) / M) / tau_e]

    sol = _solve(rhs, t0, t1, [x0, v0, a0], grid, method, rtol, atol, [ev],
                 max_step=_max_step(f, tspan))
    t, (x, v, a) = sol.t, sol.y
    runaway = bool(sol.t_events[0].size)
    fv = np.asarray(f.f(t), dtype=float) * np.ones_like(t)
    meta = {"equation": "abraham_lorentz", "method": method, "rtol": rtol, "atol": atol,
            "runaway": runaway, "runaway_threshold": thr, "runaway_factor": runaway_factor,
            "tau_e": tau_e, "M": M}
    if runaway:
        meta["runaway_time"] = float(sol.t_events[0][0])
    # growth exponent after the force has died away
    t_free = f.support[1] if math.isfinite(f.support[1]) else t0
    mask = t > max(t_free, t0)
    if runaway or np.max(np.abs(a)) > 10 * scale:
        if np.count_nonzero(mask) >= 8:
            tm = t[mask]
            window = (tm[0] + 0.2 * (tm[-1] - tm[0]), tm[-1])
            meta["growth_window"] = "force-free"
        else:
            window = (t[0] + 0.7 * (t[-1] - t[0]), t[-1])
            meta["growth_window"] = "final 30% (force still on)"
        meta["growth_rate"] = fit_growth_rate(t, a, window)
    power = fv * v - M * a * v
    traj = Trajectory(t, x, v, a, fv, meta, {"radiated_power": power})
    return traj.validate()


def integrate_fo_oscillator(f: ForceProfile, K, x0, v0, tspan, *, M=1.0, tau_e=1.0,
                            rtol=1e-9, atol=1e-12, n_out=2001, t_eval=None, method="DOP853"):
    """Integrate ``M xddot + tau_e K xdot + K x = f + tau_e fdot``.

    ``meta['decay_rate']`` is the analytic envelope rate ``K tau_e / 2M``.
    """
    if K < 0 or M <= 0 or tau_e < 0:
        raise DomainError("need K >= 0, M > 0, tau_e >= 0")
    t0, t1, grid = _grid(tspan, n_out, t_eval)

    def rhs(t, y):
        tt = np.asarray(t)
        drive = f._f(tt) + tau_e * f._fdot(tt)
        return [y[1], (drive - tau_e * K * y[1] - K * y[0]) / M]

    sol = _solve(rhs, t0, t1, [x0, v0], grid, method, rtol, atol, max_step=_max_step(f, tspan))
    t, (x, v) = sol.t, sol.y
    fv = np.asarray(f.f(t), dtype=float) * np.ones_like(t)
    fd = np.asarray(f.fdot(t), dtype=float) * np.ones_like(t)
    a = (fv + tau_e * fd - tau_e * K * v - K * x) / M
    meta = {"equation": "ford_oconnell", "method": method, "rtol": rtol, "atol": atol,
            "runaway": False, "K": K, "M": M, "tau_e": tau_e, "decay_rate": K * tau_e / (2 * M)}
    power = fv * v - (M * a + K * x) * v
    return Trajectory(t, x, v, a, fv, meta, {"radiated_power": power}).validate()


def integrate_fo_free(f: ForceProfile, x0, v0, tspan, **kw):
    """Free-particle FO motion ``M xddot = f + tau_e fdot`` (the ``K = 0`` oscillator)."""
    traj = integrate_fo_oscillator(f, 0.0, x0, v0, tspan, **kw)
    traj.meta["equation"] = "ford_oconnell_free"
    return traj


def integrate_finite_cutoff(f: ForceProfile, Omega, K, x0, v0, a0, tspan, *, M=1.0, tau_e=1.0,
                            allow_negative_bare_mass=False, rtol=1e-9, atol=1e-12, n_out=2001,
                            t_eval=None, runaway_factor=RUNAWAY_FACTOR):
    """Integrate ``M(1/Omega - tau_e) xdddot + M xddot + (K/Omega) xdot + K x = f + fdot/Omega``.

    At ``Omega = 1/tau_e`` the third-order term vanishes and the FO
    oscillator is integrated instead (``a0`` is then ignored).  With
    ``1/Omega > tau_e`` the extra mode decays fast and an implicit method is
    used; a negative bare mass (override only) makes it a runaway.
    """
    if not Omega > 0:
        raise DomainError("Omega must be positive")
    bare_mass(M, Omega, tau_e, allow_negative=allow_negative_bare_mass)
    c3 = M * (1.0 / Omega - tau_e)
    t0, t1, grid = _grid(tspan, n_out, t_eval)
    inv = 1.0 / Omega
    if abs(c3) <= 1e-14 * M * inv:
        traj = integrate_fo_oscillator(f, K, x0, v0, tspan, M=M, tau_e=inv, rtol=rtol, atol=atol,
                                       n_out=n_out, t_eval=t_eval)
        traj.meta.update(equation="finite_cutoff", Omega=Omega, third_order_coefficient=0.0,
                         reduced_to="ford_oconnell")
        return traj

    def rhs(t, y):
        tt = np.asarray(t)
        drive = f._f(tt) + inv * f._fdot(tt)
        return [y[1], y[2], (drive - M * y[2] - K * inv * y[1] - K * y[0]) / c3]

    def jac(t, y):
        return [[0, 1, 0], [0, 0, 1], [-K / c3, -K * inv / c3, -M / c3]]

    probe = np.linspace(t0, t1, 4001)
    scale = max(abs(a0), _force_scale(f, probe) / M, abs(K * x0) / M, 1e-300)
    events = None
    thr = None
    if c3 > 0:
        method = "Radau"
        extra = {"jac": jac}
    else:
        method = "DOP853"
        extra = {}
        ev, thr = _runaway_event(scale, runaway_factor)
        events = [ev]
    sol = solve_ivp(rhs, (t0, t1), [x0, v0, a0], method=method, t_eval=grid, rtol=rtol,
                    atol=atol, events=events, max_step=_max_step(f, tspan), **extra)
    if sol.status == -1:
        raise IntegratorError(f"integration failed: {sol.message}", t=float(sol.t[-1]) if sol.t.size else t0,
                              state=sol.y[:, -1].tolist() if sol.y.size else [x0, v0, a0])
    t, (x, v, a) = sol.t, sol.y
    runaway = bool(events and sol.t_events[0].size)
    fv = np.asarray(f.f(t), dtype=float) * np.ones_like(t)
    meta = {"equation": "finite_cutoff", "method": method, "rtol": rtol, "atol": atol,
            "Omega": Omega, "K": K, "M": M, "tau_e": tau_e, "third_order_coefficient": c3,
            "runaway": runaway, "runaway_threshold": thr}
    if runaway:
        meta["runaway_time"] = float(sol.t_events[0][0])
        meta["growth_rate"] = fit_growth_rate(t, a)
    power = fv * v - (M * a + K * x) * v
    return Trajectory(t, x, v, a, fv, meta, {"radiated_power": power}).validate()


def integrate_abraham_lorentz_regular(f: ForceProfile, x0, v0, tspan, *, M=1.0, tau_e=1.0,
                                      rtol=1e-11, atol=1e-15, n_out=2001, t_eval=None):
    """The runaway-free Abraham-Lorentz solution, obtained by integrating backward in time.

    Backward in time the ``exp(t/tau_e)`` mode decays, so starting from the
    regular final acceleration and stepping toward ``tspan[0]`` is stable.  The
    free-particle equation does not involve ``x`` or ``v``, so the result is
    then shifted to satisfy ``x(t0) = x0``, ``v(t0) = v0``.  The solution shows
    pre-acceleration: it responds before the force arrives.
    """
    if not tau_e > 0:
        raise DomainError("the Abraham-Lorentz equation needs tau_e > 0")
    t0, t1, grid = _grid(tspan, n_out, t_eval)
    a1 = al_regular_acceleration(f, t1, M, tau_e)

    def rhs(t, y):
        return [y[1], y[2], (y[2] - f._f(np.asarray(t)) / M) / tau_e]

    sol = _solve(rhs, t1, t0, [0.0, 0.0, a1], grid[::-1], "DOP853", rtol, atol,
                 max_step=_max_step(f, tspan))
    t = sol.t[::-1]
    xr, vr, a = (row[::-1] for row in sol.y)
    # x' = v, so shifting v by a constant adds a linear term to x
    v = vr + (v0 - vr[0])
    x = x0 + (xr - xr[0]) + (v0 - vr[0]) * (t - t0)
    fv = np.asarray(f.f(t), dtype=float) * np.ones_like(t)
    meta = {"equation": "abraham_lorentz_regular", "method": "DOP853 (backward)", "rtol": rtol,
            "atol": atol, "runaway": False, "tau_e": tau_e, "M": M}
    power = fv * v - M * a * v
    return Trajectory(t, x, v, a, fv, meta, {"radiated_power": power}).validate()


def al_regular_acceleration(f: ForceProfile, t0, M=1.0, tau_e=1.0):
    """Initial acceleration that puts the Abraham-Lorentz solution on its non-runaway branch.

    ``a(t0) = (1/(M tau_e)) int_{t0}^inf f(s) exp(-(s - t0)/tau_e) ds``.
    """
    hi = t0 + 60 * tau_e
    if math.isfinite(f.support[1]):
        hi = min(hi, max(f.support[1], t0))
    if hi <= t0:
        return 0.0
    bps = [b for b in f.breakpoints if t0 < b < hi]
    edges = np.unique(np.concatenate([np.linspace(t0, hi, 65), bps]))
    r = adaptive_panels(lambda s: f._f(s) * np.exp(-(s - t0) / tau_e), edges, rtol=1e-13)
    return r.value / (M * tau_e)


def field_to_force(E_amplitude, omega, tau_e, e=1.0):
    """Force amplitude ``e E / sqrt(1 + omega^2 tau_e^2)`` produced by a field of frequency ``omega``."""
    if np.any(np.asarray(omega) < 0):
        raise DomainError("omega must be non-negative")
    out = e * np.asarray(E_amplitude, dtype=float) / np.sqrt(1.0 + (np.asarray(omega) * tau_e) ** 2)
    return _scalar(out)


def _scalar(x):
    return x if np.ndim(x) else float(x)


@dataclass
class RadiatedEnergy:
    """Total radiated energy and its time profiles on ``t``.

    ``larmor_integrand`` is ``M tau_e (f/M)^2``, the integrand of the
    generalized Larmor total.  ``power`` is the energy-balance power
    ``f v - d/dt (M v^2 / 2) = -tau_e fdot v`` along the FO
    free trajectory; it integrates to the same total and is zero wherever the
    force is constant.
    """

    total: float
    abserr: float
    t: np.ndarray
    larmor_integrand: np.ndarray
    power: np.ndarray
    velocity: np.ndarray
    meta: dict = field(default_factory=dict)


def _support_edges(f, n=256):
    lo, hi = f.support
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("radiated energy needs a force of compact support")
    pts = [lo, hi] + [b for b in f.breakpoints if lo <= b <= hi]
    return np.unique(np.concatenate([np.linspace(lo, hi, n + 1), pts]))


def radiated_energy(f: ForceProfile, M=1.0, tau_e=1.0, n_profile=4001, v0=0.0, rtol=1e-12):
    """Generalized Larmor total ``M tau_e int (f/M)^2 dt`` plus power profiles.

    Raises
    ------
    DomainError
        if ``f`` is not of compact support.
    """
    if f.kind == "zero":
        t = np.zeros(1)
        z = np.zeros(1)
        return RadiatedEnergy(0.0, 0.0, t, z, z, z + v0, {"M": M, "tau_e": tau_e})
    edges = _support_edges(f)
    r = adaptive_panels(lambda t: f._f(t) ** 2, edges, rtol=rtol)
    total = tau_e / M * r.value
    t = np.unique(np.concatenate([np.linspace(edges[0], edges[-1], n_profile), edges]))
    fv = np.asarray(f.f(t), dtype=float)
    fd = np.asarray(f.fdot(t), dtype=float)
    # v(t) = v0 + (int_{t_on}^t f + tau_e f(t)) / M, accumulated panel by panel
    impulse = np.zeros_like(t)
    seg = adaptive_panels(f._f, t, rtol=rtol, return_panels=True)[0]
    impulse[1:] = np.cumsum(seg)
    v = v0 + (impulse + tau_e * fv) / M
    power = -tau_e * fd * v
    return RadiatedEnergy(total, tau_e / M * r.abserr, t, M * tau_e * (fv / M) ** 2, power, v,
                          {"M": M, "tau_e": tau_e})


def larmor_energy(traj: Trajectory, M=1.0, tau_e=1.0):
    """``M tau_e int a^2 dt`` along a sampled trajectory (composite Simpson)."""
    from scipy.integrate import simpson

    if traj.a is None:
        raise DomainError("trajectory has no acceleration samples")
    return float(M * tau_e * simpson(traj.a ** 2, x=traj.t))
