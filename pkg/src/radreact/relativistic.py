"""Relativistic radiation-reaction dynamics in lab time.

The equation integrated is

    M d(gamma v)/dt = F + tau_e [gamma dF/dt - (gamma^3/c^2) a x (v x F)],
    F = e (E + v x B / c),

with ``gamma = 1/sqrt(1 - v^2/c^2)``.  ``dF/dt`` contains ``a x B``, so the
acceleration appears on both sides; at each step it is obtained from a 3x3
linear solve.  The state is ``(x, p = gamma v, g, tau)`` where ``g`` is an
independently integrated copy of ``gamma``; comparing it with ``|p|`` gives
the mass-shell residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegratorError
from .forces import ForceProfile, smoothstep

__all__ = [
    "FourVelocity",
    "UniformEMField",
    "GatedField",
    "RelTrajectory",
    "CapacitorResult",
    "integrate_relativistic",
    "mass_shell_residual",
    "capacitor_scenario",
    "uniform_pulse_velocity_gain",
]


@dataclass(frozen=True)
class FourVelocity:
    """``u = (gamma c, gamma v)`` with signature (+, -, -, -)."""

    u0: float
    u1: float
    u2: float
    u3: float
    c: float = 1.0

    @classmethod
    def from_velocity(cls, v, c=1.0):
        v = np.asarray(v, dtype=float)
        b2 = float(v @ v) / (c * c)
        if b2 >= 1:
            raise DomainError("speed must be below c")
        g = 1.0 / math.sqrt(1.0 - b2)
        return cls(g * c, *(g * v), c=c)

    @property
    def spatial(self):
        return np.array([self.u1, self.u2, self.u3])

    @property
    def gamma(self):
        return self.u0 / self.c

    @property
    def velocity(self):
        return self.spatial / self.gamma

    def norm_residual(self):
        """``|u.u - c^2| / c^2``."""
        s = self.spatial
        return abs(self.u0 ** 2 - float(s @ s) - self.c ** 2) / self.c ** 2


def _vec(x):
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size != 3:
        raise DomainError("field and velocity vectors must have three components")
    return a


def _cross_matrix(b):
    return np.array([[0.0, -b[2], b[1]], [b[2], 0.0, -b[0]], [-b[1], b[0], 0.0]])


class UniformEMField:
    """Spatially uniform ``E(t) = E0 s_E(t)``, ``B(t) = B0 s_B(t)``.

    ``s_E`` and ``s_B`` are optional :class:`ForceProfile` envelopes (unit
    amplitude); without one the component is static.
    """

    uniform = True

    def __init__(self, E=(0, 0, 0), B=(0, 0, 0), envelope_E: ForceProfile | None = None,
                 envelope_B: ForceProfile | None = None):
        self.E0 = _vec(E)
        self.B0 = _vec(B)
        self.envE = envelope_E
        self.envB = envelope_B

    def _env(self, env, t):
        if env is None:
            return 1.0, 0.0
        return float(env._f(np.asarray(t))), float(env._fdot(np.asarray(t)))

    def fields(self, t, x, v):
        """``(E, B, dE/dt, dB/dt)`` along the path (time derivatives are total)."""
        se, dse = self._env(self.envE, t)
        sb, dsb = self._env(self.envB, t)
        return self.E0 * se, self.B0 * sb, self.E0 * dse, self.B0 * dsb

    def max_step(self):
        widths = []
        for env in (self.envE, self.envB):
            if env is not None:
                widths += [env.params[k] for k in ("ramp", "sigma") if k in env.params]
        return min(widths) / 4 if widths else np.inf

    def describe(self):
        d = {"kind": "uniform", "E": self.E0.tolist(), "B": self.B0.tolist()}
        if self.envE is not None:
            d["envelope_E"] = self.envE.describe()
        if self.envB is not None:
            d["envelope_B"] = self.envB.describe()
        return d


class GatedField:
    """Electric field ``E0`` switched on between two planes ``x_axis = x_in .. x_out``.

    The edges are C^1 ramps of width ``ramp_length``.  Inside the gap the field
    is uniform; the particle sees a time-dependent field as it crosses the
    edges, and ``dE/dt = E0 s'(x) v_axis`` follows from the chain rule.  An
    optional uniform, static ``B`` fills all space.
    """

    uniform = False

    def __init__(self, E0, x_in, gap, ramp_length, axis=0, B=(0.0, 0.0, 0.0)):
        self.E0 = _vec(E0)
        self.B = _vec(B)
        if not gap > 0 or not ramp_length > 0:
            raise DomainError("gap and ramp length must be positive")
        self.x_in = float(x_in)
        self.gap = float(gap)
        self.ramp = float(ramp_length)
        self.axis = int(axis)

    @property
    def x_out(self):
        return self.x_in + self.gap

    def gate(self, xa):
        """``(s, ds/dx)``; ``s`` rises over ``[x_in, x_in + ramp]`` and falls over ``[x_out - ramp, x_out]``."""
        r = self.ramp
        up, dup = smoothstep((xa - self.x_in) / r)
        dn, ddn = smoothstep((xa - (self.x_out - r)) / r)
        return up - dn, (dup - ddn) / r

    def fields(self, t, x, v):
        s, ds = self.gate(x[self.axis])
        return self.E0 * s, self.B, self.E0 * (ds * v[self.axis]), np.zeros(3)

    def describe(self):
        return {"kind": "gated", "E0": self.E0.tolist(), "x_in": self.x_in, "gap": self.gap,
                "ramp_length": self.ramp, "axis": self.axis, "B": self.B.tolist()}


@dataclass
class RelTrajectory:
    t: np.ndarray
    tau: np.ndarray
    x: np.ndarray  # (n, 3)
    p: np.ndarray  # (n, 3), gamma v
    g: np.ndarray  # integrated gamma
    power: np.ndarray  # radiated-power proxy
    meta: dict = field(default_factory=dict)

    @property
    def v(self):
        return self.p / self.g[:, None]

    @property
    def gamma(self):
        return self.g

    def residuals(self):
        c = self.meta.get("c", 1.0)
        return np.abs(self.g ** 2 - np.sum(self.p ** 2, axis=1) / c ** 2 - 1.0)

    def columns(self):
        v = self.v
        return {"t": self.t, "tau": self.tau, "x": self.x[:, 0], "y": self.x[:, 1], "z": self.x[:, 2],
                "vx": v[:, 0], "vy": v[:, 1], "vz": v[:, 2], "gamma": self.g,
                "mass_shell_residual": self.residuals(), "radiated_power_proxy": self.power}


def mass_shell_residual(traj) -> float:
    """Largest ``|u.u - c^2| / c^2`` over a trajectory's samples.

    Accepts a :class:`RelTrajectory` or an iterable of :class:`FourVelocity`.
    """
    if isinstance(traj, RelTrajectory):
        r = traj.residuals()
        return float(np.max(r)) if r.size else 0.0
    return max((u.norm_residual() for u in traj), default=0.0)


def _dynamics(field, e, M, c, tau_e):
    c2 = c * c

    def accel(t, x, p, g):
        v = p / g
        E, B, dE, dB = field.fields(t, x, v)
        F = e * (E + np.cross(v, B) / c)
        G = e * (dE + np.cross(v, dB) / c)
        A = (M * g) * np.eye(3) + (M * g ** 3 / c2) * np.outer(v, v)
        if tau_e:
            A = A + (tau_e * g * e / c) * _cross_matrix(B) \
                + (tau_e * g ** 3 / c2) * (np.outer(v, F) - np.outer(F, v))
        a = np.linalg.solve(A, F + tau_e * g * G)
        return v, a, F, G, B

    def rhs(t, y):
        x, p, g = y[0:3], y[3:6], y[6]
        v, a, F, G, B = accel(t, x, p, g)
        pdot = g * a + (g ** 3 / c2) * float(v @ a) * v
        gdot = float(p @ pdot) / (g * c2)
        return np.concatenate([v, pdot, [gdot, 1.0 / g]])

    def reaction_power(t, y):
        x, p, g = y[0:3], y[3:6], y[6]
        v, a, F, G, B = accel(t, x, p, g)
        dF = G + e * np.cross(a, B) / c
        reaction = tau_e * (g * dF - (g ** 3 / c2) * np.cross(a, np.cross(v, F)))
        return -float(reaction @ v)

    return rhs, reaction_power


def integrate_relativistic(field, u0: FourVelocity, x0, tspan, *, e=math.sqrt(1.5), M=1.0,
                           c=1.0, tau_e=1.0, rtol=1e-12, atol=1e-15, n_out=2001, t_eval=None,
                           events=None, shell_tol=1e-9, max_step=None):
    """Integrate the relativistic equation from four-velocity ``u0`` at ``x0``.

    Returns a :class:`RelTrajectory` with the proper time ``tau`` accumulated
    as ``int dt/gamma`` and the radiated-power proxy ``-F_reaction . v``.

    Raises
    ------
    IntegratorError
        if the mass-shell residual exceeds ``shell_tol`` or the solver fails.
    """
    if u0.norm_residual() > 1e-12:
        raise DomainError("initial four-velocity is not on the mass shell")
    if abs(u0.c - c) > 1e-15 * c:
        raise DomainError("four-velocity built with a different speed of light")
    t0, t1 = map(float, tspan)
    if not t1 > t0:
        raise DomainError("tspan must be increasing")
    grid = np.linspace(t0, t1, int(n_out)) if t_eval is None else np.asarray(t_eval, dtype=float)
    rhs, reaction_power = _dynamics(field, e, M, c, tau_e)
    y0 = np.concatenate([_vec(x0), u0.spatial, [u0.gamma, 0.0]])
    if max_step is None:
        max_step = field.max_step() if hasattr(field, "max_step") else np.inf
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", t_eval=grid, rtol=rtol, atol=atol,
                    events=events, max_step=max_step)
    if sol.status == -1:
        raise IntegratorError(f"relativistic integration failed: {sol.message}",
                              t=float(sol.t[-1]) if sol.t.size else t0)
    Y = sol.y
    power = np.array([reaction_power(t, Y[:, k]) for k, t in enumerate(sol.t)])
    meta = {"method": "DOP853", "rtol": rtol, "atol": atol, "e": e, "M": M, "c": c,
            "tau_e": tau_e, "field": field.describe(), "status": int(sol.status)}
    if events is not None:
        meta["events"] = [ev.tolist() for ev in sol.t_events]
    traj = RelTrajectory(sol.t, Y[7], Y[0:3].T.copy(), Y[3:6].T.copy(), Y[6].copy(), power, meta)
    res = mass_shell_residual(traj)
    traj.meta["mass_shell_residual"] = res
    if res > shell_tol:
        raise IntegratorError(f"mass-shell residual {res:.3e} exceeds {shell_tol:.1e}",
                              t=float(sol.t[-1]))
    return traj


# --------------------------------------------------------------------------
# Scenarios


@dataclass
class CapacitorResult:
    trajectory: RelTrajectory
    outcome: str  # "transmitted" or "reflected"
    entry_energy: float
    exit_energy: float
    plateau_max: float
    peak: float
    total_energy: float
    larmor_energy: float
    meta: dict = field(default_factory=dict)

    def summary(self):
        return {
            "outcome": self.outcome,
            "entry_burst": self.entry_energy,
            "exit_burst": self.exit_energy,
            "plateau_max_abs_power": self.plateau_max,
            "peak_abs_power": self.peak,
            "plateau_ratio": self.plateau_max / self.peak if self.peak else 0.0,
            "total_radiated": self.total_energy,
            "larmor_nonrelativistic": self.larmor_energy,
            "mass_shell_residual": self.trajectory.meta["mass_shell_residual"],
            **self.meta,
        }


def _integrate_samples(t, y):
    from scipy.integrate import simpson, trapezoid

    if t.size < 3:
        return float(trapezoid(y, x=t)) if t.size > 1 else 0.0
    return float(simpson(y, x=t))


def capacitor_scenario(E0, gap_length, entry_speed, ramp, *, e=math.sqrt(1.5), M=1.0, c=1.0,
                       tau_e=1.0, rtol=1e-12, atol=1e-15, samples_per_ramp=200, B=(0.0, 0.0, 0.0)):
    """Send a particle through a parallel-plate gap along ``x``.

    ``E0`` is the field component along the motion (negative decelerates).
    ``ramp`` is the edge transit time at the entry speed; the spatial ramp is
    ``entry_speed * ramp``.  Reflection is an outcome, not an error.
    """
    if not 0 < entry_speed < c:
        raise DomainError("entry speed must be in (0, c)")
    if not ramp > 0 or not gap_length > 0:
        raise DomainError("gap and ramp must be positive")
    L = entry_speed * ramp
    if gap_length < 2 * L:
        raise DomainError("gap must be longer than the two edge ramps")
    field = GatedField((E0, 0.0, 0.0), 0.0, gap_length, L, B=B)
    margin = 2 * L
    x_start, x_end = -margin, gap_length + margin

    def exit_ev(t, y):
        return y[0] - x_end

    exit_ev.terminal = True
    exit_ev.direction = 1

    def back_ev(t, y):
        return y[0] - (x_start - 1e-9 * L)

    back_ev.terminal = True
    back_ev.direction = -1

    # generous time budget: decelerating fields can slow the particle a lot
    v_min = entry_speed
    gain = e * abs(E0) * (gap_length / entry_speed) / M
    if E0 < 0:
        v_min = max(entry_speed - gain, 0.05 * entry_speed)
    t_max = 4 * (x_end - x_start) / v_min
    n_out = int(samples_per_ramp * t_max / ramp) + 1
    traj = integrate_relativistic(
        field, FourVelocity.from_velocity([entry_speed, 0, 0], c), [x_start, 0, 0], (0.0, t_max),
        e=e, M=M, c=c, tau_e=tau_e, rtol=rtol, atol=atol, n_out=min(n_out, 400_001),
        events=[exit_ev, back_ev], max_step=ramp / 8,
    )
    ev = traj.meta.get("events", [[], []])
    if ev[0]:
        outcome = "transmitted"
    elif ev[1]:
        outcome = "reflected"
    else:
        outcome = "incomplete"
    t, xa, P = traj.t, traj.x[:, 0], traj.power
    entry = xa < L
    plateau = (xa >= L) & (xa <= gap_length - L)
    exit_ = xa > gap_length - L
    entry_E = _integrate_samples(t[entry], P[entry])
    exit_E = _integrate_samples(t[exit_], P[exit_])
    peak = float(np.max(np.abs(P))) if P.size else 0.0
    plat = float(np.max(np.abs(P[plateau]))) if np.any(plateau) else 0.0
    total = _integrate_samples(t, P)
    s, _ = field.gate(xa)
    f = e * E0 * s
    larmor = tau_e / M * _integrate_samples(t, f * f)
    meta = {"E0": E0, "gap": gap_length, "entry_speed": entry_speed, "ramp": ramp,
            "ramp_length": L, "tau_e": tau_e}
    return CapacitorResult(traj, outcome, entry_E, exit_E, plat, peak, total, larmor, meta)


def uniform_pulse_velocity_gain(beta, *, gain=0.1, ramp=50.0, plateau=500.0, e=math.sqrt(1.5),
                                M=1.0, c=1.0, tau_e=1.0, rtol=1e-13, atol=1e-18):
    """Velocity change of a particle moving at ``beta c`` through a uniform, time-gated field.

    The field is along the motion and sized so the nonrelativistic gain is
    ``gain * beta c``.  Returns ``(dv_relativistic, dv_nonrelativistic)``; the
    latter is ``int f dt / M`` (exact for the FO free particle,
    since ``int fdot dt = 0``).
    """
    from .forces import capacitor_gate

    v0 = beta * c
    env = capacitor_gate(1.0, t_on=ramp, plateau=plateau, ramp=ramp)
    E0 = gain * v0 * M / (e * (plateau + ramp))
    field = UniformEMField((E0, 0, 0), envelope_E=env)
    T = plateau + 4 * ramp
    traj = integrate_relativistic(field, FourVelocity.from_velocity([v0, 0, 0], c), [0, 0, 0],
                                  (0.0, T), e=e, M=M, c=c, tau_e=tau_e, rtol=rtol, atol=atol,
                                  n_out=3, max_step=ramp / 8)
    dv_rel = float(traj.v[-1, 0] - v0)
    dv_nr = e * E0 * (plateau + ramp) / M
    return dv_rel, dv_nr, traj
