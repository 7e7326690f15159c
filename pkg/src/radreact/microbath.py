"""Finite oscillator bath coupled through the independent-oscillator Hamiltonian.

    H = p^2/2m + V(x) + sum_j [p_j^2/2m_j + m_j w_j^2 (q_j - x)^2 / 2] - x f(t)

with ``w_j = (j - 1/2) dw`` on ``(0, w_max]`` and couplings
``c_j = m_j w_j^2 = (2 dw / pi) R(w_j)``, so the memory kernel
``sum_j c_j cos(w_j t)`` is the midpoint rule for ``(2/pi) int R cos``.  Only
``c_j`` enters the particle motion; bath masses are fixed at ``m_j = c_j / w_j^2``.

For a harmonic (or absent) potential and no applied force the dynamics is
propagated exactly in normal modes.  Otherwise a Strang splitting alternates
exact linear flow with kicks from the anharmonic force and ``f(t)``; it is
symplectic.

The discrete spectrum recurs after ``2 pi / dw``; runs past that horizon are
refused.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .bath import SpectralDistribution
from .errors import ConfigurationError, DomainError, NumericError
from .forces import ForceProfile
from .seeding import member_rng

__all__ = [
    "MicrobathConfig",
    "Microbath",
    "MicrobathRun",
    "two_oscillator_exact",
    "gle_check",
]


@dataclass(frozen=True)
class MicrobathConfig:
    spectral: SpectralDistribution
    n_osc: int
    omega_max: float
    T: float = 1.0
    mass: float = 1.0
    K: float = 0.0
    k_B: float = 1.0

    def __post_init__(self):
        if self.n_osc < 1:
            raise DomainError("need at least one bath oscillator")
        if self.n_osc < 100:
            warnings.warn(f"n_osc={self.n_osc} is far from the continuum limit; intended for tests",
                          RuntimeWarning, stacklevel=3)
        if not self.omega_max > 0 or self.mass <= 0 or self.K < 0 or self.T < 0:
            raise DomainError("need omega_max > 0, mass > 0, K >= 0, T >= 0")

    @property
    def d_omega(self):
        return self.omega_max / self.n_osc

    @property
    def recurrence_time(self):
        return 2 * math.pi / self.d_omega

    def frequencies(self):
        return (np.arange(1, self.n_osc + 1) - 0.5) * self.d_omega

    def couplings(self):
        w = self.frequencies()
        c = (2 * self.d_omega / math.pi) * np.asarray(self.spectral(w), dtype=float)
        if np.any(c <= 0):
            raise DomainError("spectral distribution must be positive at every bath frequency")
        return c

    def kernel(self, t):
        """Discrete memory kernel ``sum_j c_j cos(w_j t)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.cos(np.outer(t, self.frequencies())) @ self.couplings()

    def describe(self):
        return {"n_osc": self.n_osc, "omega_max": self.omega_max, "d_omega": self.d_omega,
                "recurrence_time": self.recurrence_time, "T": self.T, "mass": self.mass, "K": self.K,
                "bath": self.spectral.describe()}


@dataclass
class MicrobathRun:
    """Sampled particle trajectories: arrays of shape ``(n_real, n_t)``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy: np.ndarray | None
    meta: dict = field(default_factory=dict)

    def velocity_acf(self, max_lag, origins=None):
        """``<v(s + lag) v(s)>`` averaged over realisations and time origins."""
        n = self.v.shape[1]
        if origins is None:
            origins = n - max_lag
        out = np.empty(max_lag + 1)
        for k in range(max_lag + 1):
            out[k] = np.mean(self.v[:, k : k + origins] * self.v[:, :origins])
        return out

    def max_energy_drift(self):
        if self.energy is None:
            return float("nan")
        e0 = self.energy[:, :1]
        return float(np.max(np.abs(self.energy - e0) / np.maximum(np.abs(e0), 1e-300)))


class Microbath:
    """Particle plus ``n_osc`` oscillators; coordinates ``z = (x, q_1..q_N)``."""

    def __init__(self, config: MicrobathConfig, potential_force: Callable | None = None,
                 potential: Callable | None = None):
        self.config = config
        self.potential_force = potential_force  # -V_extra'(x), beyond the spring K
        self.potential = potential
        w = config.frequencies()
        c = config.couplings()
        self.w, self.c = w, c
        self.mb = c / w ** 2
        n = config.n_osc + 1
        self.masses = np.concatenate([[config.mass], self.mb])
        S = np.zeros((n, n))
        S[0, 0] = config.K + c.sum()
        S[0, 1:] = S[1:, 0] = -c
        S[np.arange(1, n), np.arange(1, n)] = c
        self.stiffness = S
        # generalised symmetric eigenproblem S phi = w^2 Mm phi; phi^T Mm phi = I
        lam, phi = linalg.eigh(S, np.diag(self.masses))
        scale = max(abs(lam).max(), 1e-300)
        lam = np.where(np.abs(lam) < 1e-12 * scale, 0.0, lam)
        if np.any(lam < 0):
            raise NumericError("negative normal-mode frequency squared", residual=float(lam.min()))
        self.mode_omega = np.sqrt(lam)
        self.modes = phi

    # ------------------------------------------------------------------
    def thermal_state(self, n_real, seed, x0=0.0):
        """Boltzmann samples with bath displacements drawn relative to the particle."""
        cfg = self.config
        kT = cfg.k_B * cfg.T
        N = cfg.n_osc
        z = np.empty((N + 1, n_real))
        p = np.empty((N + 1, n_real))
        for r in range(n_real):
            rng = member_rng(seed, "microbath", r)
            x = x0 + (rng.standard_normal() * math.sqrt(kT / cfg.K) if cfg.K > 0 else 0.0)
            z[0, r] = x
            z[1:, r] = x + rng.standard_normal(N) * np.sqrt(kT / self.c)
            p[0, r] = rng.standard_normal() * math.sqrt(kT * cfg.mass)
            p[1:, r] = rng.standard_normal(N) * np.sqrt(kT * self.mb)
        return z, p

    def energy(self, z, p):
        """Total Hamiltonian (no applied force) for state columns."""
        kin = 0.5 * np.sum(p ** 2 / self.masses[:, None], axis=0)
        pot = 0.5 * np.einsum("ir,ij,jr->r", z, self.stiffness, z)
        if self.potential is not None:
            pot = pot + self.potential(z[0])
        return kin + pot

    def _modal(self, z, p):
        # column by column, so a member's numbers do not depend on the ensemble size
        mt = self.modes.T
        a = np.stack([mt @ (self.masses * z[:, r]) for r in range(z.shape[1])], axis=1)
        b = np.stack([mt @ p[:, r] for r in range(p.shape[1])], axis=1)  # modal velocities
        return a, b

    def evolve_linear(self, z, p, t):
        """Exact flow of the quadratic Hamiltonian for a time ``t`` (scalar)."""
        a, b = self._modal(z, p)
        w = self.mode_omega[:, None]
        cs = np.cos(w * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            sn_w = np.where(w > 0, np.sin(w * t) / np.where(w > 0, w, 1.0), t)
        a_t = a * cs + b * sn_w
        b_t = -a * w * w * sn_w + b * cs
        return self.modes @ a_t, self.masses[:, None] * (self.modes @ b_t)

    def particle_series(self, z, p, t):
        """``x(t), v(t)`` at all times ``t`` for every column, exact for the linear system."""
        a, b = self._modal(z, p)
        w = self.mode_omega
        t = np.asarray(t, dtype=float)
        wt = np.outer(t, w)
        cs = np.cos(wt)
        sn = np.sin(wt)
        with np.errstate(invalid="ignore", divide="ignore"):
            sn_w = np.where(w > 0, sn / np.where(w > 0, w, 1.0), t[:, None])
        phi0 = self.modes[0]
        Cx, Sx, Cv, Sv = cs * phi0, sn_w * phi0, -(sn * w) * phi0, cs * phi0
        x = np.stack([Cx @ a[:, r] + Sx @ b[:, r] for r in range(a.shape[1])])
        v = np.stack([Cv @ a[:, r] + Sv @ b[:, r] for r in range(a.shape[1])])
        return x, v

    # ------------------------------------------------------------------
    def run(self, tspan, n_out=501, n_real=100, seed=0, f: ForceProfile | None = None, dt=None,
            state=None, record_energy=True, allow_recurrence=False):
        """Propagate an ensemble of thermal (or given) initial states.

        Raises
        ------
        ConfigurationError
            when ``tspan`` extends past the recurrence time ``2 pi / dw``.
        """
        cfg = self.config
        t0, t1 = map(float, tspan)
        if not allow_recurrence and t1 - t0 > cfg.recurrence_time:
            need = math.ceil((t1 - t0) * cfg.omega_max / (2 * math.pi)) + 1
            raise ConfigurationError(
                f"run length {t1 - t0:.4g} exceeds the bath recurrence time {cfg.recurrence_time:.4g}; "
                f"use n_osc >= {need} at omega_max={cfg.omega_max:g}")
        z, p = self.thermal_state(n_real, seed) if state is None else (np.array(state[0], float),
                                                                         np.array(state[1], float))
        if z.ndim == 1:
            z, p = z[:, None], p[:, None]
        t = np.linspace(t0, t1, n_out)
        driven = f is not None and f.kind != "zero"
        if not driven and self.potential_force is None:
            x, v = self.particle_series(z, p, t - t0)
            energy = None
            if record_energy:
                idx = np.unique(np.linspace(0, n_out - 1, min(n_out, 11)).astype(int))
                energy = np.empty((z.shape[1], idx.size))
                for k, i in enumerate(idx):
                    zz, pp = self.evolve_linear(z, p, t[i] - t0)
                    energy[:, k] = self.energy(zz, pp)
            return MicrobathRun(t, x, v, energy, {"scheme": "normal modes", **cfg.describe(),
                                                  "n_real": z.shape[1], "seed": seed})
        return self._run_split(z, p, t, f, dt, record_energy, seed)

    def _run_split(self, z, p, t, f, dt, record_energy, seed):
        if z.shape[1] > 1:
            # one realisation at a time keeps members bitwise independent of the ensemble size
            runs = [self._run_split(z[:, r:r + 1], p[:, r:r + 1], t, f, dt, record_energy, seed)
                    for r in range(z.shape[1])]
            energy = None if runs[0].energy is None else np.vstack([r.energy for r in runs])
            return MicrobathRun(t, np.vstack([r.x for r in runs]), np.vstack([r.v for r in runs]), energy,
                                {**runs[0].meta, "n_real": z.shape[1]})
        cfg = self.config
        if dt is None:
            dt = 0.05 / max(self.mode_omega.max(), 1e-300)
        sub = max(1, math.ceil((t[1] - t[0]) / dt)) if t.size > 1 else 1
        h = (t[1] - t[0]) / sub if t.size > 1 else 0.0
        # one-step linear propagator as a dense matrix on (z, p)
        n = z.shape[0]
        eye = np.eye(n)
        Pz_z, Pp_z = self.evolve_linear(eye, np.zeros((n, n)), h)
        Pz_p, Pp_p = self.evolve_linear(np.zeros((n, n)), eye, h)
        xs = np.empty((z.shape[1], t.size))
        vs = np.empty_like(xs)
        energy = np.empty_like(xs) if record_energy and (f is None or f.kind == "zero") else None

        def kick(zc, tt):
            out = np.zeros(zc.shape[1])
            if self.potential_force is not None:
                out = out + self.potential_force(zc[0])
            if f is not None:
                out = out + f.f(tt)
            return out

        xs[:, 0], vs[:, 0] = z[0], p[0] / cfg.mass
        if energy is not None:
            energy[:, 0] = self.energy(z, p)
        tt = t[0]
        for i in range(1, t.size):
            for _ in range(sub):
                p[0] += 0.5 * h * kick(z, tt)
                z, p = Pz_z @ z + Pz_p @ p, Pp_z @ z + Pp_p @ p
                tt += h
                p[0] += 0.5 * h * kick(z, tt)
            xs[:, i], vs[:, i] = z[0], p[0] / cfg.mass
            if energy is not None:
                energy[:, i] = self.energy(z, p)
        if not np.all(np.isfinite(xs)):
            raise NumericError("microbath splitting produced non-finite values")
        return MicrobathRun(t, xs, vs, energy, {"scheme": "Strang splitting", "dt": h, **cfg.describe(),
                                                "n_real": z.shape[1], "seed": seed})

    def induced_force(self, z, p, t):
        """Bath force ``sum_j c_j (q_j^h(t) - x(0))`` from free bath motion about ``x(0)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        d = z[1:] - z[0:1]
        wt = np.outer(t, self.w)
        return (np.cos(wt) * self.c) @ d + (np.sin(wt) * (self.c / (self.mb * self.w))) @ p[1:]


def two_oscillator_exact(m, K, m1, w1, x0, v0, q0, u0, t):
    """Closed-form particle position for one bath oscillator, coupling ``c = m1 w1^2``.

    Independent of the general machinery: the 2x2 frequencies come from the
    quadratic formula and the amplitudes from solving the initial conditions.
    """
    c = m1 * w1 ** 2
    t = np.asarray(t, dtype=float)
    if K == 0:
        M = m + m1
        X0 = (m * x0 + m1 * q0) / M
        V0 = (m * v0 + m1 * u0) / M
        Om = math.sqrt(c * M / (m * m1))
        r0, rd0 = x0 - q0, v0 - u0
        r = r0 * np.cos(Om * t) + rd0 / Om * np.sin(Om * t)
        return X0 + V0 * t + m1 / M * r
    # w^2 roots of det([[K + c - m w^2, -c], [-c, c - m1 w^2]]) = 0
    A = m * m1
    B = -(m * c + m1 * (K + c))
    C = K * c
    disc = math.sqrt(B * B - 4 * A * C)
    lam = np.array([(-B - disc) / (2 * A), (-B + disc) / (2 * A)])
    # mode shapes: q = x * c / (c - m1 w^2)
    ratio = c / (c - m1 * lam)
    Mx = np.array([[1.0, 1.0], [ratio[0], ratio[1]]])
    a = np.linalg.solve(Mx, [x0, q0])
    b = np.linalg.solve(Mx, [v0, u0]) / np.sqrt(lam)
    om = np.sqrt(lam)
    return a[0] * np.cos(om[0] * t) + b[0] * np.sin(om[0] * t) + a[1] * np.cos(om[1] * t) + b[1] * np.sin(om[1] * t)


def gle_check(bath: Microbath, z0, p0, tspan, n_out=201, rtol=1e-12, atol=1e-14):
    """Integrate the generalised Langevin equation for one realisation.

    The memory integral is carried by auxiliary pairs ``(u_j, s_j)`` with
    ``u_j' = v - w_j s_j``, ``s_j' = w_j u_j``; the noise is the induced force
    of the initial bath state.  Returns ``(t, x_gle, x_modes, rel_err)``
    where the error is normalised by the sup norm of the normal-mode
    trajectory's displacement.
    """
    cfg = bath.config
    if bath.potential_force is not None:
        raise DomainError("the GLE comparison is implemented for the linear system")
    z0 = np.asarray(z0, dtype=float).ravel()
    p0 = np.asarray(p0, dtype=float).ravel()
    t = np.linspace(tspan[0], tspan[1], n_out)
    w, c = bath.w, bath.c
    N = w.size

    fc = c * (z0[1:] - z0[0])
    fs = c / (bath.mb * w) * p0[1:]

    def rhs(tt, y):
        x, v = y[0], y[1]
        u = y[2 : 2 + N]
        s = y[2 + N :]
        F = fc @ np.cos(w * tt) + fs @ np.sin(w * tt)
        acc = (-cfg.K * x - c @ u + F) / cfg.mass
        return np.concatenate([[v, acc], v - w * s, w * u])

    y0 = np.concatenate([[z0[0], p0[0] / cfg.mass], np.zeros(2 * N)])
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericError(f"GLE integration failed: {sol.message}")
    x_modes, _ = bath.particle_series(z0[:, None], p0[:, None], t - t[0])
    x_modes = x_modes[0]
    ref = max(np.max(np.abs(x_modes - x_modes[0])), np.max(np.abs(x_modes)), 1e-300)
    err = float(np.max(np.abs(sol.y[0] - x_modes)) / ref)
    return t, sol.y[0], x_modes, err
