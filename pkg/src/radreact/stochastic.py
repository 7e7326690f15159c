"""Noise synthesis, classical Langevin ensembles and diffusion estimates.

Noise is synthesised in the frequency domain: independent complex Gaussian
bins scaled by the square root of the target spectrum, inverse-FFT'd to a real
stationary series.  With the two-sided convention used throughout,

    C(t) = (1/pi) int_0^inf S(w) cos(w t) dw,

``S`` is both the integrand of the fluctuation-dissipation relation and the
two-sided power spectral density in angular frequency.

Quantum-mode noise reproduces the *symmetrised* correlation only; it is a
classical surrogate process and carries no commutator structure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, signal

from .bath import BlackbodySpectrum, OhmicSpectrum, SpectralDistribution
from .errors import ConfigurationError, DomainError, NumericError
from .forces import ForceProfile
from .seeding import member_rng

__all__ = [
    "NoiseProcess",
    "Ensemble",
    "DiffusionEstimate",
    "target_psd",
    "synthesize_noise",
    "periodogram",
    "sample_acf",
    "simulate_langevin_ohmic",
    "estimate_diffusion",
    "ou_propagator",
    "drive_oscillator",
    "binned_psd",
    "psd_welch",
]


def _bose_y(y):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.where(y == 0, 1.0, y / np.expm1(np.where(y == 0, 1.0, y)))
    return np.where(y > 700, 0.0, out)


def target_psd(omega, spectral: SpectralDistribution, T, hbar_mode="classical", hbar=1.0, k_B=1.0):
    """``S(w) = R(w) hbar w coth(hbar w/2kT)``, or ``2 kT R(w)`` in classical mode."""
    w = np.abs(np.asarray(omega, dtype=float))
    kT = k_B * T
    R = spectral(w)
    if hbar_mode == "classical":
        return 2.0 * kT * R
    if hbar_mode != "quantum":
        raise DomainError("hbar_mode must be 'quantum' or 'classical'")
    if hbar <= 0:
        raise DomainError("quantum mode needs hbar > 0")
    # hbar w coth(hbar w / 2kT) = hbar w + 2 kT * y/(e^y - 1), y = hbar w / kT
    thermal = 2.0 * kT * _bose_y(hbar * w / kT) if kT > 0 else 0.0
    return R * (hbar * w + thermal)


def _correlation_time(spectral, T, hbar_mode, hbar, k_B):
    times = []
    if isinstance(spectral, BlackbodySpectrum):
        times.append(1.0 / spectral.Omega)
    elif not isinstance(spectral, OhmicSpectrum):
        times.append(1.0 / max(spectral.scale, 1e-300))
    if hbar_mode == "quantum" and T > 0:
        times.append(hbar / (math.pi * k_B * T))
    return max(times) if times else 0.0


@dataclass
class NoiseProcess:
    """Realisations of a stationary Gaussian force; ``samples`` has shape ``(n_real, N)``."""

    samples: np.ndarray
    dt: float
    seed: int
    psd: np.ndarray  # target S on the rfft grid
    omega: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.samples.shape[-1]

    def expected_acf(self, max_lag):
        """Exact ensemble ACF of the discrete synthesis at lags ``0..max_lag``."""
        N, dt = self.N, self.dt
        full = np.zeros(N)
        full[: self.psd.size] = self.psd
        # Hermitian completion of the one-sided grid
        full[N - np.arange(1, N - self.psd.size + 1)] = self.psd[1 : N - self.psd.size + 1]
        acf = np.real(np.fft.ifft(full)) / dt
        return acf[: max_lag + 1]


def synthesize_noise(spectral: SpectralDistribution, T, hbar_mode="classical", dt=0.01, N=4096,
                     seed=0, *, hbar=1.0, k_B=1.0, n_real=1, check_resolution=True):
    """Frequency-domain synthesis of ``n_real`` independent stationary records.

    Bin ``k`` of the length-``N`` transform gets ``sqrt(N S(w_k)/dt)`` times a
    unit complex Gaussian (real at DC and Nyquist); ``irfft`` returns the
    series.  Each realisation draws from its own seeded stream.

    Raises
    ------
    ConfigurationError
        when the thermal frequency lies beyond Nyquist or the record is
        shorter than ten correlation times.
    """
    if dt <= 0 or N < 2 or n_real < 1:
        raise DomainError("need dt > 0, N >= 2, n_real >= 1")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    omega = 2 * math.pi * np.fft.rfftfreq(N, dt)
    nyq = math.pi / dt
    if check_resolution:
        if hbar_mode == "quantum" and T > 0 and math.pi * k_B * T / hbar > nyq:
            raise ConfigurationError(
                f"thermal frequency pi kT/hbar = {math.pi * k_B * T / hbar:.4g} exceeds the Nyquist "
                f"frequency {nyq:.4g}; reduce dt")
        tc = _correlation_time(spectral, T, hbar_mode, hbar, k_B)
        if N * dt < 10 * tc:
            raise ConfigurationError(
                f"record length {N * dt:.4g} covers fewer than 10 correlation times ({tc:.4g})")
        if isinstance(spectral, BlackbodySpectrum) and spectral.Omega > nyq:
            raise ConfigurationError("bath cutoff lies beyond Nyquist; reduce dt")
    S = target_psd(omega, spectral, T, hbar_mode, hbar, k_B)
    if np.any(S < 0) or not np.all(np.isfinite(S)):
        raise NumericError("target spectrum is negative or not finite")
    amp = np.sqrt(N * S / dt)
    out = np.empty((n_real, N))
    nb = omega.size
    for r in range(n_real):
        rng = member_rng(seed, "noise", r)
        z = (rng.standard_normal(nb) + 1j * rng.standard_normal(nb)) / math.sqrt(2.0)
        z[0] = rng.standard_normal()
        if N % 2 == 0:
            z[-1] = rng.standard_normal()
        out[r] = np.fft.irfft(amp * z, n=N)
    meta = {"hbar_mode": hbar_mode, "T": T, "hbar": hbar, "k_B": k_B, "bath": spectral.describe(),
            "n_real": n_real, "N": N, "dt": dt}
    return NoiseProcess(out, dt, seed, S, omega, meta)


def periodogram(samples, dt):
    """Two-sided periodogram ``dt |FFT|^2 / N`` on the rfft grid, averaged over rows."""
    x = np.atleast_2d(samples)
    N = x.shape[-1]
    P = dt * np.abs(np.fft.rfft(x, axis=-1)) ** 2 / N
    return 2 * math.pi * np.fft.rfftfreq(N, dt), P.mean(axis=0)


def psd_welch(samples, dt, nperseg=1024):
    """Hann-windowed Welch estimate of the two-sided angular PSD, averaged over rows.

    scipy's one-sided density in Hz is ``2 S(w)``; it is halved here so the
    result compares directly with ``target_psd``.
    """
    x = np.atleast_2d(samples)
    f, P = signal.welch(x, fs=1.0 / dt, window="hann", nperseg=min(nperseg, x.shape[-1]),
                        detrend=False, axis=-1)
    return 2 * math.pi * f, 0.5 * P.mean(axis=0)


def binned_psd(omega, P, bins):
    """Average consecutive groups of ``bins`` frequency bins (DC dropped)."""
    w, p = omega[1:], P[1:]
    n = (w.size // bins) * bins
    return w[:n].reshape(-1, bins).mean(axis=1), p[:n].reshape(-1, bins).mean(axis=1)


def sample_acf(samples, max_lag):
    """Circular sample autocorrelation averaged over rows, lags ``0..max_lag``."""
    x = np.atleast_2d(samples)
    N = x.shape[-1]
    X = np.fft.rfft(x, axis=-1)
    acf = np.fft.irfft(np.abs(X) ** 2, n=N, axis=-1) / N
    return acf.mean(axis=0)[: max_lag + 1]


# --------------------------------------------------------------------------
# Langevin ensembles


def ou_propagator(m, zeta, K, kT, dt):
    """Exact one-step map of ``m x'' + zeta x' + K x = noise`` in ``(x, v)``.

    Returns ``(Phi, L)`` with ``y_{n+1} = Phi y_n + L xi``, ``xi ~ N(0, I)``;
    the covariance ``L L^T`` comes from Van Loan's block exponential.
    """
    A = np.array([[0.0, 1.0], [-K / m, -zeta / m]])
    Q = np.array([[0.0, 0.0], [0.0, 2.0 * kT * zeta / m ** 2]])
    blk = np.zeros((4, 4))
    blk[:2, :2] = -A
    blk[:2, 2:] = Q
    blk[2:, 2:] = A.T
    E = linalg.expm(blk * dt)
    Phi = E[2:, 2:].T
    cov = Phi @ E[:2, 2:]
    cov = 0.5 * (cov + cov.T)
    w, V = np.linalg.eigh(cov)
    L = V * np.sqrt(np.clip(w, 0.0, None))
    return Phi, L


@dataclass
class Ensemble:
    """Recorded members of a stochastic simulation: arrays of shape ``(n_traj, n_rec)``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    seed: int
    member_ids: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_traj(self):
        return self.x.shape[0]

    def velocity_variance(self, start=0):
        vv = self.v[:, start:]
        return math.fsum((vv * vv).ravel().tolist()) / vv.size

    def velocity_acf(self, max_lag, start=0):
        """Time- and ensemble-averaged ``<v(s + lag) v(s)>`` on the record grid."""
        v = self.v[:, start:]
        n = v.shape[1]
        out = np.empty(max_lag + 1)
        for k in range(max_lag + 1):
            out[k] = np.mean(v[:, k:] * v[:, : n - k])
        return out

    def position_acf(self, max_lag, start=0):
        x = self.x[:, start:]
        n = x.shape[1]
        return np.array([np.mean(x[:, k:] * x[:, : n - k]) for k in range(max_lag + 1)])

    def summary(self):
        return {"n_traj": int(self.n_traj), "seed": self.seed, **{
            k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))}}


def simulate_langevin_ohmic(zeta, T, mass=1.0, *, K=0.0, potential_force: Callable | None = None,
                            f: ForceProfile | None = None, n_traj=1000, tspan=(0.0, 50.0), dt=0.01,
                            seed=0, k_B=1.0, record_every=10, x0=0.0, v0=None, x_thermal=None,
                            chunk=1000):
    """Classical Langevin ensemble ``m x'' + zeta x' + K x + V_extra'(x) = F(t) + f(t)``.

    The linear part (friction, spring ``K``, white noise of intensity
    ``2 kT zeta``) is propagated exactly; ``potential_force`` (returning
    ``-V_extra'(x)``) and ``f`` enter as Strang half-kicks.  Velocities start
    thermal unless ``v0`` is given; positions start thermal when ``K > 0``
    (override with ``x_thermal``).

    Raises
    ------
    NumericError
        if ``dt * zeta / m > 2``: the velocity relaxation is not resolved.
    """
    if mass <= 0 or zeta < 0 or T < 0 or K < 0:
        raise DomainError("need mass > 0, zeta >= 0, T >= 0, K >= 0")
    if dt * zeta / mass > 2.0:
        raise NumericError(f"dt={dt} is too large for the relaxation time m/zeta={mass / zeta}; "
                           "reduce dt below 2 m/zeta")
    t0, t1 = map(float, tspan)
    n_steps = int(round((t1 - t0) / dt))
    if n_steps < 1:
        raise DomainError("tspan shorter than one step")
    kT = k_B * T
    Phi, L = ou_propagator(mass, zeta, K, kT, dt)
    rec_idx = np.arange(0, n_steps + 1, record_every)
    t_rec = t0 + dt * rec_idx
    X = np.empty((n_traj, rec_idx.size))
    V = np.empty((n_traj, rec_idx.size))
    nonlinear = potential_force is not None or (f is not None and f.kind != "zero")
    if x_thermal is None:
        x_thermal = K > 0
    for c0 in range(0, n_traj, chunk):
        ids = np.arange(c0, min(c0 + chunk, n_traj))
        rngs = [member_rng(seed, "langevin", int(i)) for i in ids]
        x = np.empty(ids.size)
        v = np.empty(ids.size)
        for j, rng in enumerate(rngs):
            v[j] = rng.standard_normal() * math.sqrt(kT / mass) if v0 is None else v0
            x[j] = x0 + (rng.standard_normal() * math.sqrt(kT / K) if x_thermal and K > 0 else 0.0)
        # noise for the whole chunk, drawn per member so each stream is independent
        block = 256
        r = 0
        X[ids, 0], V[ids, 0] = x, v
        step = 0
        while step < n_steps:
            nb = min(block, n_steps - step)
            xi = np.stack([rng.standard_normal((nb, 2)) for rng in rngs], axis=1)  # (nb, m, 2)
            for s in range(nb):
                t = t0 + step * dt
                if nonlinear:
                    v = v + 0.5 * dt / mass * _kick(potential_force, f, x, t)
                x, v = (Phi[0, 0] * x + Phi[0, 1] * v + L[0, 0] * xi[s, :, 0] + L[0, 1] * xi[s, :, 1],
                        Phi[1, 0] * x + Phi[1, 1] * v + L[1, 0] * xi[s, :, 0] + L[1, 1] * xi[s, :, 1])
                step += 1
                if nonlinear:
                    v = v + 0.5 * dt / mass * _kick(potential_force, f, x, t + dt)
                if step % record_every == 0:
                    r = step // record_every
                    X[ids, r], V[ids, r] = x, v
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise NumericError("Langevin integration produced non-finite values")
    meta = {"zeta": zeta, "T": T, "k_B": k_B, "mass": mass, "K": K, "dt": dt,
            "record_every": record_every, "scheme": "exact OU + Strang kicks" if nonlinear else "exact OU",
            "tspan": [t0, t1]}
    return Ensemble(t_rec, X, V, seed, np.arange(n_traj), meta)


def _kick(potential_force, f, x, t):
    out = np.zeros_like(x)
    if potential_force is not None:
        out = out + potential_force(x)
    if f is not None:
        out = out + f.f(t)
    return out


@dataclass
class DiffusionEstimate:
    D: float
    ci: float
    window: tuple
    n_traj: int
    batches: int
    lags: np.ndarray
    msd: np.ndarray
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {"D": self.D, "ci": self.ci, "window": list(self.window), "n_traj": self.n_traj,
                "batches": self.batches, "warnings": list(self.warnings)}


def _msd_curve(x, max_lag):
    n = x.shape[1]
    out = np.empty((x.shape[0], max_lag + 1))
    for k in range(max_lag + 1):
        d = x[:, k:] - x[:, : n - k]
        out[:, k] = np.mean(d * d, axis=1)
    return out


def estimate_diffusion(ens: Ensemble, window=None, batches=20, max_lag_fraction=0.5):
    """``D = slope / 2`` of the time- and ensemble-averaged mean-square displacement.

    The slope is fitted (with intercept) on a late lag window, by default
    ``[10, 25] m/zeta`` clipped to half the record.  The 95% interval comes
    from batch means over members.  If the slopes of the two halves of the
    window disagree beyond their statistical spread the MSD is still curving:
    a warning is issued and the window is moved later.
    """
    t = ens.t - ens.t[0]
    dtr = t[1] - t[0]
    max_lag = int(max_lag_fraction * (t.size - 1))
    tau = ens.meta.get("mass", 1.0) / max(ens.meta.get("zeta", 1.0), 1e-300)
    if window is None:
        window = (10 * tau, 25 * tau)
    lo, hi = window
    hi = min(hi, max_lag * dtr)
    if lo >= hi:
        lo = 0.5 * hi
    per = _msd_curve(ens.x, max_lag)  # (n_traj, lags)
    lags = dtr * np.arange(max_lag + 1)
    batches = max(2, min(batches, ens.n_traj))
    groups = np.array_split(np.arange(ens.n_traj), batches)
    notes = []

    def fit(curve, a, b):
        m = (lags >= a) & (lags <= b)
        slope, _ = np.polyfit(lags[m], curve[m], 1)
        return slope

    def estimate(a, b):
        bm = np.array([fit(per[g].mean(axis=0), a, b) / 2 for g in groups])
        D = fit(per.mean(axis=0), a, b) / 2
        ci = 1.96 * bm.std(ddof=1) / math.sqrt(len(groups))
        return D, ci, bm

    D, ci, _ = estimate(lo, hi)
    for _ in range(4):
        mid = 0.5 * (lo + hi)
        d1, c1, _ = estimate(lo, mid)
        d2, c2, _ = estimate(mid, hi)
        if abs(d1 - d2) <= max(3 * math.hypot(c1, c2) / 1.96, 1e-12 * abs(D)):
            break
        msg = f"MSD still curving on [{lo:.4g}, {hi:.4g}] (half-window D {d1:.4g} vs {d2:.4g}); extending"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
        new_lo = mid
        if hi - new_lo < 4 * dtr:
            break
        lo = new_lo
        D, ci, _ = estimate(lo, hi)
    return DiffusionEstimate(float(D), float(ci), (float(lo), float(hi)), ens.n_traj, len(groups),
                             lags, per.mean(axis=0), notes)


def drive_oscillator(force, dt, m, zeta, K):
    """Response of ``m x'' + zeta x' + K x = F`` to sampled force records.

    The force is treated as piecewise linear between samples (first-order
    hold), which is exact for that interpolant.  ``force`` has shape
    ``(n_real, N)``; the system starts at rest, so discard an initial
    transient before computing spectra.
    """
    F = np.atleast_2d(np.asarray(force, dtype=float))
    A = np.array([[0.0, 1.0], [-K / m, -zeta / m]])
    B = np.array([[0.0], [1.0 / m]])
    C = np.array([[1.0, 0.0]])
    D = np.array([[0.0]])
    Ad, Bd, Cd, Dd, _ = signal.cont2discrete((A, B, C, D), dt, method="foh")
    num, den = signal.ss2tf(Ad, Bd, Cd, Dd)
    return signal.lfilter(num[0], den, F, axis=-1)
