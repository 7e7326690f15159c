"""Cross-module oracle suite.

Each check compares a computed quantity to an independent oracle (closed
form, exact algebra, or a different numerical route) and returns a
:class:`CheckResult`.  ``quick=True`` shrinks the stochastic checks to
desk-scale ensembles with correspondingly looser statistical margins; the
deterministic checks are identical in both modes.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["CheckResult", "CHECKS", "run_check", "run_suite", "format_table"]


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    value: float
    tolerance: float
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return (f"[{mark}] {self.number:2d} {self.name:<28s} metric={self.value:.3e} "
                f"tol={self.tolerance:.1e} ({self.runtime:.1f}s)")

    def as_dict(self):
        from .io import jsonable

        return jsonable({"number": self.number, "name": self.name, "passed": self.passed,
                         "value": self.value, "tolerance": self.tolerance, "runtime_s": self.runtime,
                         "details": self.details})


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.abs(np.asarray(b))))


# ---------------------------------------------------------------------------


def check_stieltjes(quick=False):
    from .bath import BlackbodySpectrum, stieltjes_mu

    rng = np.random.default_rng(101)
    spec = BlackbodySpectrum.from_tau_e(1.0, 1.0, 1.0)
    z = rng.uniform(-5, 5, 100) + 1j * 10 ** rng.uniform(-2, 0.7, 100)
    got = np.array([stieltjes_mu(zz, spec) for zz in z])
    ref = spec.closed_form_mu(z)
    err = _rel(got, ref)
    return err <= 1e-8, err, 1e-8, {"points": 100}


def check_alpha_equivalence(quick=False):
    from .bath import BlackbodySpectrum
    from .response import alpha_fo, alpha_general

    rng = np.random.default_rng(202)
    M, K, tau = 1.0, 0.3, 1.0
    w = rng.uniform(0.0, 10.0, 50)
    spec = BlackbodySpectrum.from_tau_e(M, tau, 1.0 / tau)
    b = alpha_fo(w, M, K, tau)
    # closed-form mu and the boundary-value quadrature route
    a_cf = np.array([alpha_general(x, 0.0, K, spec) for x in w])
    a_q = np.array([alpha_general(x, 0.0, K, spec, quadrature=True) for x in w])
    err = max(_rel(a_cf, b), _rel(a_q, b))
    return err <= 1e-10, err, 1e-10, {"points": 50, "closed_form_err": _rel(a_cf, b),
                                      "quadrature_err": _rel(a_q, b)}


def check_poles(quick=False):
    from .core import oscillator_derived
    from .response import Susceptibility, pole_diagnostics

    M, K, tau = 1.0, 1.0, 0.01
    p = oscillator_derived(K, M, tau)
    fo = pole_diagnostics(Susceptibility.ford_oconnell(M, K, tau))
    expect = sorted([-0.5j * p.gamma + p.omega1, -0.5j * p.gamma - p.omega1], key=lambda z: z.real)
    got = sorted([q.value for q in fo.poles], key=lambda z: z.real)
    fo_err = max(abs(g - e) / abs(e) for g, e in zip(got, expect))
    fo_ok = len(got) == 2 and all(q.half_plane == "lower" for q in fo.poles) and fo.causal
    al = pole_diagnostics(Susceptibility.abraham_lorentz(M, 0.0, tau))
    upper = [q for q in al.poles if q.half_plane == "upper"]
    al_err = abs(upper[0].value - 1j / tau) * tau if len(upper) == 1 else math.inf
    alk = pole_diagnostics(Susceptibility.abraham_lorentz(M, K, tau))
    alk_ok = alk.n_upper == 1 and not alk.causal
    err = max(fo_err, al_err)
    ok = fo_ok and alk_ok and err <= 1e-12
    return ok, err, 1e-12, {"fo_poles": [str(z) for z in got], "al_upper": str(upper[0].value) if upper else None,
                            "al_n_upper_with_spring": alk.n_upper}


def check_runaway(quick=False):
    from .dynamics import integrate_abraham_lorentz, integrate_fo_free
    from .forces import gaussian_pulse

    p = gaussian_pulse(t0=5.0, sigma=0.5, f0=1e-3)
    al = integrate_abraham_lorentz(p, 0.0, 0.0, 0.0, (0.0, 100.0))
    rate = al.meta.get("growth_rate", float("nan"))
    rate_err = abs(rate - 1.0)
    fo = integrate_fo_free(p, 0.0, 0.0, (0.0, 100.0))
    post = fo.t > p.support[1]
    v = fo.v[post]
    vvar = float((v.max() - v.min()) / abs(v).max())
    ok = al.runaway and rate_err <= 1e-2 and vvar <= 1e-8
    return ok, rate_err, 1e-2, {"growth_rate": rate, "fo_post_pulse_velocity_variation": vvar,
                                "al_runaway": al.runaway}


def check_oscillator_acf(quick=False):
    from .correlations import classical_oscillator_autocorr, position_autocorrelation
    from .response import Susceptibility

    K, M, tau, T = 1.0, 1.0, 0.01, 1.0
    s = Susceptibility.ford_oconnell(M, K, tau)
    gamma = K * tau / M
    lags = np.linspace(0.0, 10.0 / gamma, 200)
    got = np.array([position_autocorrelation(t, s, T, 0.0).value for t in lags])
    ref = classical_oscillator_autocorr(lags, K, M, tau, T)
    err = float(np.max(np.abs(got - ref)) / (T / K))
    equip = abs(got[0] - T / K) / (T / K)
    ok = err <= 1e-6 and equip <= 1e-9
    return ok, err, 1e-6, {"equipartition_rel_err": equip, "lags": 200, "normalisation": "kT/K"}


def check_ohmic_fdt(quick=False):
    from .bath import OhmicSpectrum
    from .correlations import force_autocorrelation, ohmic_force_autocorrelation_closed
    from .stochastic import synthesize_noise

    zeta, T, hbar = 1.0, 1.0, 1.0
    wT = math.pi * T / hbar
    x = np.linspace(0.1, 5.0, 50)
    got = np.array([force_autocorrelation(xx / wT, OhmicSpectrum(zeta), T, hbar).value for xx in x])
    ref = np.array([ohmic_force_autocorrelation_closed(xx / wT, zeta, T, hbar) for xx in x])
    err = _rel(got, ref)
    # classical delta weight from the zero-lag variance of synthesised white noise
    dt, N, n_real = 0.01, 4096, 8 if quick else 32
    noise = synthesize_noise(OhmicSpectrum(zeta), T, "classical", dt=dt, N=N, seed=6, n_real=n_real)
    samples = noise.samples.ravel()
    weight = float(np.mean(samples ** 2) * dt)
    target = 2 * T * zeta
    sigma = target * math.sqrt(2.0 / samples.size)
    delta_lib = force_autocorrelation(0.5, OhmicSpectrum(zeta), T, 0.0).delta
    ok = err <= 1e-5 and abs(weight - target) <= 3 * sigma and abs(delta_lib - target) <= 1e-12 * target
    return ok, err, 1e-5, {"delta_weight_sampled": weight, "delta_weight_target": target,
                           "sigma": sigma, "delta_weight_library": delta_lib}


def check_larmor(quick=False):
    from .dynamics import integrate_fo_free, larmor_energy, radiated_energy
    from .forces import capacitor_gate, sinusoid
    from scipy.integrate import simpson

    cg = capacitor_gate(1e-2, 10.0, 200.0, 10.0)
    r = radiated_energy(cg)
    plateau = (r.t > 20.0) & (r.t < 210.0)
    peak = float(np.max(np.abs(r.power)))
    plat = float(np.max(np.abs(r.power[plateau])) / peak)
    w_profile = float(simpson(r.power, x=r.t))
    profile_err = abs(w_profile - r.total) / r.total
    s = sinusoid(1e-3, 1e-2, envelope=capacitor_gate(1.0, 0.0, 2e4, 2e3))
    tr = integrate_fo_free(s, 0.0, 0.0, (0.0, 2.4e4 + 10.0), n_out=400001)
    W = radiated_energy(s).total
    L = larmor_energy(tr)
    larmor_err = abs(L - W) / W
    ok = plat <= 1e-6 and profile_err <= 1e-6 and larmor_err <= 1e-4
    return ok, larmor_err, 1e-4, {"plateau_over_peak": plat, "profile_vs_total": profile_err,
                                  "W_R": W, "larmor": L}


def check_relativistic(quick=False):
    from .relativistic import capacitor_scenario, uniform_pulse_velocity_gain

    devs = []
    for beta in (1e-3, 2e-3):
        dr, dn, _ = uniform_pulse_velocity_gain(beta)
        devs.append(abs(dr - dn) / dn)
    ratio = devs[1] / devs[0]
    res = capacitor_scenario(2e-7, 40.0, 0.01, 20.0)
    s = res.summary()
    shell = s["mass_shell_residual"]
    # radiation confined to the edges: nothing on the plateau, a finite burst at each edge
    bursts_ok = s["plateau_ratio"] <= 1e-6 and min(abs(s["entry_burst"]), abs(s["exit_burst"])) > 0
    ok = shell <= 1e-9 and abs(ratio - 4.0) <= 0.3 and bursts_ok and s["outcome"] == "transmitted"
    return ok, abs(ratio - 4.0), 0.3, {"deviation_ratio": ratio, "mass_shell_residual": shell,
                                       "plateau_ratio": s["plateau_ratio"], "entry_burst": s["entry_burst"],
                                       "exit_burst": s["exit_burst"],
                                       "total_vs_larmor": s["total_radiated"] / s["larmor_nonrelativistic"] - 1}


def check_einstein(quick=False):
    from .stochastic import estimate_diffusion, simulate_langevin_ohmic

    n = 2000 if quick else 10_000
    ens = simulate_langevin_ohmic(1.0, 1.0, 1.0, n_traj=n, tspan=(0.0, 50.0), dt=0.01, seed=9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        d = estimate_diffusion(ens)
    err = abs(d.D - 1.0)
    # the quick ensemble is 5x smaller, so its margin is set by its own interval
    tol = max(0.05, 2 * d.ci) if quick else 0.05
    return err <= tol, err, tol, {"D": d.D, "ci95": d.ci, "within_ci": err <= d.ci, "n_traj": n,
                                  "window": d.window}


def check_microbath(quick=False):
    from .bath import OhmicSpectrum
    from .microbath import Microbath, MicrobathConfig, two_oscillator_exact

    n_real = 100 if quick else 400
    cfg = MicrobathConfig(OhmicSpectrum(1.0), 1000, 100.0, T=1.0)
    bath = Microbath(cfg)
    run = bath.run((0.0, 60.0), n_out=601, n_real=n_real, seed=10)
    lag = np.arange(51) * 0.1
    acf = run.velocity_acf(50)
    acf_err = float(np.max(np.abs(acf - np.exp(-lag))))
    drift = run.max_energy_drift()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        one = Microbath(MicrobathConfig(OhmicSpectrum(0.3), 1, 2.0, T=1.0, K=0.7))
    z, p = one.thermal_state(1, 11)
    t = np.linspace(0.0, 40.0, 401)
    x, _ = one.particle_series(z, p, t)
    xe = two_oscillator_exact(1.0, 0.7, one.mb[0], one.w[0], z[0, 0], p[0, 0], z[1, 0], p[1, 0] / one.mb[0], t)
    n1 = float(np.max(np.abs(x[0] - xe)) / np.max(np.abs(xe)))
    tol = 0.06 if quick else 0.03
    ok = acf_err <= tol and drift <= 1e-8 and n1 <= 1e-8
    return ok, acf_err, tol, {"energy_drift": drift, "n1_oracle_err": n1, "n_real": n_real,
                               "recurrence_time": cfg.recurrence_time}


def check_commutator(quick=False):
    from .correlations import equal_time_xv_commutator
    from .response import Susceptibility

    worst = 0.0
    rows = {}
    for gt in (1e-3, 1e-2):
        M, K = 1.0, 1.0
        tau = math.sqrt(gt * M / K)
        val = equal_time_xv_commutator(Susceptibility.ford_oconnell(M, K, tau), 1.0)
        ref = (1.0 / M) * (1.0 - gt)
        rows[str(gt)] = val
        worst = max(worst, abs(val - ref) / ref)
    return worst <= 1e-2, worst, 1e-2, {"values": rows}


def check_msd(quick=False):
    from .correlations import msd_cutoff_integral, msd_zero_temperature

    w0, tau, M, c, hbar = 1.0, 1e-6, 1.0, 1e5, 1.0
    a = msd_zero_temperature(w0, tau, M, c, hbar)
    b = msd_cutoff_integral(w0, tau, M, c, hbar).value
    base = hbar / (2 * M * w0)
    err = abs(b - a) / a
    corr_ratio = (b - base) / (a - base)
    ok = err <= 0.05 and b - base > 0
    return ok, err, 0.05, {"direct": b, "leading_log": a, "correction_ratio": corr_ratio}


CHECKS: dict[int, tuple[str, Callable]] = {
    1: ("stieltjes_closure", check_stieltjes),
    2: ("alpha_equivalence", check_alpha_equivalence),
    3: ("pole_classification", check_poles),
    4: ("runaway", check_runaway),
    5: ("oscillator_acf", check_oscillator_acf),
    6: ("ohmic_fdt", check_ohmic_fdt),
    7: ("generalized_larmor", check_larmor),
    8: ("relativistic", check_relativistic),
    9: ("einstein_relation", check_einstein),
    10: ("microbath", check_microbath),
    11: ("equal_time_commutator", check_commutator),
    12: ("msd_zero_temperature", check_msd),
}


def run_check(number, quick=False) -> CheckResult:
    name, fn = CHECKS[number]
    t0 = time.perf_counter()
    try:
        ok, value, tol, details = fn(quick=quick)
    except Exception as exc:  # a crashing check is a failing check
        return CheckResult(number, name, False, float("inf"), float("nan"), time.perf_counter() - t0,
                           {"error": f"{type(exc).__name__}: {exc}"})
    return CheckResult(number, name, bool(ok), float(value), float(tol), time.perf_counter() - t0, details)


def run_suite(quick=False, only=None, progress=None):
    results = []
    for n in sorted(CHECKS):
        if only and n not in only:
            continue
        r = run_check(n, quick)
        if progress:
            progress(r)
        results.append(r)
    return results


def format_table(results):
    lines = [r.line() for r in results]
    npass = sum(r.passed for r in results)
    lines.append(f"{npass}/{len(results)} checks passed")
    return "\n".join(lines)
