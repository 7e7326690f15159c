"""Command-line scenario runner.

Every subcommand writes its data files plus ``<stem>.manifest.json`` into
``--out-dir``; the manifest is written even when the run fails.  Exit codes:
0 success, 1 physical-constraint violation, 2 numerical failure, 3 usage or
configuration error.

Units: with ``--units reduced`` (default) numbers are read and written in
internal units, ``tau_e = M = c = 1``, temperatures in kelvin.  With
``--units cgs`` inputs and outputs are CGS-Gaussian and converted at the
boundary.  ``hbar`` and ``k_B`` default to their physical values in the chosen
system; ``--hbar`` / ``--kB`` override them (in internal units) for model
studies such as ``hbar = k_B = 1``.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import traceback
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .core import PhysicalConstants, UnitSystem, constants_from_config, load_config
from .errors import ConfigurationError, DomainError, RadReactError
from .io import RunManifest, emit_columns, write_json

__all__ = ["main", "dispatch", "build_parser"]

COMMANDS = ("spectrum", "response", "correlate", "trajectory", "radiate", "relativistic", "brownian",
            "microbath", "verify")

# pulse and bath parameters that carry dimensions
PULSE_DIMS = {"t0": "time", "sigma": "time", "f0": "force", "omega": "frequency", "t_on": "time",
              "plateau": "time", "ramp": "time", "phase": "dimensionless"}
BATH_DIMS = {"zeta": "friction", "Omega": "frequency", "coupling": "mass"}
VELOCITY_SQ = (0, 2, -2)
CORR_KINDS = {"force": "force_sym", "force_commutator": "force_comm", "position": "position_sym",
              "position_commutator": "position_comm"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as exit code 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _range(text):
    """``a:b:n`` -> ``numpy.linspace(a, b, n)``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if n < 1:
        raise argparse.ArgumentTypeError("count must be >= 1")
    return (a, b, n)


def _span(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected start:stop, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not b > a:
        raise argparse.ArgumentTypeError("stop must exceed start")
    return (a, b)


def _common(p):
    g = p.add_argument_group("global options")
    g.add_argument("--units", choices=("cgs", "reduced"), default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--out-dir", default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS)
    g.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    g.add_argument("--stem", default=argparse.SUPPRESS, help="output file stem (default: command name)")
    g.add_argument("--hbar", type=float, default=argparse.SUPPRESS, help="override hbar (internal units)")
    g.add_argument("--kB", type=float, default=argparse.SUPPRESS, help="override k_B (internal units)")


GLOBAL_DEFAULTS = {"units": "reduced", "seed": 0, "out_dir": ".", "config": None, "quiet": False,
                   "stem": None, "hbar": None, "kB": None}


def _physics(p, K=True, bath=False):
    p.add_argument("--M", type=float, default=None, help="observed mass (default: electron)")
    p.add_argument("--tau-e", type=float, default=None, help="radiation time (default: electron)")
    if K:
        p.add_argument("--K", type=float, default=0.0, help="spring constant")
    if bath:
        p.add_argument("--bath", default="blackbody",
                       help="ohmic:zeta=Z | blackbody[:Omega=W,coupling=A] | tabulated:path=FILE")


def build_parser():
    parser = _Parser(prog="radreact", description="Radiation-reaction scenario runner.")
    parser.add_argument("--version", action="version", version=f"radreact {__version__}")
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="spectral distribution and mu on the real axis")
    _common(p)
    _physics(p, K=False, bath=True)
    p.add_argument("--omega", type=_range, default=(0.0, 10.0, 201))

    p = sub.add_parser("response", help="susceptibility on the real axis plus pole report")
    _common(p)
    _physics(p, bath=True)
    p.add_argument("--model", choices=("fo", "al", "general"), default="fo")
    p.add_argument("--m-bare", type=float, default=None, help="bare mass for --model general")
    p.add_argument("--omega", type=_range, default=(0.0, 10.0, 201))

    p = sub.add_parser("correlate", help="equilibrium correlation functions")
    _common(p)
    _physics(p, bath=True)
    p.add_argument("--kind", choices=("force", "force_commutator", "position", "position_commutator"),
                   default="force")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--lags", type=_range, default=(0.1, 10.0, 100))
    p.add_argument("--classical", action="store_true", help="hbar -> 0 limit")
    p.add_argument("--cutoff", type=float, default=None, help="frequency cutoff for quantum position ACF")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trajectory", help="deterministic radiation-reaction trajectory")
    _common(p)
    _physics(p)
    p.add_argument("--equation", choices=("al", "al-regular", "fo", "cutoff"), default="fo")
    p.add_argument("--pulse", default="gaussian:t0=5,sigma=0.5,f0=1e-3")
    p.add_argument("--omega-cutoff", type=float, default=None)
    p.add_argument("--allow-negative-bare-mass", action="store_true")
    p.add_argument("--tspan", type=_span, default=(0.0, 100.0))
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--n-out", type=int, default=2001)

    p = sub.add_parser("radiate", help="radiated energy of a compact force pulse")
    _common(p)
    _physics(p, K=False)
    p.add_argument("--pulse", default="capacitor:f0=1e-2,t_on=10,plateau=200,ramp=10")
    p.add_argument("--n-out", type=int, default=4001)

    p = sub.add_parser("relativistic", help="charge crossing a field gap")
    _common(p)
    p.add_argument("--E", type=float, default=2e-7, help="field along the motion inside the gap")
    p.add_argument("--B", type=float, default=0.0, help="uniform magnetic field along z")
    p.add_argument("--entry-speed", type=float, default=0.01, help="entry speed")
    p.add_argument("--gap", type=float, default=40.0)
    p.add_argument("--ramp", type=float, default=20.0, help="edge transit time at the entry speed")
    p.add_argument("--no-reaction", action="store_true", help="drop the radiation-reaction force")

    p = sub.add_parser("brownian", help="Ohmic Langevin ensemble and diffusion constant")
    _common(p)
    p.add_argument("--bath", default="ohmic:zeta=1")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--n-traj", type=int, default=1000)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=50.0)
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--per-trajectory", action="store_true", help="also write x(t) for every member")

    p = sub.add_parser("microbath", help="finite oscillator bath simulation")
    _common(p)
    p.add_argument("--bath", default="ohmic:zeta=1")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--n-osc", type=int, default=1000)
    p.add_argument("--omega-max", type=float, default=100.0)
    p.add_argument("--n-traj", type=int, default=200)
    p.add_argument("--dt", type=float, default=0.1, help="output sampling interval")
    p.add_argument("--tmax", type=float, default=60.0)
    p.add_argument("--max-lag", type=float, default=5.0)
    p.add_argument("--per-trajectory", action="store_true")

    p = sub.add_parser("verify", help="run the oracle suite and print a pass/fail table")
    _common(p)
    p.add_argument("--quick", action="store_true", help="desk-scale ensembles")
    p.add_argument("--only", type=int, nargs="*", default=None, help="check numbers to run")
    return parser


# ---------------------------------------------------------------------------


class Context:
    """Resolved units, constants and output location for one run."""

    def __init__(self, args, parser_cfg):
        self.args = args
        base = constants_from_config(parser_cfg)
        self.units = UnitSystem.preset(args.units, base)
        self.reduced_units = UnitSystem.reduced(base)
        # internal units are always the reduced system, where e, c and M are exact by construction
        conv = base.in_units(self.reduced_units)
        self.internal = PhysicalConstants(e=math.sqrt(1.5), c=1.0, hbar=conv.hbar, k=conv.k, M=1.0)
        self.hbar = args.hbar if args.hbar is not None else self.internal.hbar
        self.k_B = args.kB if args.kB is not None else self.internal.k
        self.out_dir = Path(args.out_dir)
        self.stem = args.stem or args.command
        self.cgs = args.units == "cgs"

    def inp(self, value, dim):
        """User value -> internal units."""
        if value is None or not self.cgs:
            return value
        return self.reduced_units.to_internal(value, dim)

    def out(self, value, dim):
        if not self.cgs:
            return value
        return self.reduced_units.to_cgs(np.asarray(value, dtype=float), dim)

    def M(self):
        M = getattr(self.args, "M", None)
        return self.inp(M, "mass") if M is not None else self.internal.M

    def tau_e(self):
        tau = getattr(self.args, "tau_e", None)
        return self.inp(tau, "time") if tau is not None else self.internal.tau_e

    def bath(self, text, M=None, tau_e=None):
        from .bath import parse_bath

        dims = {k: (lambda v, d=d: self.inp(v, d)) for k, d in BATH_DIMS.items()}
        return parse_bath(text, M if M is not None else self.M(), tau_e if tau_e is not None else self.tau_e(),
                          dims)

    def pulse(self, text):
        from .forces import parse_pulse

        if not self.cgs:
            return parse_pulse(text)
        kind, _, rest = text.partition(":")
        items = []
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, val = item.partition("=")
            if eq and key.strip() in PULSE_DIMS:
                try:
                    val = repr(self.inp(float(val), PULSE_DIMS[key.strip()]))
                except ValueError:
                    pass
            items.append(f"{key}={val}" if eq else item)
        return parse_pulse(kind + ":" + ",".join(items))

    def path(self, suffix):
        return self.out_dir / f"{self.stem}{suffix}"

    def log(self, msg):
        if not self.args.quiet:
            print(msg)


def _grid(spec):
    a, b, n = spec
    return np.linspace(a, b, n)


def _emit(ctx, manifest, suffix, columns, arrays, meta=None):
    paths = emit_columns(ctx.path(suffix), columns, arrays, meta)
    for pth in paths:
        manifest.add_output(pth)
    ctx.log(f"wrote {paths[0]}")
    return paths


def _json(ctx, manifest, suffix, obj):
    pth = write_json(ctx.path(suffix), obj)
    manifest.add_output(pth)
    ctx.log(f"wrote {pth}")
    return pth


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(ctx, m):
    from .bath import mu_boundary

    a = ctx.args
    spec = ctx.bath(a.bath)
    w = ctx.inp(_grid(a.omega), "frequency")
    mu = np.array([mu_boundary(x, spec) for x in w])
    _emit(ctx, m, ".csv", ["omega", "Re_mu", "Im_mu_at_omega_plus_i0"],
          [ctx.out(w, "frequency"), ctx.out(mu.real, "friction"), ctx.out(mu.imag, "friction")],
          {"bath": spec.describe(), "units": a.units})
    return 0


def cmd_response(ctx, m):
    from .errors import UnsupportedError
    from .response import Susceptibility, pole_diagnostics

    a = ctx.args
    M, tau, K = ctx.M(), ctx.tau_e(), ctx.inp(a.K, "spring")
    if a.model == "fo":
        sus = Susceptibility.ford_oconnell(M, K, tau)
    elif a.model == "al":
        sus = Susceptibility.abraham_lorentz(M, K, tau)
    else:
        spec = ctx.bath(a.bath, M, tau)
        if a.m_bare is not None:
            m_bare = ctx.inp(a.m_bare, "mass")
        else:
            from .core import bare_mass

            m_bare = bare_mass(M, getattr(spec, "Omega", 1.0 / tau), tau) if spec.kind == "blackbody" else M
        sus = Susceptibility.general(m_bare, K, spec)
    w = ctx.inp(_grid(a.omega), "frequency")
    alpha = np.array([sus(x) for x in w])
    _emit(ctx, m, ".csv", ["omega", "Re_alpha", "Im_alpha"],
          [ctx.out(w, "frequency"), ctx.out(alpha.real, "susceptibility"), ctx.out(alpha.imag, "susceptibility")],
          {"susceptibility": sus.describe(), "units": a.units})
    try:
        rep = pole_diagnostics(sus).as_dict()
        if ctx.cgs:
            for pole in rep["poles"]:
                pole["re"] = float(ctx.out(pole["re"], "frequency"))
                pole["im"] = float(ctx.out(pole["im"], "frequency"))
    except UnsupportedError as exc:
        rep = {"poles": [], "note": str(exc)}
    _json(ctx, m, ".poles.json", rep)
    m.extra["n_upper_poles"] = sum(p["half_plane"] == "upper" for p in rep["poles"])
    return 0


def cmd_correlate(ctx, m):
    from .correlations import correlation_curve
    from .response import Susceptibility

    a = ctx.args
    M, tau, K = ctx.M(), ctx.tau_e(), ctx.inp(a.K, "spring")
    hbar = 0.0 if a.classical else ctx.hbar
    lags = ctx.inp(_grid(a.lags), "time")
    kw = {"T": a.temperature, "hbar": hbar, "k_B": ctx.k_B, "workers": a.workers}
    if a.kind.startswith("force"):
        kw["spectral"] = ctx.bath(a.bath, M, tau)
        dim = "force_correlation"
    else:
        kw["susceptibility"] = Susceptibility.ford_oconnell(M, K, tau)
        if a.cutoff is not None:
            kw["cutoff"] = ctx.inp(a.cutoff, "frequency")
        dim = "position_correlation"
    curve = correlation_curve(CORR_KINDS[a.kind], lags, **kw)
    meta = {"kind": a.kind, "units": a.units, "T": a.temperature, "hbar": hbar, "k_B": ctx.k_B,
            "delta_coefficient": float(ctx.out(curve.delta, "force_psd")) if curve.delta is not None else None,
            **{k: v for k, v in curve.meta.items() if isinstance(v, (int, float, str, bool, type(None)))}}
    _emit(ctx, m, ".csv", ["t", "value", "abs_error_estimate"],
          [ctx.out(curve.t, "time"), ctx.out(curve.values, dim), ctx.out(curve.abserr, dim)], meta)
    return 0


def _trajectory_columns(ctx, tr):
    pw = tr.extra.get("radiated_power", np.zeros_like(tr.t))
    return (["t", "x", "v", "a", "f", "radiated_power"],
            [ctx.out(tr.t, "time"), ctx.out(tr.x, "length"), ctx.out(tr.v, "velocity"),
             ctx.out(tr.a, "acceleration"), ctx.out(tr.f, "force"), ctx.out(pw, "power")])


def cmd_trajectory(ctx, m):
    from . import dynamics as dyn

    a = ctx.args
    M, tau, K = ctx.M(), ctx.tau_e(), ctx.inp(a.K, "spring")
    f = ctx.pulse(a.pulse)
    tspan = tuple(ctx.inp(np.array(a.tspan), "time"))
    x0, v0 = ctx.inp(a.x0, "length"), ctx.inp(a.v0, "velocity")
    a0 = ctx.inp(a.a0, "acceleration")
    common = {"M": M, "tau_e": tau, "n_out": a.n_out, "rtol": a.tol}
    if a.equation == "al":
        if K:
            raise DomainError("the Abraham-Lorentz integrator is for the free particle (K = 0)")
        tr = dyn.integrate_abraham_lorentz(f, x0, v0, a0, tspan, **common)
    elif a.equation == "al-regular":
        if K:
            raise DomainError("the Abraham-Lorentz integrator is for the free particle (K = 0)")
        tr = dyn.integrate_abraham_lorentz_regular(f, x0, v0, tspan, **common)
    elif a.equation == "fo":
        tr = dyn.integrate_fo_oscillator(f, K, x0, v0, tspan, **common)
    else:
        Omega = ctx.inp(a.omega_cutoff, "frequency") if a.omega_cutoff is not None else 1.0 / tau
        tr = dyn.integrate_finite_cutoff(f, Omega, K, x0, v0, a0, tspan,
                                         allow_negative_bare_mass=a.allow_negative_bare_mass, **common)
    cols, arrs = _trajectory_columns(ctx, tr)
    meta = {"equation": a.equation, "pulse": f.describe(), "units": a.units,
            **{k: v for k, v in tr.meta.items() if isinstance(v, (int, float, str, bool))}}
    _emit(ctx, m, ".csv", cols, arrs, meta)
    m.extra["runaway"] = bool(tr.runaway)
    if "growth_rate" in tr.meta:
        m.extra["growth_rate"] = float(ctx.out(tr.meta["growth_rate"], "frequency"))
    return 0


def cmd_radiate(ctx, m):
    from .dynamics import radiated_energy

    a = ctx.args
    M, tau = ctx.M(), ctx.tau_e()
    f = ctx.pulse(a.pulse)
    r = radiated_energy(f, M, tau, n_profile=a.n_out)
    _emit(ctx, m, ".csv", ["t", "f", "v", "larmor_integrand", "radiated_power"],
          [ctx.out(r.t, "time"), ctx.out(np.asarray(f.f(r.t)) * np.ones_like(r.t), "force"),
           ctx.out(r.velocity, "velocity"), ctx.out(r.larmor_integrand, "power"), ctx.out(r.power, "power")],
          {"pulse": f.describe(), "units": a.units})
    summary = {"total_radiated_energy": float(ctx.out(r.total, "energy")),
               "abs_error_estimate": float(ctx.out(r.abserr, "energy")), "units": a.units}
    _json(ctx, m, ".summary.json", summary)
    m.extra.update(summary)
    return 0


def cmd_relativistic(ctx, m):
    from .relativistic import capacitor_scenario

    a = ctx.args
    c = ctx.internal
    res = capacitor_scenario(ctx.inp(a.E, "efield"), ctx.inp(a.gap, "length"), ctx.inp(a.entry_speed, "velocity"),
                             ctx.inp(a.ramp, "time"), e=c.e, M=c.M, c=c.c,
                             tau_e=0.0 if a.no_reaction else c.tau_e,
                             B=(0.0, 0.0, ctx.inp(a.B, "bfield")))
    tr = res.trajectory
    g = tr.gamma
    shell = np.abs(tr.g ** 2 - np.sum(tr.p ** 2, axis=1) / c.c ** 2 - 1.0)
    speed = np.linalg.norm(tr.v, axis=1)
    _emit(ctx, m, ".csv", ["t", "tau", "x", "v", "gamma", "mass_shell_residual", "radiated_power_proxy"],
          [ctx.out(tr.t, "time"), ctx.out(tr.tau, "time"), ctx.out(tr.x[:, 0], "length"),
           ctx.out(speed, "velocity"), g, shell, ctx.out(tr.power, "power")],
          {"units": a.units, "field": "gated E along x, uniform B along z"})
    s = res.summary()
    energy_keys = ("entry_burst", "exit_burst", "total_radiated", "larmor_nonrelativistic")
    for k in energy_keys:
        s[k] = float(ctx.out(s[k], "energy"))
    for k in ("plateau_max_abs_power", "peak_abs_power"):
        s[k] = float(ctx.out(s[k], "power"))
    _json(ctx, m, ".summary.json", s)
    m.extra.update({"outcome": res.outcome, "mass_shell_residual": s["mass_shell_residual"]})
    return 0


def cmd_brownian(ctx, m):
    from .bath import OhmicSpectrum
    from .stochastic import estimate_diffusion, simulate_langevin_ohmic

    a = ctx.args
    mass = ctx.inp(a.mass, "mass")
    spec = ctx.bath(a.bath, M=mass)
    if not isinstance(spec, OhmicSpectrum):
        raise DomainError("brownian simulates an Ohmic bath; use --bath ohmic:zeta=Z")
    ens = simulate_langevin_ohmic(spec.zeta, a.temperature, mass, K=ctx.inp(a.K, "spring"), n_traj=a.n_traj,
                                  tspan=(0.0, ctx.inp(a.tmax, "time")), dt=ctx.inp(a.dt, "time"), seed=a.seed,
                                  k_B=ctx.k_B, record_every=a.record_every)
    summary = {"seed": a.seed, "n_traj": a.n_traj,
               "velocity_variance": float(ctx.out(ens.velocity_variance(), VELOCITY_SQ)),
               "kT_over_m": float(ctx.out(ctx.k_B * a.temperature / mass, VELOCITY_SQ)), "units": a.units}
    if a.K == 0:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            d = estimate_diffusion(ens)
        for w in caught:
            ctx.log(f"warning: {w.message}")
        summary.update({"D": float(ctx.out(d.D, "diffusion")), "ci": float(ctx.out(d.ci, "diffusion")),
                        "D_einstein": float(ctx.out(ctx.k_B * a.temperature / spec.zeta, "diffusion")),
                        "fit_window": [float(ctx.out(w, "time")) for w in d.window], "warnings": d.warnings})
    _json(ctx, m, ".summary.json", summary)
    if a.per_trajectory:
        cols = ["t"] + [f"x{i}" for i in range(ens.n_traj)]
        _emit(ctx, m, ".trajectories.csv", cols,
              [ctx.out(ens.t, "time")] + [ctx.out(ens.x[i], "length") for i in range(ens.n_traj)])
    m.extra.update({k: summary[k] for k in ("D", "ci") if k in summary})
    ctx.log(", ".join(f"{k}={v}" for k, v in summary.items() if k in ("D", "ci", "D_einstein", "n_traj")))
    return 0


def cmd_microbath(ctx, m):
    from .microbath import Microbath, MicrobathConfig

    a = ctx.args
    mass = ctx.inp(a.mass, "mass")
    spec = ctx.bath(a.bath, M=mass)
    cfg = MicrobathConfig(spec, a.n_osc, ctx.inp(a.omega_max, "frequency"), T=a.temperature, mass=mass,
                          K=ctx.inp(a.K, "spring"), k_B=ctx.k_B)
    tmax, dt = ctx.inp(a.tmax, "time"), ctx.inp(a.dt, "time")
    n_out = int(round(tmax / dt)) + 1
    run = Microbath(cfg).run((0.0, tmax), n_out=n_out, n_real=a.n_traj, seed=a.seed)
    max_lag = min(int(round(ctx.inp(a.max_lag, "time") / dt)), n_out - 1)
    acf = run.velocity_acf(max_lag)
    lags = dt * np.arange(max_lag + 1)
    _emit(ctx, m, ".vacf.csv", ["t", "velocity_acf"], [ctx.out(lags, "time"), ctx.out(acf, VELOCITY_SQ)])
    summary = {"seed": a.seed, "n_traj": a.n_traj, "n_osc": a.n_osc, "energy_drift": run.max_energy_drift(),
               "recurrence_time": float(ctx.out(cfg.recurrence_time, "time")), "scheme": run.meta["scheme"],
               "units": a.units}
    if spec.kind == "ohmic":
        ref = ctx.k_B * a.temperature / mass * np.exp(-spec.zeta * lags / mass)
        scale = ctx.k_B * a.temperature / mass if a.temperature > 0 else 1.0
        summary["langevin_vacf_sup_error"] = float(np.max(np.abs(acf - ref)) / scale)
    _json(ctx, m, ".summary.json", summary)
    if a.per_trajectory:
        cols = ["t"] + [f"x{i}" for i in range(run.x.shape[0])]
        _emit(ctx, m, ".trajectories.csv", cols,
              [ctx.out(run.t, "time")] + [ctx.out(run.x[i], "length") for i in range(run.x.shape[0])])
    m.extra.update({k: summary[k] for k in ("energy_drift", "langevin_vacf_sup_error") if k in summary})
    return 0


def cmd_verify(ctx, m):
    from .verify import format_table, run_suite

    a = ctx.args
    results = run_suite(quick=a.quick, only=set(a.only) if a.only else None,
                        progress=None if a.quiet else (lambda r: print(r.line(), flush=True)))
    if not a.quiet:
        print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    else:
        format_table(results)
    m.checks = {f"{r.number}:{r.name}": r.as_dict() for r in results}
    return 0 if all(r.passed for r in results) else 2


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# ---------------------------------------------------------------------------


def _config_value(sub, dest, raw):
    if dest in GLOBAL_DEFAULTS:
        if dest == "seed":
            return int(raw)
        if dest == "quiet":
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if dest in ("hbar", "kB"):
            return float(raw)
        return raw.strip()
    for action in sub._actions:
        if action.dest == dest:
            if action.nargs == 0:  # store_true
                return raw.strip().lower() in ("1", "true", "yes", "on")
            try:
                return action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigurationError(f"config key {dest!r}: {exc}") from exc
    raise ConfigurationError(f"config key {dest!r} is not an option of '{sub.prog}'")


def _parse(argv):
    """Parse ``argv``; values from ``--config`` become defaults so explicit flags win."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        values = {}
        sections = [s for s in ("run", args.command) if cfg.has_section(s)]
        for key, raw in cfg.defaults().items():
            values[key] = raw
        for section in sections:
            for key, raw in cfg.items(section):
                if key not in cfg.defaults() or cfg.get(section, key) != cfg.defaults()[key]:
                    values[key] = raw
        defaults = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            if dest == "config":
                continue
            defaults[dest] = _config_value(sub, dest, raw)
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.units not in ("cgs", "reduced"):
        raise ConfigurationError(f"units must be cgs or reduced, got {args.units!r}")
    return args, cfg


def dispatch(argv=None) -> int:
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, cfg = _parse(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (RadReactError, configparser.Error) as exc:
        print(f"radreact: configuration error: {exc}", file=sys.stderr)
        return 3
    echo = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()}
    manifest = RunManifest(args.command, echo)
    out_dir = Path(args.out_dir)
    code = 2
    ctx = None
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        ctx = Context(args, cfg)
        manifest.extra["internal_constants"] = {"e": ctx.internal.e, "c": ctx.internal.c, "M": ctx.internal.M,
                                                "hbar": ctx.hbar, "k_B": ctx.k_B}
        code = HANDLERS[args.command](ctx, manifest)
        manifest.finish(code, None if code == 0 else "one or more checks failed")
    except RadReactError as exc:
        code = exc.exit_code
        manifest.finish(code, f"{type(exc).__name__}: {exc}")
        print(f"radreact: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        code = 2
        manifest.finish(code, f"I/O error: {exc}")
        print(f"radreact: I/O error: {exc}", file=sys.stderr)
    except Exception as exc:  # unexpected failure still gets a manifest
        code = 2
        manifest.finish(code, f"{type(exc).__name__}: {exc}")
        print(traceback.format_exc(), file=sys.stderr)
    try:
        stem = args.stem or args.command
        mpath = manifest.write(out_dir / f"{stem}.manifest.json")
        if not args.quiet:
            print(f"manifest {mpath}")
    except OSError as exc:
        print(f"radreact: could not write manifest: {exc}", file=sys.stderr)
        code = code or 2
    return code


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
