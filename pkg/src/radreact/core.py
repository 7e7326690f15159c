"""Physical constants, unit systems and derived scenario parameters.

Everything downstream computes in *reduced* units where the radiation-reaction
time ``tau_e`` and the observed mass ``M`` are both 1.  CGS only appears at the
I/O boundary; ``tau_e ~ 6e-24 s`` makes raw-CGS stepping ill-conditioned.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from scipy import constants as _si

from .errors import ConfigurationError, ConstraintViolation, DomainError

__all__ = [
    "PhysicalConstants",
    "UnitSystem",
    "ScenarioParams",
    "OscillatorParameters",
    "DIMENSIONS",
    "derive_tau_e",
    "bare_mass",
    "oscillator_derived",
    "load_config",
    "constants_from_config",
]


def derive_tau_e(e, M, c):
    """Radiation-reaction time ``2 e^2 / (3 M c^3)``."""
    for name, val in (("e", e), ("M", M), ("c", c)):
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val!r}")
    return 2.0 * e * e / (3.0 * M * c ** 3)


def bare_mass(M, Omega, tau_e, allow_negative=False):
    """Bare mass ``M (1 - Omega tau_e)`` left after mass renormalisation.

    Raises :class:`ConstraintViolation` when ``Omega > 1/tau_e`` (negative bare
    mass) unless ``allow_negative`` is set.
    """
    if Omega < 0:
        raise DomainError(f"cutoff frequency must be non-negative, got {Omega!r}")
    if tau_e < 0 or M <= 0:
        raise DomainError("need M > 0 and tau_e >= 0")
    if Omega * tau_e > 1.0 and not allow_negative:
        raise ConstraintViolation(
            f"cutoff Omega={Omega!r} exceeds 1/tau_e={1.0 / tau_e!r}: the bare mass "
            "would be negative (cutoff constraint Omega <= 1/tau_e); "
            "pass allow_negative to override"
        )
    return M * (1.0 - Omega * tau_e)


class OscillatorParameters(NamedTuple):
    omega0: float
    gamma: float
    omega1: float
    overdamped: bool


def oscillator_derived(K, M, tau_e):
    """Natural frequency, damping rate and shifted frequency of the bound electron.

    ``omega0 = sqrt(K/M)``, ``gamma = K tau_e / M`` and
    ``omega1 = sqrt(omega0^2 - gamma^2/4)``.  In the overdamped case
    ``omega1`` holds the magnitude of the (imaginary) root and ``overdamped``
    is set.
    """
    if K < 0:
        raise DomainError(f"spring constant must be >= 0, got {K!r}")
    if M <= 0:
        raise DomainError(f"mass must be > 0, got {M!r}")
    w0sq = K / M
    gamma = K * tau_e / M
    disc = w0sq - 0.25 * gamma * gamma
    return OscillatorParameters(math.sqrt(w0sq), gamma, math.sqrt(abs(disc)), disc < 0)


@dataclass(frozen=True)
class PhysicalConstants:
    """Electron charge magnitude, light speed, hbar, Boltzmann constant and mass.

    Values are in whatever unit system the instance was built for; the default
    constructor gives CGS-Gaussian CODATA values.
    """

    e: float = _si.e * _si.c * 10.0  # esu
    c: float = _si.c * 100.0  # cm/s
    hbar: float = _si.hbar * 1e7  # erg s
    k: float = _si.k * 1e7  # erg/K
    M: float = _si.m_e * 1e3  # g

    def __post_init__(self):
        for name in ("e", "c", "hbar", "k", "M"):
            if not getattr(self, name) > 0:
                raise DomainError(f"constant {name} must be positive")

    @property
    def tau_e(self):
        return derive_tau_e(self.e, self.M, self.c)

    @property
    def radiation_coupling(self):
        """``2 e^2 / 3 c^3``, equal to ``M tau_e``."""
        return 2.0 * self.e ** 2 / (3.0 * self.c ** 3)

    def in_units(self, units: "UnitSystem") -> "PhysicalConstants":
        return PhysicalConstants(
            e=units.to_internal(self.e, "charge"),
            c=units.to_internal(self.c, "velocity"),
            hbar=units.to_internal(self.hbar, "action"),
            k=units.to_internal(self.k, "boltzmann"),
            M=units.to_internal(self.M, "mass"),
        )


# (mass, length, time) exponents; temperature is always kelvin.
DIMENSIONS = {
    "dimensionless": (0, 0, 0),
    "temperature": (0, 0, 0),
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "frequency": (0, 0, -1),
    "velocity": (0, 1, -1),
    "acceleration": (0, 1, -2),
    "jerk": (0, 1, -3),
    "force": (1, 1, -2),
    "force_rate": (1, 1, -3),
    "energy": (1, 2, -2),
    "power": (1, 2, -3),
    "action": (1, 2, -1),
    "boltzmann": (1, 2, -2),
    "spring": (1, 0, -2),
    "friction": (1, 0, -1),
    "charge": (0.5, 1.5, -1),
    "efield": (0.5, -0.5, -1),
    "bfield": (0.5, -0.5, -1),
    "susceptibility": (-1, 0, 2),
    "force_correlation": (2, 2, -4),
    "position_correlation": (0, 2, 0),
    "diffusion": (0, 2, -1),
    "force_psd": (2, 2, -3),
}


@dataclass(frozen=True)
class UnitSystem:
    """Scale factors (CGS value of one internal unit) for time, length, mass."""

    name: str = "cgs"
    time_scale: float = 1.0
    length_scale: float = 1.0
    mass_scale: float = 1.0

    def __post_init__(self):
        if min(self.time_scale, self.length_scale, self.mass_scale) <= 0:
            raise DomainError("unit scales must be positive")

    @classmethod
    def cgs(cls):
        return cls("cgs")

    @classmethod
    def reduced(cls, constants: PhysicalConstants | None = None, length_scale=None):
        """``tau_e = 1``, ``M = 1``; length defaults to ``c tau_e`` so that ``c = 1``."""
        constants = constants or PhysicalConstants()
        tau = constants.tau_e
        if length_scale is None:
            length_scale = constants.c * tau
        return cls("reduced", tau, length_scale, constants.M)

    @classmethod
    def preset(cls, name, constants=None):
        if name == "cgs":
            return cls.cgs()
        if name == "reduced":
            return cls.reduced(constants)
        raise DomainError(f"unknown unit system {name!r} (expected 'cgs' or 'reduced')")

    def scale(self, dim):
        a, b, c = DIMENSIONS[dim] if isinstance(dim, str) else dim
        return self.mass_scale ** a * self.length_scale ** b * self.time_scale ** c

    def to_internal(self, value, dim):
        return value / self.scale(dim)

    def to_cgs(self, value, dim):
        return value * self.scale(dim)


@dataclass(frozen=True)
class ScenarioParams:
    """Parameters of one physical scenario, in internal units.

    Exactly one bath kind is implied: Ohmic when ``zeta`` is given, blackbody
    (cutoff ``Omega``, coupling ``M tau_e``) otherwise.
    """

    M: float = 1.0
    K: float = 0.0
    T: float = 0.0
    tau_e: float = 1.0
    Omega: float | None = None
    zeta: float | None = None
    allow_negative_bare_mass: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.M <= 0:
            raise DomainError("M must be positive")
        if self.K < 0:
            raise DomainError("K must be non-negative")
        if self.T < 0:
            raise DomainError("temperature must be non-negative")
        if self.tau_e < 0:
            raise DomainError("tau_e must be non-negative")
        if self.zeta is not None and self.Omega is not None:
            raise ConfigurationError("give either zeta (Ohmic) or Omega (blackbody), not both")
        if self.zeta is not None and self.zeta < 0:
            raise DomainError("zeta must be non-negative")
        if self.Omega is not None:
            if self.Omega <= 0:
                raise DomainError("Omega must be positive")
            if self.Omega * self.tau_e > 1.0 and not self.allow_negative_bare_mass:
                bare_mass(self.M, self.Omega, self.tau_e)  # raises

    @property
    def bath_kind(self):
        return "ohmic" if self.zeta is not None else "blackbody"

    @property
    def cutoff(self):
        """Blackbody cutoff, defaulting to the maximal admissible ``1/tau_e``."""
        if self.Omega is not None:
            return self.Omega
        if self.tau_e == 0:
            raise DomainError("tau_e = 0 has no default cutoff")
        return 1.0 / self.tau_e

    def oscillator(self):
        return oscillator_derived(self.K, self.M, self.tau_e)

    def with_(self, **kw):
        return replace(self, **kw)


def load_config(path):
    """Read a flat key/value file with optional ``[section]`` headers.

    Keys before the first header land in ``DEFAULT``.  Returns a
    :class:`configparser.ConfigParser`.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (K vs k)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    if not text.lstrip().startswith("["):
        text = "[DEFAULT]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file {path}: {exc}") from exc
    return parser


def constants_from_config(parser, section="constants"):
    """CGS constants with any of ``e, c, hbar, k, M`` overridden from ``section``."""
    base = PhysicalConstants()
    if parser is None or not parser.has_section(section):
        return base
    over = {}
    for key in ("e", "c", "hbar", "k", "M"):
        if parser.has_option(section, key):
            try:
                over[key] = float(parser.get(section, key))
            except ValueError as exc:
                raise ConfigurationError(f"constant {key} is not a number") from exc
    return replace(base, **over)
