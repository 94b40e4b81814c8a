"""Physical inputs, derived rates and modulation settings.

All rates are angular (rad/s). Values quoted in ordinary frequency are
converted when a config is read; the cavity decay rate of the reference
parameter set is taken as ``kappa = 1.34e6 rad/s`` (no factor 2*pi).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .constants import C_LIGHT, HBAR, K_B
from .errors import ConfigError, InvalidParameterError

TWO_PI = 2.0 * math.pi

KAPPA_NOTE = "kappa of the reference set read as 1.34e6 rad/s (angular, no 2*pi factor)"


@dataclass(frozen=True)
class SystemParams:
    mass: float
    omega_m: float
    gamma_m: float
    temperature: float
    detuning: float
    cavity_length: float
    kappa: float
    laser_wavelength: float
    laser_power: float

    def __post_init__(self):
        for name in ("mass", "omega_m", "gamma_m", "cavity_length", "kappa",
                     "laser_wavelength", "laser_power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")
        if not (math.isfinite(self.temperature) and self.temperature >= 0):
            raise InvalidParameterError(f"temperature must be >= 0, got {self.temperature!r}")
        if not math.isfinite(self.detuning):
            raise InvalidParameterError("detuning must be finite")

    @property
    def quality_factor(self) -> float:
        return self.omega_m / self.gamma_m

    @property
    def markov_valid(self) -> bool:
        """Brownian noise is treated as white only for high-Q oscillators."""
        return self.quality_factor > 100.0


@dataclass(frozen=True)
class DerivedParams:
    omega_c: float
    omega_l: float
    g0: float
    drive: float
    n_thermal: float
    coth_factor: float


@dataclass(frozen=True)
class ModulationSpec:
    epsilon: float = 0.0
    omega1: float = 0.0
    eta: float = 0.0
    omega2: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise InvalidParameterError(f"epsilon must lie in [0, 1), got {self.epsilon!r}")
        if not (self.eta >= 0.0 and math.isfinite(self.eta)):
            raise InvalidParameterError(f"eta must be >= 0, got {self.eta!r}")
        if self.omega1 < 0 or self.omega2 < 0:
            raise InvalidParameterError("modulation frequencies must be non-negative")
        if self.epsilon > 0 and self.omega1 <= 0:
            raise InvalidParameterError("epsilon > 0 needs omega1 > 0")
        if self.eta > 0 and self.omega2 <= 0:
            raise InvalidParameterError("eta > 0 needs omega2 > 0")
        if self.epsilon > 0 and self.eta > 0 and not math.isclose(
                self.omega1, self.omega2, rel_tol=1e-12):
            raise InvalidParameterError(
                "both modulations active: omega1 must equal omega2 (one common period)")
        phi = math.fmod(self.phi, TWO_PI) % TWO_PI
        object.__setattr__(self, "phi", 0.0 if phi >= TWO_PI else phi)

    @property
    def active(self) -> bool:
        return self.epsilon > 0 or self.eta > 0

    @property
    def omega(self) -> float:
        """Common modulation frequency defining the period of the asymptotic orbit."""
        if self.epsilon > 0:
            return self.omega1
        if self.eta > 0:
            return self.omega2
        return self.omega1 or self.omega2

    @property
    def period(self) -> float:
        om = self.omega
        return TWO_PI / om if om > 0 else float("nan")

    @classmethod
    def single(cls, epsilon, omega):
        return cls(epsilon=epsilon, omega1=omega, omega2=omega)

    @classmethod
    def double(cls, epsilon, eta, omega, phi):
        return cls(epsilon=epsilon, omega1=omega, eta=eta, omega2=omega, phi=phi)


def reference_system(**overrides) -> SystemParams:
    """Reference set: 150 pg mirror at 1 MHz, 25 mm cavity, 10 mW at 1064 nm, 0.1 K."""
    omega_m = TWO_PI * 1e6
    values = dict(
        mass=150e-12,
        omega_m=omega_m,
        gamma_m=TWO_PI * 1.0,
        temperature=0.1,
        detuning=omega_m,
        cavity_length=25e-3,
        kappa=1.34e6,
        laser_wavelength=1064e-9,
        laser_power=10e-3,
    )
    values.update(overrides)
    return SystemParams(**values)


def thermal_factors(omega_m: float, temperature: float) -> tuple[float, float]:
    """Return ``(n_thermal, coth(hbar*omega/(2 k_B T)))``."""
    if temperature == 0.0:
        return 0.0, 1.0
    x = HBAR * omega_m / (K_B * temperature)
    if x > 700.0:
        return 0.0, 1.0
    n = 1.0 / math.expm1(x)
    return n, 1.0 / math.tanh(0.5 * x)


def derive(params: SystemParams) -> DerivedParams:
    if not params.markov_valid:
        warnings.warn(
            f"quality factor {params.quality_factor:.3g} <= 100: Markovian Brownian noise "
            "is not a good approximation", RuntimeWarning, stacklevel=2)
    omega_c = TWO_PI * C_LIGHT / params.laser_wavelength
    omega_l = omega_c - params.detuning
    if omega_l <= 0:
        raise InvalidParameterError("laser frequency omega_c - detuning must be positive")
    g0 = omega_c / params.cavity_length * math.sqrt(HBAR / (params.mass * params.omega_m))
    drive = math.sqrt(2.0 * params.kappa * params.laser_power / (HBAR * omega_l))
    n_th, coth = thermal_factors(params.omega_m, params.temperature)
    return DerivedParams(omega_c=omega_c, omega_l=omega_l, g0=g0, drive=drive,
                         n_thermal=n_th, coth_factor=coth)


# ---------------------------------------------------------------- config

_SYSTEM_FIELDS = {
    "mass": ("kg",),
    "omega_m": ("hz", "rad_s"),
    "gamma_m": ("hz", "rad_s"),
    "temperature": ("k",),
    "detuning": ("hz", "rad_s", "over_omega_m"),
    "cavity_length": ("m",),
    "kappa": ("hz", "rad_s"),
    "laser_wavelength": ("m",),
    "laser_power": ("w",),
}

_MOD_FIELDS = {
    "epsilon": ("",),
    "eta": ("",),
    "omega1": ("hz", "rad_s", "over_omega_m"),
    "omega2": ("hz", "rad_s", "over_omega_m"),
    "phi": ("rad", "over_pi"),
}

RUN_DEFAULTS = {
    "n_samples": 512,
    "rtol": 1e-9,
    "settle_tol": 1e-8,
    "min_settle_periods": 20,
    "max_settle_periods": 2000,
    "drift_coupling": "quadrature",
    "interpolation": "spline",
    "discord_measured": "cavity",
    "workers": 1,
    "omega_range": [1.0, 3.0],
    "epsilon_range": [0.0, 0.5],
    "grid_shape": [41, 26],
    "phase_points": 64,
}


@dataclass(frozen=True)
class Config:
    system: SystemParams = field(default_factory=reference_system)
    modulation: ModulationSpec = field(default_factory=ModulationSpec)
    run: dict = field(default_factory=lambda: dict(RUN_DEFAULTS))
    unit_notes: tuple = (KAPPA_NOTE,)

    def with_modulation(self, modulation: ModulationSpec) -> "Config":
        return replace(self, modulation=modulation)

    def with_run(self, **kwargs) -> "Config":
        run = dict(self.run)
        run.update(kwargs)
        return replace(self, run=run)

    def to_dict(self) -> dict:
        return {
            "system": asdict(self.system),
            "modulation": asdict(self.modulation),
            "run": dict(self.run),
            "unit_notes": list(self.unit_notes),
        }


def _convert(name, unit, value, omega_m=None):
    if unit in ("hz",):
        return TWO_PI * value
    if unit == "over_omega_m":
        if omega_m is None:
            raise ConfigError(f"{name}_over_omega_m needs omega_m")
        return value * omega_m
    if unit == "over_pi":
        return math.pi * value
    return value


def _parse_block(block, fields, block_name, omega_m=None):
    if not isinstance(block, dict):
        raise ConfigError(f"'{block_name}' must be an object")
    out = {}
    for key, value in block.items():
        matched = None
        for base, units in fields.items():
            for unit in units:
                full = base if unit == "" else f"{base}_{unit}"
                if key == full:
                    matched = (base, unit)
        if matched is None:
            raise ConfigError(f"unknown key '{key}' in '{block_name}'")
        base, unit = matched
        if base in out:
            raise ConfigError(f"'{base}' given more than once in '{block_name}'")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"'{key}' must be a number")
        out[base] = (unit, float(value))
    return out


def parse_config(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"system", "modulation", "run"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    sys_raw = _parse_block(data.get("system", {}), _SYSTEM_FIELDS, "system")
    base = asdict(reference_system())
    omega_m_given = "omega_m" in sys_raw
    if omega_m_given:
        unit, v = sys_raw.pop("omega_m")
        base["omega_m"] = _convert("omega_m", unit, v)
    for name, (unit, v) in sys_raw.items():
        base[name] = _convert(name, unit, v, base["omega_m"])
    if "detuning" not in sys_raw and omega_m_given:
        base["detuning"] = base["omega_m"]
    try:
        system = SystemParams(**base)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc

    mod_raw = _parse_block(data.get("modulation", {}), _MOD_FIELDS, "modulation")
    mod = {name: _convert(name, unit, v, system.omega_m) for name, (unit, v) in mod_raw.items()}
    if "omega2" not in mod and "omega1" in mod:
        mod["omega2"] = mod["omega1"]
    if "omega1" not in mod and "omega2" in mod:
        mod["omega1"] = mod["omega2"]
    try:
        modulation = ModulationSpec(**mod)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc

    run = dict(RUN_DEFAULTS)
    for key, value in data.get("run", {}).items():
        if key not in RUN_DEFAULTS:
            raise ConfigError(f"unknown key '{key}' in 'run'")
        run[key] = value
    if run["drift_coupling"] not in ("quadrature", "printed"):
        raise ConfigError("run.drift_coupling must be 'quadrature' or 'printed'")
    if run["interpolation"] not in ("spline", "lockstep"):
        raise ConfigError("run.interpolation must be 'spline' or 'lockstep'")
    if run["discord_measured"] not in ("cavity", "mirror"):
        raise ConfigError("run.discord_measured must be 'cavity' or 'mirror'")
    if int(run["n_samples"]) < 8:
        raise ConfigError("run.n_samples must be >= 8")
    notes = () if "kappa" in sys_raw else (KAPPA_NOTE,)
    return Config(system=system, modulation=modulation, run=run, unit_notes=notes)


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(data)
