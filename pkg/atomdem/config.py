"""Run configuration, figure presets and logging setup for atomdem."""

import dataclasses
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, List, Mapping, Optional

from dotenv import dotenv_values

from atomdem.model import (
    AtomdemError,
    ClassicalField,
    CoherentField,
    InitialAtomState,
    PhysParams,
    QuantizedField,
    Scheme,
)

_logger = logging.getLogger("atomdem.config")

# Project root is one level up from this file's directory
PROJECT_ROOT = Path(__file__).resolve().parent.parent
FIGURES_DIR = PROJECT_ROOT / "figures"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
FORMATS = ("csv", "json")
BASES = ("natural", "bare")
VARIANT_CHOICES = ("all", "upper-classical", "upper-quantized", "lower-classical", "lower-quantized")
SWEEP_CHOICES = ("detuning", "omega", "g")

# c0/a0 closer than this to unit norm are rescaled, anything else is rejected
NORM_SLACK = 1e-3


class ConfigError(AtomdemError):
    """One or more configuration keys are unknown or malformed."""

    def __init__(self, errors: List[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def _parse(raw: str) -> Any:
        if raw.strip().lower() in ("", "none", "auto"):
            return None
        return parse(raw)

    return _parse


def _bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _lower(raw: str) -> str:
    return raw.strip().lower()


@dataclass
class RunConfig:
    """Every atomdem setting; frequencies and times in units of gamma."""

    gamma: float = 1.0
    scheme: str = "upper"
    field_kind: str = "classical"
    omega_re: float = 1.0
    omega_im: float = 0.0
    g_re: float = 0.1
    g_im: float = 0.0
    mean_photons: float = 100.0
    theta: float = 0.0
    n_max: Optional[int] = None
    detuning: float = 0.0
    c0_re: float = 0.0
    c0_im: float = 0.0
    a0_re: float = 1.0
    a0_im: float = 0.0
    t_end: Optional[float] = None
    n_points: int = 600
    sweep_param: str = "detuning"
    sweep_min: float = -5.0
    sweep_max: float = 5.0
    sweep_steps: int = 101
    out: Optional[str] = None
    format: str = "csv"
    basis: str = "natural"
    log_level: str = "INFO"
    log_file: Optional[str] = None
    workers: int = 4
    variant: str = "all"
    bandwidth: float = 40.0
    n_modes: int = 4000
    dt: Optional[float] = None
    tolerance: Optional[float] = None
    quick: bool = False

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def parse_mapping(cls, values: Mapping[str, Optional[str]], source: str = "config") -> dict:
        """Typed overrides from raw ``key=value`` strings; unknown keys are errors."""
        overrides = {}
        errors = []
        for raw_key, raw in values.items():
            key = raw_key.strip().lower()
            parse = _PARSERS.get(key)
            if parse is None:
                errors.append(f"{source}: unknown key {raw_key!r}")
                continue
            if raw is None:
                errors.append(f"{source}: key {key!r} has no value")
                continue
            try:
                overrides[key] = parse(raw)
            except ValueError as exc:
                errors.append(f"{source}: {key}={raw!r} is invalid ({exc})")
        if errors:
            raise ConfigError(errors)
        return overrides

    @classmethod
    def from_file(cls, path: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        """Apply a flat key=value file on top of ``base``.

        The file is parsed with python-dotenv but never exported to the
        process environment.
        """
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError([f"config file {path!r} does not exist"])
        values = dotenv_values(config_path)
        _logger.debug("Loaded %d key(s) from %s", len(values), path)
        return (base or cls()).with_overrides(cls.parse_mapping(values, source=str(path)))

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        unknown = [k for k in overrides if k not in _PARSERS]
        if unknown:
            raise ConfigError([f"unknown key {k!r}" for k in unknown])
        return dataclasses.replace(self, **dict(overrides))

    def validate(self) -> List[str]:
        """Validate config and return list of error messages (empty = valid)."""
        errors = []
        finite = {
            name: getattr(self, name)
            for name in (
                "gamma", "omega_re", "omega_im", "g_re", "g_im", "mean_photons", "theta",
                "detuning", "c0_re", "c0_im", "a0_re", "a0_im", "sweep_min",
                "sweep_max", "bandwidth",
            )
        }
        for name, value in finite.items():
            if not math.isfinite(value):
                errors.append(f"{name} must be finite")
        if not self.gamma > 0:
            errors.append("gamma must be > 0")
        if self.scheme not in ("upper", "lower"):
            errors.append(f"scheme '{self.scheme}' must be 'upper' or 'lower'")
        if self.field_kind not in ("classical", "quantized"):
            errors.append(f"field_kind '{self.field_kind}' must be 'classical' or 'quantized'")
        if self.mean_photons < 0:
            errors.append("mean_photons must be >= 0")
        if self.n_max is not None and self.n_max < 0:
            errors.append("n_max must be >= 0")
        if self.t_end is not None and not (math.isfinite(self.t_end) and self.t_end > 0):
            errors.append("t_end must be finite and > 0")
        if self.n_points < 2:
            errors.append("n_points must be >= 2")
        if self.sweep_param not in SWEEP_CHOICES:
            errors.append(f"sweep_param '{self.sweep_param}' must be one of {', '.join(SWEEP_CHOICES)}")
        elif self.sweep_param == "omega" and self.field_kind == "quantized":
            errors.append("sweep_param 'omega' needs field_kind 'classical'")
        elif self.sweep_param == "g" and self.field_kind == "classical":
            errors.append("sweep_param 'g' needs field_kind 'quantized'")
        if self.sweep_steps < 1:
            errors.append("sweep_steps must be >= 1")
        if self.sweep_max < self.sweep_min:
            errors.append("sweep_max must be >= sweep_min")
        if self.format not in FORMATS:
            errors.append(f"format '{self.format}' must be 'csv' or 'json'")
        if self.basis not in BASES:
            errors.append(f"basis '{self.basis}' must be 'natural' or 'bare'")
        if self.log_level not in LOG_LEVELS:
            errors.append(f"log_level '{self.log_level}' is not valid")
        if self.workers < 1:
            errors.append("workers must be >= 1")
        if self.variant not in VARIANT_CHOICES:
            errors.append(f"variant '{self.variant}' must be one of {', '.join(VARIANT_CHOICES)}")
        if not self.bandwidth > 0:
            errors.append("bandwidth must be > 0")
        if self.n_modes < 2:
            errors.append("n_modes must be >= 2")
        if self.dt is not None and not self.dt > 0:
            errors.append("dt must be > 0")
        if self.tolerance is not None and not (math.isfinite(self.tolerance) and self.tolerance > 0):
            errors.append("tolerance must be finite and > 0")
        norm = self.c0_re**2 + self.c0_im**2 + self.a0_re**2 + self.a0_im**2
        if self.scheme == "upper" and abs(norm - 1.0) > NORM_SLACK:
            errors.append(f"c0/a0 must have unit norm, got |c0|^2 + |a0|^2 = {norm:.6g}")
        return errors

    def to_params(self) -> tuple[PhysParams, InitialAtomState]:
        """Build the physics objects; call after validate() returned no errors."""
        if self.field_kind == "classical":
            field = ClassicalField(complex(self.omega_re, self.omega_im))
        else:
            coherent = CoherentField(self.mean_photons, self.theta, self.n_max)
            field = QuantizedField(complex(self.g_re, self.g_im), coherent)
        params = PhysParams(Scheme(self.scheme), field, detuning=self.detuning, gamma=self.gamma)
        if params.scheme is Scheme.LOWER:
            return params, InitialAtomState.excited()
        c0 = complex(self.c0_re, self.c0_im)
        a0 = complex(self.a0_re, self.a0_im)
        return params, InitialAtomState.normalized(c0, a0)

    def sweep_values(self) -> list[float]:
        if self.sweep_steps == 1:
            return [self.sweep_min]
        step = (self.sweep_max - self.sweep_min) / (self.sweep_steps - 1)
        values = [self.sweep_min + i * step for i in range(self.sweep_steps)]
        values[-1] = self.sweep_max
        return values


_PARSERS: dict[str, Callable[[str], Any]] = {
    "gamma": float,
    "scheme": _lower,
    "field_kind": _lower,
    "omega_re": float,
    "omega_im": float,
    "g_re": float,
    "g_im": float,
    "mean_photons": float,
    "theta": float,
    "n_max": _optional(int),
    "detuning": float,
    "c0_re": float,
    "c0_im": float,
    "a0_re": float,
    "a0_im": float,
    "t_end": _optional(float),
    "n_points": int,
    "sweep_param": _lower,
    "sweep_min": float,
    "sweep_max": float,
    "sweep_steps": int,
    "out": _optional(str),
    "format": _lower,
    "basis": _lower,
    "log_level": lambda raw: raw.strip().upper(),
    "log_file": _optional(str),
    "workers": int,
    "variant": _lower,
    "bandwidth": float,
    "n_modes": int,
    "dt": _optional(float),
    "tolerance": _optional(float),
    "quick": _bool,
}


@dataclass(frozen=True)
class Preset:
    """A published figure: shared settings plus one override set per curve."""

    name: str
    title: str
    command: str
    base: Mapping[str, Any]
    curves: Mapping[str, Mapping[str, Any]]

    def curve(self, name: Optional[str] = None) -> dict:
        if name is None:
            name = next(iter(self.curves))
        if name not in self.curves:
            raise ConfigError(
                [f"preset {self.name!r} has no curve {name!r} (choose from {', '.join(self.curves)})"]
            )
        return {**self.base, **self.curves[name]}


_HALF = 1.0 / math.sqrt(2.0)
_UPPER = {"scheme": "upper", "detuning": 0.1, "c0_re": _HALF, "a0_re": _HALF, "t_end": 50.0}
_LOWER = {"scheme": "lower", "detuning": 0.1, "t_end": 50.0}

_UPPER_CLASSICAL_CURVES = {
    "solid": {"omega_re": 0.1},
    "dotted": {"omega_re": 0.2},
    "dashed": {"omega_re": 1.0},
}
_LOWER_CLASSICAL_CURVES = {
    "solid": {"omega_re": 0.1},
    "dotted": {"omega_re": 0.2},
    "dashed": {"omega_re": 1.0},
    "dashdot": {"omega_re": 0.5},
}

# Quantized captions list (g=0.1, m=100) twice; the repeated style is left out
PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("fig2a", "Upper-level scheme, classical field: entropy", "trace",
               {**_UPPER, "field_kind": "classical"}, _UPPER_CLASSICAL_CURVES),
        Preset("fig2b", "Upper-level scheme, quantized field: entropy", "trace",
               {**_UPPER, "field_kind": "quantized", "g_re": 0.1},
               {"solid": {"mean_photons": 100.0}, "dotted": {"mean_photons": 4.0}}),
        Preset("fig3", "Upper-level scheme, classical field: populations", "trace",
               {**_UPPER, "field_kind": "classical"}, _UPPER_CLASSICAL_CURVES),
        Preset("fig4a", "Lower-level scheme, classical field: entropy", "trace",
               {**_LOWER, "field_kind": "classical"}, _LOWER_CLASSICAL_CURVES),
        Preset("fig4b", "Lower-level scheme, quantized field: entropy", "trace",
               {**_LOWER, "field_kind": "quantized"},
               {
                   "solid": {"g_re": 0.1, "mean_photons": 100.0},
                   "dotted": {"g_re": 0.1, "mean_photons": 4.0},
                   "dashdot": {"g_re": 0.5, "mean_photons": 100.0},
               }),
        Preset("fig5", "Lower-level scheme, classical field: dressed populations", "trace",
               {**_LOWER, "field_kind": "classical"}, _LOWER_CLASSICAL_CURVES),
        Preset("fig6", "Lower-level scheme: steady-state entropy versus detuning", "steady",
               {"scheme": "lower", "field_kind": "classical", "sweep_param": "detuning",
                "sweep_min": -5.0, "sweep_max": 5.0, "sweep_steps": 101},
               {"solid": {"omega_re": 0.1}, "dotted": {"omega_re": 1.0}, "dashed": {"omega_re": 5.0}}),
    )
}


def resolve_preset(label: str) -> tuple[Preset, str, dict]:
    """``fig4a`` or ``fig4a:dashed`` -> (preset, curve name, overrides)."""
    name, _, curve = label.partition(":")
    preset = PRESETS.get(name.strip().lower())
    if preset is None:
        raise ConfigError([f"unknown preset {name!r} (choose from {', '.join(PRESETS)})"])
    curve = curve.strip().lower() or next(iter(preset.curves))
    return preset, curve, preset.curve(curve)


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """Configure application logging on stderr, plus a file when requested.

    stdout is reserved for data output.
    """
    logger = logging.getLogger("atomdem")
    logger.setLevel(getattr(logging, level, logging.INFO))

    # Avoid adding duplicate handlers on repeated calls
    if logger.handlers:
        return logger

    formatter = logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    logger.addHandler(console)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
