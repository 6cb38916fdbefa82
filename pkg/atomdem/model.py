"""Physical parameter sets and coherent-state photon statistics."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, xlogy

logger = logging.getLogger("atomdem.model")

TAIL_LIMIT = 1e-12
NORM_TOLERANCE = 1e-12

# Seed of the truncation search: n_max ~ m + c*sqrt(m) + c0
_TRUNC_C = 7.5
_TRUNC_C0 = 10.0


class AtomdemError(Exception):
    """Base class for errors raised by the atomdem library."""


class ParameterError(AtomdemError, ValueError):
    """Raised when a physical parameter is out of range."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class TruncationError(AtomdemError, ValueError):
    """Raised when the photon-number cutoff leaves too much Poisson mass behind."""

    def __init__(self, n_max: int, tail: float, minimal_n_max: int):
        self.n_max = n_max
        self.tail = tail
        self.minimal_n_max = minimal_n_max
        super().__init__(
            f"n_max={n_max} leaves tail mass {tail:.3e} >= {TAIL_LIMIT:.0e}; "
            f"smallest admissible n_max is {minimal_n_max}"
        )


class Scheme(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class FieldKind(str, Enum):
    CLASSICAL = "classical"
    QUANTIZED = "quantized"


@dataclass(frozen=True)
class CoherentField:
    """Coherent laser state: Poissonian number distribution of mean m, phase theta.

    ``n_max=None`` picks the cutoff with :func:`auto_truncation`.
    """

    mean_photons: float
    phase: float = 0.0
    n_max: Optional[int] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean_photons) or self.mean_photons < 0:
            raise ParameterError("mean_photons", f"must be finite and >= 0, got {self.mean_photons!r}")
        if not math.isfinite(self.phase):
            raise ParameterError("theta", f"must be finite, got {self.phase!r}")
        if self.n_max is not None and self.n_max < 0:
            raise ParameterError("n_max", f"must be >= 0, got {self.n_max!r}")

    @property
    def cutoff(self) -> int:
        if self.n_max is None:
            return auto_truncation(self.mean_photons)
        return self.n_max

    def weights(self) -> np.ndarray:
        return coherent_weights(self)


@dataclass(frozen=True)
class ClassicalField:
    rabi: complex

    @property
    def kind(self) -> FieldKind:
        return FieldKind.CLASSICAL


@dataclass(frozen=True)
class QuantizedField:
    g: complex
    coherent: CoherentField

    @property
    def kind(self) -> FieldKind:
        return FieldKind.QUANTIZED


Field = Union[ClassicalField, QuantizedField]


@dataclass(frozen=True)
class PhysParams:
    """Parameters of one scheme/field variant.

    All frequencies are angular frequencies; ``gamma`` sets the unit scale.
    ``detuning`` is the coupling-laser detuning of whichever transition the
    scheme drives.
    """

    scheme: Scheme
    field: Field
    detuning: float = 0.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise ParameterError("gamma", f"must be > 0, got {self.gamma!r}")
        if not math.isfinite(self.detuning):
            raise ParameterError("detuning", f"must be finite, got {self.detuning!r}")
        strength = self.field.rabi if isinstance(self.field, ClassicalField) else self.field.g
        if not (math.isfinite(strength.real) and math.isfinite(strength.imag)):
            key = "omega" if isinstance(self.field, ClassicalField) else "g"
            raise ParameterError(key, f"must be finite, got {strength!r}")

    @property
    def kind(self) -> FieldKind:
        return self.field.kind

    @property
    def is_quantized(self) -> bool:
        return isinstance(self.field, QuantizedField)

    def coupling(self, n: Optional[int] = None) -> complex:
        """Coupling strength: Omega, or g*sqrt(n) in photon sector ``n``."""
        if isinstance(self.field, ClassicalField):
            return complex(self.field.rabi)
        if n is None:
            raise ValueError("photon sector n is required for a quantized field")
        return complex(self.field.g) * math.sqrt(n)


@dataclass(frozen=True)
class InitialAtomState:
    """Pure initial atomic state c0|c> + a0|a>."""

    c0: complex = 0j
    a0: complex = 1 + 0j

    def __post_init__(self) -> None:
        norm = abs(self.c0) ** 2 + abs(self.a0) ** 2
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ParameterError("c0/a0", f"|c0|^2 + |a0|^2 must be 1, got {norm!r}")

    @classmethod
    def excited(cls) -> "InitialAtomState":
        return cls(0j, 1 + 0j)

    @classmethod
    def normalized(cls, c0: complex, a0: complex) -> "InitialAtomState":
        """Build a state from amplitudes rescaled to unit norm."""
        norm = math.sqrt(abs(c0) ** 2 + abs(a0) ** 2)
        if norm == 0:
            raise ParameterError("c0/a0", "amplitudes must not both be zero")
        return cls(complex(c0) / norm, complex(a0) / norm)

    def for_scheme(self, scheme: Scheme) -> "InitialAtomState":
        """The lower scheme always starts in |a>."""
        if scheme is Scheme.LOWER and (self.c0 != 0 or self.a0 != 1):
            logger.debug("Lower-level scheme starts in |a>; ignoring c0=%r a0=%r", self.c0, self.a0)
            return InitialAtomState.excited()
        return self


def _log_poisson(n: np.ndarray, m: float) -> np.ndarray:
    return -m + xlogy(n, m) - gammaln(n + 1.0)


def poisson_tail(m: float, n_max: int) -> float:
    """Poisson mass beyond ``n_max``, summed term by term in the log domain."""
    if m == 0:
        return 0.0
    stop = max(n_max + 2, int(math.ceil(m + 40.0 * math.sqrt(m) + 100.0)))
    n = np.arange(n_max + 1, stop, dtype=float)
    return float(np.exp(_log_poisson(n, m)).sum())


def auto_truncation(m: float) -> int:
    """Smallest cutoff whose Poisson tail mass is below TAIL_LIMIT."""
    if m < 0:
        raise ParameterError("mean_photons", f"must be >= 0, got {m!r}")
    if m == 0:
        return 0
    n = int(math.ceil(m + _TRUNC_C * math.sqrt(m) + _TRUNC_C0))
    while poisson_tail(m, n) >= TAIL_LIMIT:
        n += 1
    while n > 0 and poisson_tail(m, n - 1) < TAIL_LIMIT:
        n -= 1
    logger.debug("auto_truncation(m=%g) -> n_max=%d", m, n)
    return n


def coherent_weights(coherent: CoherentField) -> np.ndarray:
    """Number-state amplitudes w_0..w_{n_max} of a coherent state.

    w_n = exp(-m/2) m^(n/2) exp(i n theta) / sqrt(n!), evaluated in the log
    domain.
    """
    m = coherent.mean_photons
    n_max = coherent.cutoff
    tail = poisson_tail(m, n_max)
    if tail >= TAIL_LIMIT:
        raise TruncationError(n_max, tail, auto_truncation(m))
    n = np.arange(n_max + 1, dtype=float)
    magnitude = np.exp(0.5 * _log_poisson(n, m))
    return magnitude * np.exp(1j * n * coherent.phase)


def weight_at(weights: np.ndarray, n: int) -> complex:
    """w_n, zero outside the retained window."""
    if 0 <= n < len(weights):
        return complex(weights[n])
    return 0j
