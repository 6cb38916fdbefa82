"""Closed-form Weisskopf-Wigner amplitudes and dressed bases.

Upper-level scheme: the laser couples |c> <-> |a> with strength Omega (or
g*sqrt(n) in photon sector n) and |a> decays to |b> at rate gamma. Lower-level
scheme: the laser dresses |c>, |b> while |a> decays into the dressed pair.

All functions accept a scalar time or an array of times and are pure.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from atomdem.model import (
    InitialAtomState,
    ParameterError,
    PhysParams,
    Scheme,
    weight_at,
)

logger = logging.getLogger("atomdem.amplitudes")

# |beta| below CONFLUENT_TOL * gamma uses the repeated-root limit
CONFLUENT_TOL = 1e-9

TimeLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class UpperRoots:
    """Exponents of the coupled |c>, |a> amplitudes."""

    alpha: complex
    beta: complex
    x1: complex
    x2: complex
    y1: complex
    y2: complex
    confluent: bool = False


@dataclass(frozen=True)
class DressedBasis:
    """|chi+> = eps|c> + eta|b>, |chi-> = -conj(eta)|c> + eps|b>."""

    epsilon: float
    eta: complex
    lambda1: float
    lambda2: float

    @property
    def splitting(self) -> float:
        return self.lambda1 - self.lambda2


@dataclass(frozen=True)
class UpperAmplitudes:
    """C(t) and A(t); ``c`` is None in the n = 0 sector where |c, -1> does not exist."""

    c: Optional[np.ndarray]
    a: np.ndarray


@dataclass(frozen=True)
class LowerAmplitudes:
    a: np.ndarray


AmplitudeSet = Union[UpperAmplitudes, LowerAmplitudes]


def _times(t: TimeLike) -> np.ndarray:
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ParameterError("t", "time must be a non-negative offset from switch-on")
    return times


def upper_roots(params: PhysParams, omega_eff: complex) -> UpperRoots:
    """alpha = gamma/2 + i*Delta, beta = sqrt(conj(alpha)^2 - 4|Omega|^2) (principal branch)."""
    alpha = complex(params.gamma / 2.0, params.detuning)
    beta = complex(np.sqrt(alpha.conjugate() ** 2 - 4.0 * abs(omega_eff) ** 2))
    confluent = abs(beta) < CONFLUENT_TOL * params.gamma
    if confluent:
        logger.debug("Confluent exponents at Omega=%r, Delta=%r", omega_eff, params.detuning)
    return UpperRoots(
        alpha=alpha,
        beta=beta,
        x1=-(alpha.conjugate() + beta) / 2.0,
        x2=-(alpha.conjugate() - beta) / 2.0,
        y1=-(alpha + beta) / 2.0,
        y2=-(alpha - beta) / 2.0,
        confluent=confluent,
    )


def _coupled_pair(
    params: PhysParams,
    omega_eff: complex,
    c0: complex,
    a0: complex,
    times: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve dC/dt = -i W A e^{i D t}, dA/dt = -i W* C e^{-i D t} - gamma/2 A.

    Linear in (c0, a0), so sector initial values need not be normalized.
    """
    roots = upper_roots(params, omega_eff)
    if roots.confluent:
        x = -roots.alpha.conjugate() / 2.0
        y = -roots.alpha / 2.0
        c_dot0 = -1j * omega_eff * a0
        a_dot0 = -1j * omega_eff.conjugate() * c0 - params.gamma / 2.0 * a0
        c = (c0 + (c_dot0 - x * c0) * times) * np.exp(x * times)
        a = (a0 + (a_dot0 - y * a0) * times) * np.exp(y * times)
        return c, a

    # The printed coefficient pairs C(0) with Omega in A1 and A(0) with Omega*
    # in C1; the equations of motion give the conjugates used here. Identical
    # for real Omega.
    a1 = -(a0 * roots.x1 - 1j * omega_eff.conjugate() * c0) / roots.beta
    c1 = -(c0 * (roots.x1 + roots.alpha.conjugate()) - 1j * omega_eff * a0) / roots.beta
    c = c1 * np.exp(roots.x1 * times) + (c0 - c1) * np.exp(roots.x2 * times)
    a = a1 * np.exp(roots.y1 * times) + (a0 - a1) * np.exp(roots.y2 * times)
    return c, a


def upper_classical_amplitudes(
    params: PhysParams, init: InitialAtomState, t: TimeLike
) -> UpperAmplitudes:
    if params.scheme is not Scheme.UPPER or params.is_quantized:
        raise ParameterError("scheme", "upper_classical_amplitudes needs the upper scheme with a classical field")
    times = _times(t)
    c, a = _coupled_pair(params, params.coupling(), complex(init.c0), complex(init.a0), times)
    return UpperAmplitudes(c=c, a=a)


def upper_quantized_amplitudes(
    params: PhysParams,
    init: InitialAtomState,
    n: int,
    t: TimeLike,
    weights: Optional[np.ndarray] = None,
) -> UpperAmplitudes:
    """Photon sector n: |c, n-1> and |a, n> coupled by g*sqrt(n).

    Initial values C_n(0) = w_{n-1} C(0) and A_n(0) = w_n A(0), so the
    sectors sum back to the product state (C(0)|c> + A(0)|a>) x sum_n w_n|n>.
    """
    if params.scheme is not Scheme.UPPER or not params.is_quantized:
        raise ParameterError("scheme", "upper_quantized_amplitudes needs the upper scheme with a quantized field")
    if n < 0:
        raise ParameterError("n", f"photon sector must be >= 0, got {n}")
    if weights is None:
        weights = params.field.coherent.weights()
    times = _times(t)
    a_init = weight_at(weights, n) * complex(init.a0)
    if n == 0:
        return UpperAmplitudes(c=None, a=a_init * np.exp(-params.gamma / 2.0 * times))
    c_init = weight_at(weights, n - 1) * complex(init.c0)
    c, a = _coupled_pair(params, params.coupling(n), c_init, a_init, times)
    return UpperAmplitudes(c=c, a=a)


def dressed_basis(detuning: float, omega_eff: complex) -> DressedBasis:
    """Eigenbasis of the laser-coupled (c, b) block [[D', conj(W)], [W, 0]].

    lambda_{1,2} = (D' +/- sqrt(D'^2 + 4|W|^2)) / 2. For W = 0 the labels
    follow the bare states: |chi+> = |c> with lambda1 = D', |chi-> = |b>
    with lambda2 = 0.
    """
    omega_eff = complex(omega_eff)
    coupling_sq = abs(omega_eff) ** 2
    if coupling_sq == 0.0:
        return DressedBasis(epsilon=1.0, eta=0j, lambda1=float(detuning), lambda2=0.0)

    root = math.sqrt(detuning * detuning + 4.0 * coupling_sq)
    # Take the root without cancellation, the other from lambda1*lambda2 = -|W|^2
    if detuning >= 0:
        lambda1 = (detuning + root) / 2.0
        lambda2 = -coupling_sq / lambda1
    else:
        lambda2 = (detuning - root) / 2.0
        lambda1 = -coupling_sq / lambda2
    norm = math.sqrt(lambda1 * lambda1 + coupling_sq)
    return DressedBasis(epsilon=lambda1 / norm, eta=omega_eff / norm, lambda1=lambda1, lambda2=lambda2)


def lower_survival_amplitude(
    params: PhysParams,
    t: TimeLike,
    n: Optional[int] = None,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """A(t) = exp(-gamma t / 2), or w_n exp(-gamma t / 2) in sector n.

    Independent of the coupling field, which only acts after the emission.
    """
    if params.scheme is not Scheme.LOWER:
        raise ParameterError("scheme", "lower_survival_amplitude needs the lower scheme")
    decay = np.exp(-params.gamma / 2.0 * _times(t)).astype(complex)
    if not params.is_quantized:
        return decay
    if n is None:
        raise ParameterError("n", "photon sector is required for a quantized field")
    if weights is None:
        weights = params.field.coherent.weights()
    return weight_at(weights, n) * decay


def lower_amplitudes(params: PhysParams, t: TimeLike, n: Optional[int] = None) -> LowerAmplitudes:
    return LowerAmplitudes(a=lower_survival_amplitude(params, t, n))
