"""Atomic reduced density matrices, von Neumann entropy and steady states.

The global atom-field state is pure, so the atomic entropy equals the field
entropy and measures the atom-photon entanglement directly.

Matrices are stored as the Gram matrix of the field states attached to each
atomic basis state, M[i, j] = <F_i|F_j> (row P, column Q holds <P|Q>). It is
the transpose of rho_A: same spectrum, same diagonal.
"""

import cmath
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np
from scipy.special import entr

from atomdem.amplitudes import (
    DressedBasis,
    dressed_basis,
    lower_survival_amplitude,
    upper_classical_amplitudes,
    upper_quantized_amplitudes,
)
from atomdem.model import (
    AtomdemError,
    ClassicalField,
    InitialAtomState,
    ParameterError,
    PhysParams,
    QuantizedField,
    Scheme,
)

logger = logging.getLogger("atomdem.entropy")

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGEN_CLAMP = 1e-10

UPPER_LABELS = ("c", "a", "b")
LOWER_LABELS = ("a", "chi+", "chi-")
LOWER_BARE_LABELS = ("a", "c", "b")

NATURAL = "natural"
BARE = "bare"

DEFAULT_T_END = 50.0
DEFAULT_POINTS = 600


class ConsistencyError(AtomdemError):
    """An assembled density matrix broke trace, Hermiticity or positivity."""

    def __init__(self, check: str, value: float, time: Optional[float] = None):
        self.check = check
        self.value = value
        self.time = time
        where = "" if time is None else f" at t={time:.6g}"
        super().__init__(f"density matrix failed {check} check{where}: {value:.3e}")


@dataclass(frozen=True, eq=False)
class DensityMatrix3:
    rho: np.ndarray
    basis_labels: tuple[str, str, str]

    def __post_init__(self) -> None:
        if self.rho.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {self.rho.shape}")

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    @property
    def trace(self) -> float:
        return float(self.rho.trace().real)

    def check(self) -> np.ndarray:
        """Raise ConsistencyError on a broken invariant; return descending eigenvalues."""
        return _checked_eigenvalues(self.rho[np.newaxis])[0]


@dataclass(frozen=True, eq=False)
class EntropyTrace:
    times: np.ndarray
    entropy: np.ndarray
    populations: np.ndarray
    basis_labels: tuple[str, str, str]

    def peak(self) -> tuple[float, float]:
        """(t, S) at the maximum entropy on the grid."""
        i = int(np.argmax(self.entropy))
        return float(self.times[i]), float(self.entropy[i])

    def final(self) -> float:
        return float(self.entropy[-1])


def time_grid(t_end: float = DEFAULT_T_END, points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(0.0, t_end, points)


def _labels(params: PhysParams, basis: str) -> tuple[str, str, str]:
    if basis not in (NATURAL, BARE):
        raise ParameterError("basis", f"must be {NATURAL!r} or {BARE!r}, got {basis!r}")
    if params.scheme is Scheme.UPPER:
        return UPPER_LABELS
    return LOWER_BARE_LABELS if basis == BARE else LOWER_LABELS


def _gram(pp, qq, rr, pq=None, rq=None) -> np.ndarray:
    """Stack of Gram matrices from <P|P>, <Q|Q>, <R|R>, <P|Q>, <R|Q>."""
    pp = np.asarray(pp)
    stack = np.zeros(pp.shape + (3, 3), dtype=complex)
    stack[..., 0, 0] = pp
    stack[..., 1, 1] = qq
    stack[..., 2, 2] = rr
    if pq is not None:
        stack[..., 0, 1] = pq
        stack[..., 1, 0] = np.conj(pq)
    if rq is not None:
        stack[..., 2, 1] = rq
        stack[..., 1, 2] = np.conj(rq)
    return stack


def to_bare_basis(rho: Union[DensityMatrix3, np.ndarray], dressed: DressedBasis) -> np.ndarray:
    """Rotate (|a>, |chi+>, |chi->) matrices into (|a>, |c>, |b>).

    The field state attached to |c> is eps*Q - conj(eta)*R and the one
    attached to |b> is eta*Q + eps*R.
    """
    matrix = rho.rho if isinstance(rho, DensityMatrix3) else rho
    eps, eta = dressed.epsilon, dressed.eta
    u = np.array(
        [[1.0, 0.0, 0.0], [0.0, eps, -np.conj(eta)], [0.0, eta, eps]],
        dtype=complex,
    )
    return np.conj(u) @ matrix @ u.T


def _upper_stack(params: PhysParams, init: InitialAtomState, times: np.ndarray) -> np.ndarray:
    if isinstance(params.field, ClassicalField):
        amps = upper_classical_amplitudes(params, init, times)
        pp = np.abs(amps.c) ** 2
        qq = np.abs(amps.a) ** 2
        return _gram(pp, qq, 1.0 - pp - qq, pq=np.conj(amps.c) * amps.a)

    weights = params.field.coherent.weights()
    mass = float(np.sum(np.abs(weights) ** 2))
    pp = np.zeros(times.shape)
    qq = np.zeros(times.shape)
    pq = np.zeros(times.shape, dtype=complex)
    previous_a = None
    # Sector n holds |c, n-1> and |a, n>; <P|Q> = sum_n conj(C_{n+1}) A_n
    for n in range(len(weights) + 1):
        amps = upper_quantized_amplitudes(params, init, n, times, weights=weights)
        qq += np.abs(amps.a) ** 2
        if amps.c is not None:
            pp += np.abs(amps.c) ** 2
            pq += np.conj(amps.c) * previous_a
        previous_a = amps.a
    pp /= mass
    qq /= mass
    pq /= mass
    return _gram(pp, qq, 1.0 - pp - qq, pq=pq)


def _lower_sector(
    params: PhysParams,
    dressed: DressedBasis,
    weight: float,
    survival: np.ndarray,
    times: np.ndarray,
    steady: bool,
) -> np.ndarray:
    """Gram stack of one photon sector of weight |w_n|^2, dressed basis.

    ``survival`` is |A_n(t)|^2, already carrying the weight.
    """
    gamma = params.gamma
    split = dressed.splitting
    if steady:
        emitted = np.full(times.shape, weight)
        beat = np.ones(times.shape, dtype=complex)
    else:
        emitted = weight * (1.0 - np.exp(-gamma * times))
        beat = 1.0 - np.exp((1j * split - gamma) * times)
    rq = weight * gamma * dressed.epsilon * np.conj(dressed.eta) * beat / (gamma - 1j * split)
    return _gram(
        survival,
        abs(dressed.eta) ** 2 * emitted,
        dressed.epsilon**2 * emitted,
        rq=rq,
    )


def _lower_stack(
    params: PhysParams,
    times: np.ndarray,
    basis: str,
    steady: bool = False,
) -> np.ndarray:
    def _survival(n=None, weights=None) -> np.ndarray:
        if steady:
            return np.zeros(times.shape)
        return np.abs(lower_survival_amplitude(params, times, n, weights)) ** 2

    if isinstance(params.field, ClassicalField):
        dressed = dressed_basis(params.detuning, params.coupling())
        stack = _lower_sector(params, dressed, 1.0, _survival(), times, steady)
        return to_bare_basis(stack, dressed) if basis == BARE else stack

    weights = params.field.coherent.weights()
    probabilities = np.abs(weights) ** 2
    stack = np.zeros(times.shape + (3, 3), dtype=complex)
    for n, p in enumerate(probabilities):
        dressed = dressed_basis(params.detuning, params.coupling(n))
        sector = _lower_sector(params, dressed, p, _survival(n, weights), times, steady)
        if basis == BARE:
            sector = to_bare_basis(sector, dressed)
        stack += sector
    return stack / probabilities.sum()


def _density_stack(
    params: PhysParams,
    init: InitialAtomState,
    times: np.ndarray,
    basis: str = NATURAL,
) -> np.ndarray:
    if params.scheme is Scheme.UPPER:
        return _upper_stack(params, init, times)
    return _lower_stack(params, times, basis)


def _checked_eigenvalues(stack: np.ndarray, times: Optional[np.ndarray] = None) -> np.ndarray:
    """Validate a (T, 3, 3) stack and return its eigenvalues, descending per row."""

    def _time(i: int) -> Optional[float]:
        return None if times is None else float(np.atleast_1d(times)[i])

    asymmetry = np.abs(stack - np.conj(np.swapaxes(stack, -1, -2))).max(axis=(-1, -2))
    if np.any(asymmetry >= HERMITIAN_TOL):
        i = int(np.argmax(asymmetry))
        raise ConsistencyError("hermiticity", float(asymmetry[i]), _time(i))

    trace_error = np.abs(np.trace(stack, axis1=-2, axis2=-1) - 1.0)
    if np.any(trace_error >= TRACE_TOL):
        i = int(np.argmax(trace_error))
        raise ConsistencyError("trace", float(trace_error[i]), _time(i))

    eigenvalues = np.linalg.eigvalsh(stack)[..., ::-1]
    lowest = eigenvalues[..., -1]
    if np.any(lowest < -EIGEN_CLAMP):
        i = int(np.argmin(lowest))
        raise ConsistencyError("positivity", float(lowest[i]), _time(i))
    return eigenvalues


def _entropy_from_eigenvalues(eigenvalues: np.ndarray) -> np.ndarray:
    """-sum(l ln l) with 0 ln 0 = 0; values within the clamp window are set to 0 or 1."""
    clipped = np.clip(eigenvalues, 0.0, 1.0)
    return entr(clipped).sum(axis=-1)


def reduced_density(
    params: PhysParams,
    init: InitialAtomState,
    t: float,
    basis: str = NATURAL,
) -> DensityMatrix3:
    """Atomic reduced state at time ``t``, checked against its invariants."""
    if t < 0:
        raise ParameterError("t", "time must be a non-negative offset from switch-on")
    labels = _labels(params, basis)
    if basis == BARE and params.scheme is Scheme.LOWER and params.is_quantized:
        raise ParameterError(
            "basis",
            "a quantized field dresses each photon sector differently; "
            "use entropy_trace for bare-level populations",
        )
    init = init.for_scheme(params.scheme)
    stack = _density_stack(params, init, np.array([float(t)]), basis)
    _checked_eigenvalues(stack, np.array([float(t)]))
    return DensityMatrix3(rho=stack[0], basis_labels=labels)


def eig3_hermitian(rho: Union[DensityMatrix3, np.ndarray]) -> np.ndarray:
    """Eigenvalues of a 3x3 Hermitian matrix, descending (LAPACK heevd via numpy)."""
    matrix = rho.rho if isinstance(rho, DensityMatrix3) else np.asarray(rho)
    return np.linalg.eigvalsh(matrix)[::-1]


def von_neumann_entropy(rho: Union[DensityMatrix3, np.ndarray]) -> float:
    """S = -Tr rho ln rho in nats."""
    eigenvalues = eig3_hermitian(rho)
    if eigenvalues[-1] < -EIGEN_CLAMP:
        raise ConsistencyError("positivity", float(eigenvalues[-1]))
    return float(_entropy_from_eigenvalues(eigenvalues))


def _grid(time_grid: Iterable[float]) -> np.ndarray:
    times = np.asarray(time_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ParameterError("time_grid", "must be a non-empty 1-D grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ParameterError("time_grid", "must be ascending and non-negative")
    return times


def entropy_trace(
    params: PhysParams,
    init: InitialAtomState,
    time_grid: Iterable[float],
    basis: str = NATURAL,
) -> EntropyTrace:
    times = _grid(time_grid)
    labels = _labels(params, basis)
    init = init.for_scheme(params.scheme)
    stack = _density_stack(params, init, times)
    eigenvalues = _checked_eigenvalues(stack, times)
    if basis == BARE and params.scheme is Scheme.LOWER:
        # Quantized sectors each rotate with their own dressed basis, so the
        # bare stack only supplies populations; S stays on the dressed sum.
        stack = _lower_stack(params, times, BARE)
    logger.debug(
        "entropy_trace: %s/%s over %d points up to t=%g",
        params.scheme.value,
        params.kind.value,
        len(times),
        times[-1],
    )
    return EntropyTrace(
        times=times,
        entropy=_entropy_from_eigenvalues(eigenvalues),
        populations=np.clip(stack.diagonal(axis1=-2, axis2=-1).real, 0.0, 1.0),
        basis_labels=labels,
    )


def populations(
    params: PhysParams,
    init: InitialAtomState,
    time_grid: Iterable[float],
    basis: str = NATURAL,
) -> np.ndarray:
    """Diagonal of the reduced state on the grid, shape (T, 3)."""
    return entropy_trace(params, init, time_grid, basis).populations


def steady_state(
    params: PhysParams,
    init: Optional[InitialAtomState] = None,
) -> tuple[DensityMatrix3, float]:
    """t -> infinity limit of the reduced state and its entropy, in closed form."""
    if params.scheme is Scheme.UPPER:
        init = init or InitialAtomState.excited()
        strength = params.field.g if isinstance(params.field, QuantizedField) else params.field.rabi
        if strength == 0:
            # |c> is dark without a coupling field and keeps its population
            rho = np.diag([abs(init.c0) ** 2, 0.0, abs(init.a0) ** 2]).astype(complex)
        else:
            rho = np.diag([0.0, 0.0, 1.0]).astype(complex)
        state = DensityMatrix3(rho=rho, basis_labels=UPPER_LABELS)
        return state, von_neumann_entropy(state)

    stack = _lower_stack(params, np.zeros(1), NATURAL, steady=True)
    eigenvalues = _checked_eigenvalues(stack)
    state = DensityMatrix3(rho=stack[0], basis_labels=LOWER_LABELS)
    return state, float(_entropy_from_eigenvalues(eigenvalues)[0])


def steady_entropy_closed_form(detuning: float, omega: complex, gamma: float = 1.0) -> float:
    """Lower classical S_inf from its eigenvalue pair 1/2 +/- r.

    r^2 = (1 - 4|W|^2 / (gamma^2 + 4|W|^2 + D'^2)) / 4, which is smallest at
    D' = 0 and even in D'.
    """
    coupling_sq = abs(omega) ** 2
    r_sq = 0.25 * (1.0 - 4.0 * coupling_sq / (gamma**2 + 4.0 * coupling_sq + detuning**2))
    r = math.sqrt(max(r_sq, 0.0))
    return float(entr(np.array([0.5 + r, 0.5 - r])).sum())


SWEEP_PARAMS = ("detuning", "omega", "g")


def with_value(params: PhysParams, name: str, value: float) -> PhysParams:
    """Copy of ``params`` with one sweepable parameter replaced.

    Coupling sweeps set the magnitude and keep the phase of the original
    Omega or g.
    """
    if name == "detuning":
        return dataclasses.replace(params, detuning=float(value))
    if name == "omega" and isinstance(params.field, ClassicalField):
        rabi = cmath.rect(float(value), cmath.phase(params.field.rabi))
        return dataclasses.replace(params, field=ClassicalField(rabi))
    if name == "g" and isinstance(params.field, QuantizedField):
        g = cmath.rect(float(value), cmath.phase(params.field.g))
        return dataclasses.replace(params, field=dataclasses.replace(params.field, g=g))
    raise ParameterError("sweep_param", f"{name!r} cannot be swept for a {params.kind.value} field")


def steady_sweep(
    params: PhysParams,
    name: str,
    values: Iterable[float],
    init: Optional[InitialAtomState] = None,
) -> np.ndarray:
    """S_inf at each sweep value, in input order."""
    return np.array([steady_state(with_value(params, name, v), init)[1] for v in values])
