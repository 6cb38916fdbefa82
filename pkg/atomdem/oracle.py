"""Discretized-bath ODE oracle for the closed-form results.

The vacuum continuum is replaced by N equally spaced modes over [-W, W] with
a flat coupling g_k^2 = gamma * dw / (2 pi), and the interaction-picture
amplitude equations are integrated with a fixed-step RK4. Nothing here uses
the Weisskopf-Wigner approximation; the decay rate emerges from the bath.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from atomdem.amplitudes import (
    dressed_basis,
    lower_survival_amplitude,
    upper_classical_amplitudes,
)
from atomdem.entropy import (
    LOWER_LABELS,
    UPPER_LABELS,
    DensityMatrix3,
    _density_stack,
    _entropy_from_eigenvalues,
    _gram,
)
from atomdem.model import (
    AtomdemError,
    ClassicalField,
    CoherentField,
    InitialAtomState,
    ParameterError,
    PhysParams,
    QuantizedField,
    Scheme,
)

logger = logging.getLogger("atomdem.oracle")

DRIFT_LIMIT = 1e-6
NORM_CHECK = 1e-8
SECTOR_CUTOFF = 1e-14
SNAPSHOTS = 100

# Bath admissibility: W >= BASE + SIDEBAND * (largest splitting), in gamma units
_BANDWIDTH_BASE = 20.0
_BANDWIDTH_SIDEBAND = 4.0

DEFAULT_BANDWIDTH = 40.0
DEFAULT_MODES = 4000
DEFAULT_T_END = 5.0
# A flat band of half-width W renormalizes the emitting pole by about
# gamma / (pi W); density entries carry up to ~3x that in the first
# few 1/W of the run.
TOLERANCE_FACTOR = 4.0
ENTROPY_FACTOR = 10.0

QUICK_BANDWIDTH = 50.0
QUICK_MODES = 1000

VARIANTS = ("upper-classical", "upper-quantized", "lower-classical", "lower-quantized")


class BandwidthError(AtomdemError):
    """The discretized bath cannot represent the requested dynamics.

    Either the band is too narrow for the emission sidebands, or the mode
    spacing is so coarse that emitted light returns to the atom before
    ``t_end`` (recurrence time 2 pi / dw).
    """

    def __init__(
        self,
        bandwidth: float,
        required: float,
        n_modes: Optional[int] = None,
        min_modes: Optional[int] = None,
    ):
        self.bandwidth = bandwidth
        self.required = required
        self.n_modes = n_modes
        self.min_modes = min_modes
        if min_modes is not None:
            message = (
                f"{n_modes} modes over W={bandwidth:g} recur before t_end; "
                f"need at least {min_modes} modes"
            )
        else:
            message = f"bandwidth W={bandwidth:g} below required {required:g}"
        super().__init__(message)


class StepSizeError(AtomdemError):
    """Norm drift of the integrated state exceeded the limit; reduce dt."""

    def __init__(self, drift: float, limit: float = DRIFT_LIMIT):
        self.drift = drift
        self.limit = limit
        super().__init__(f"norm drift {drift:.3e} exceeds {limit:.0e}; reduce dt")


@dataclass(frozen=True, eq=False)
class ModeBath:
    deltas: np.ndarray
    coupling: float
    bandwidth: float
    gamma: float

    @property
    def count(self) -> int:
        return len(self.deltas)

    @property
    def spacing(self) -> float:
        return 2.0 * self.bandwidth / self.count

    @property
    def recurrence_time(self) -> float:
        return 2.0 * math.pi / self.spacing

    def check(self, params: PhysParams, t_end: Optional[float] = None) -> None:
        required = required_bandwidth(params)
        if self.bandwidth < required:
            raise BandwidthError(self.bandwidth, required)
        if t_end is not None and t_end > 0.5 * self.recurrence_time:
            # t_end <= pi / dw  <=>  N >= 2 W t_end / pi
            min_modes = int(math.ceil(2.0 * self.bandwidth * t_end / math.pi))
            raise BandwidthError(self.bandwidth, required, self.count, min_modes)


def build_bath(
    gamma: float,
    bandwidth: float,
    n_modes: int,
    params: Optional[PhysParams] = None,
    t_end: Optional[float] = None,
) -> ModeBath:
    """Midpoint grid of ``n_modes`` detunings over [-W, W] with a flat coupling.

    When ``params`` is given the bath is checked against the run it will
    serve.
    """
    if n_modes < 2:
        raise ParameterError("n_modes", f"must be >= 2, got {n_modes!r}")
    if not bandwidth > 0:
        raise ParameterError("bandwidth", f"must be > 0, got {bandwidth!r}")
    if not gamma > 0:
        raise ParameterError("gamma", f"must be > 0, got {gamma!r}")
    spacing = 2.0 * bandwidth / n_modes
    deltas = -bandwidth + (np.arange(n_modes) + 0.5) * spacing
    bath = ModeBath(
        deltas=deltas,
        coupling=math.sqrt(gamma * spacing / (2.0 * math.pi)),
        bandwidth=float(bandwidth),
        gamma=float(gamma),
    )
    if params is not None:
        bath.check(params, t_end)
    return bath


@dataclass(frozen=True)
class Sector:
    """One independently integrated photon sector: its index and initial state."""

    n: Optional[int]
    coupling: complex
    initial: np.ndarray


def _sectors(params: PhysParams, init: InitialAtomState, n_modes: int) -> list[Sector]:
    """Sectors in ascending n; the classical field has a single sector (n=None)."""
    if params.scheme is Scheme.UPPER:
        dim = 2 + n_modes

        def _initial(c: complex, a: complex) -> np.ndarray:
            state = np.zeros(dim, dtype=complex)
            state[0], state[1] = c, a
            return state

        if isinstance(params.field, ClassicalField):
            return [Sector(None, params.coupling(), _initial(init.c0, init.a0))]
        weights = params.field.coherent.weights()
        padded = np.concatenate([[0j], weights, [0j]])
        # Sector n pairs |c, n-1> with |a, n>
        return [
            Sector(n, params.coupling(n), _initial(padded[n] * init.c0, padded[n + 1] * init.a0))
            for n in range(len(weights) + 1)
        ]

    dim = 1 + 2 * n_modes

    def _excited(a: complex) -> np.ndarray:
        state = np.zeros(dim, dtype=complex)
        state[0] = a
        return state

    if isinstance(params.field, ClassicalField):
        return [Sector(None, params.coupling(), _excited(1.0))]
    weights = params.field.coherent.weights()
    return [Sector(n, params.coupling(n), _excited(w)) for n, w in enumerate(weights)]


def _retained(sectors: list[Sector]) -> list[Sector]:
    return [s for s in sectors if float(np.vdot(s.initial, s.initial).real) >= SECTOR_CUTOFF]


def bath_tolerance(bandwidth: float, gamma: float = 1.0) -> float:
    """Default amplitude and density threshold for a band of half-width ``bandwidth``."""
    return TOLERANCE_FACTOR * gamma / (math.pi * bandwidth)


def required_bandwidth(params: PhysParams, init: Optional[InitialAtomState] = None) -> float:
    """20 gamma + 4 * (largest Rabi splitting over the integrated sectors)."""
    init = (init or InitialAtomState.normalized(1.0, 1.0)).for_scheme(params.scheme)
    splitting = 0.0
    for sector in _retained(_sectors(params, init, 0)):
        omega = abs(sector.coupling)
        if params.scheme is Scheme.UPPER:
            splitting = max(splitting, 2.0 * omega + abs(params.detuning))
        else:
            splitting = max(splitting, math.sqrt(params.detuning**2 + 4.0 * omega * omega))
    return params.gamma * _BANDWIDTH_BASE + _BANDWIDTH_SIDEBAND * splitting


def rk4_step(state, rhs, t, dt, *args):
    k1 = rhs(state, t, *args)
    k2 = rhs(state + 0.5 * dt * k1, t + 0.5 * dt, *args)
    k3 = rhs(state + 0.5 * dt * k2, t + 0.5 * dt, *args)
    k4 = rhs(state + dt * k3, t + dt, *args)
    return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _UpperSystem:
    """dC = -i W A e^{iDt}; dA = -i W* C e^{-iDt} - i g sum_k B_k e^{-i d_k t}; dB_k = -i g A e^{i d_k t}."""

    def __init__(self, params: PhysParams, bath: ModeBath, omega: complex):
        self.omega = omega
        self.detuning = params.detuning
        self.bath = bath

    def __call__(self, state: np.ndarray, t: float, phases: np.ndarray) -> np.ndarray:
        g = self.bath.coupling
        c, a, b = state[0], state[1], state[2:]
        drive = np.exp(1j * self.detuning * t)
        out = np.empty_like(state)
        out[0] = -1j * self.omega * a * drive
        out[1] = -1j * np.conj(self.omega) * c * np.conj(drive) - 1j * g * np.dot(np.conj(phases), b)
        out[2:] = -1j * g * a * phases
        return out


class _LowerSystem:
    """|a> emits into both dressed states; |chi+> and |chi-> sidebands shifted by lambda1, lambda2."""

    def __init__(self, params: PhysParams, bath: ModeBath, omega: complex):
        self.dressed = dressed_basis(params.detuning, omega)
        self.bath = bath

    def __call__(self, state: np.ndarray, t: float, phases: np.ndarray) -> np.ndarray:
        g = self.bath.coupling
        n = self.bath.count
        eps, eta = self.dressed.epsilon, self.dressed.eta
        plus = phases * np.exp(1j * self.dressed.lambda1 * t)
        minus = phases * np.exp(1j * self.dressed.lambda2 * t)
        a, xp, xm = state[0], state[1 : n + 1], state[n + 1 :]
        out = np.empty_like(state)
        out[0] = -1j * g * (eta * np.dot(np.conj(plus), xp) + eps * np.dot(np.conj(minus), xm))
        out[1 : n + 1] = -1j * g * np.conj(eta) * a * plus
        out[n + 1 :] = -1j * g * eps * a * minus
        return out


def _step_plan(t_end: float, dt: float, snapshots: int) -> tuple[int, float, int]:
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return steps, t_end / steps, max(1, steps // snapshots)


def integrate_sector(
    params: PhysParams,
    bath: ModeBath,
    sector: Sector,
    t_end: float,
    dt: float,
    snapshots: int = SNAPSHOTS,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Integrate one sector; returns (times, states, drift) at the snapshot times.

    ``drift`` is the largest |norm(t) - norm(0)| over all steps.
    """
    system_type = _UpperSystem if params.scheme is Scheme.UPPER else _LowerSystem
    system = system_type(params, bath, sector.coupling)
    steps, dt, stride = _step_plan(t_end, dt, snapshots)
    half = np.exp(0.5j * bath.deltas * dt)

    state = sector.initial.copy()
    norm0 = float(np.vdot(state, state).real)
    drift = 0.0
    times = [0.0]
    states = [state.copy()]
    for i in range(steps):
        t = i * dt
        start = np.exp(1j * bath.deltas * t)
        mid = start * half
        stage = {t: start, t + 0.5 * dt: mid, t + dt: mid * half}
        state = rk4_step(state, lambda y, s: system(y, s, stage[s]), t, dt)
        drift = max(drift, abs(float(np.vdot(state, state).real) - norm0))
        if (i + 1) % stride == 0 or i + 1 == steps:
            times.append((i + 1) * dt)
            states.append(state.copy())
    if drift > DRIFT_LIMIT:
        raise StepSizeError(drift)
    logger.debug("sector n=%s: %d steps, drift %.2e", sector.n, steps, drift)
    return np.array(times), np.array(states), drift


@dataclass(frozen=True, eq=False)
class OracleTrajectory:
    """Snapshots of every integrated sector on a shared time grid.

    ``states[n]`` has shape (T, dim); upper layout [C, A, B_1..B_N], lower
    layout [A, X+_1..X+_N, X-_1..X-_N].
    """

    params: PhysParams
    bath: ModeBath
    times: np.ndarray
    sectors: tuple[Optional[int], ...]
    states: dict
    mass: float
    drift: float

    @property
    def norm(self) -> np.ndarray:
        total = sum(np.sum(np.abs(s) ** 2, axis=1) for s in self.states.values())
        return total / self.mass


def integrate(
    params: PhysParams,
    init: InitialAtomState,
    bath: ModeBath,
    t_end: float,
    dt: Optional[float] = None,
    snapshots: int = SNAPSHOTS,
) -> OracleTrajectory:
    """Integrate every retained sector, in ascending n."""
    if not t_end > 0:
        raise ParameterError("t_end", f"must be > 0, got {t_end!r}")
    limit = min(0.01 / params.gamma, 0.1 / bath.bandwidth)
    if dt is None:
        dt = limit
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ParameterError("dt", f"must be in (0, {limit:.3g}] for W={bath.bandwidth:g}, got {dt!r}")
    init = init.for_scheme(params.scheme)
    bath.check(params, t_end)

    sectors = _retained(_sectors(params, init, bath.count))
    logger.debug(
        "Oracle %s/%s: %d sector(s), N=%d, W=%g, t_end=%g",
        params.scheme.value,
        params.kind.value,
        len(sectors),
        bath.count,
        bath.bandwidth,
        t_end,
    )
    times = None
    states = {}
    drift = 0.0
    mass = 0.0
    for sector in sectors:
        times, trajectory, sector_drift = integrate_sector(params, bath, sector, t_end, dt, snapshots)
        states[sector.n] = trajectory
        drift = max(drift, sector_drift)
        mass += float(np.vdot(sector.initial, sector.initial).real)
    return OracleTrajectory(
        params=params,
        bath=bath,
        times=times,
        sectors=tuple(s.n for s in sectors),
        states=states,
        mass=mass,
        drift=drift,
    )


def _time_index(trajectory: OracleTrajectory, t: float) -> int:
    matches = np.flatnonzero(np.isclose(trajectory.times, t, rtol=0.0, atol=1e-9))
    if len(matches) == 0:
        raise ParameterError("t", f"{t!r} is not on the oracle snapshot grid")
    return int(matches[0])


def _upper_gram(trajectory: OracleTrajectory, i: int) -> np.ndarray:
    pp = qq = rr = 0.0
    pq = 0j
    states = trajectory.states
    for n, state in states.items():
        c, a, b = state[i, 0], state[i, 1], state[i, 2:]
        pp += abs(c) ** 2
        qq += abs(a) ** 2
        rr += float(np.sum(np.abs(b) ** 2))
        if n is None:
            pq += np.conj(c) * a
        elif n + 1 in states:
            pq += np.conj(states[n + 1][i, 0]) * a
    return _gram(pp, qq, rr, pq=pq)


def _lower_gram(trajectory: OracleTrajectory, i: int) -> np.ndarray:
    n_modes = trajectory.bath.count
    pp = qq = rr = 0.0
    rq = 0j
    for state in trajectory.states.values():
        xp, xm = state[i, 1 : n_modes + 1], state[i, n_modes + 1 :]
        pp += abs(state[i, 0]) ** 2
        qq += float(np.sum(np.abs(xp) ** 2))
        rr += float(np.sum(np.abs(xm) ** 2))
        rq += np.vdot(xm, xp)
    return _gram(pp, qq, rr, rq=rq)


def oracle_reduced_density(trajectory: OracleTrajectory, t: float) -> DensityMatrix3:
    """Reduced state at snapshot time ``t`` from explicit mode sums.

    Same Gram layout and, for the lower scheme, the same dressed basis as the
    closed-form engine.
    """
    i = _time_index(trajectory, t)
    if trajectory.params.scheme is Scheme.UPPER:
        matrix, labels = _upper_gram(trajectory, i), UPPER_LABELS
    else:
        matrix, labels = _lower_gram(trajectory, i), LOWER_LABELS
    return DensityMatrix3(rho=np.asarray(matrix) / trajectory.mass, basis_labels=labels)


@dataclass(frozen=True)
class CheckResult:
    variant: str
    check: str
    max_error: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.threshold)

    @property
    def margin(self) -> float:
        return self.max_error / self.threshold


def reference_case(variant: str) -> tuple[PhysParams, InitialAtomState]:
    """Reference parameters of the validation suite, in units of gamma."""
    half = InitialAtomState.normalized(1.0, 1.0)
    if variant == "upper-classical":
        return PhysParams(Scheme.UPPER, ClassicalField(0.5 + 0j), detuning=0.1), half
    if variant == "upper-quantized":
        field = QuantizedField(0.1 + 0j, CoherentField(4.0))
        return PhysParams(Scheme.UPPER, field, detuning=0.1), half
    if variant == "lower-classical":
        return PhysParams(Scheme.LOWER, ClassicalField(0.5 + 0j), detuning=0.1), InitialAtomState.excited()
    if variant == "lower-quantized":
        field = QuantizedField(0.1 + 0j, CoherentField(4.0))
        return PhysParams(Scheme.LOWER, field, detuning=0.1), InitialAtomState.excited()
    raise ParameterError("variant", f"must be one of {', '.join(VARIANTS)}, got {variant!r}")


def variant_name(params: PhysParams) -> str:
    return f"{params.scheme.value}-{params.kind.value}"


def _amplitude_error(trajectory: OracleTrajectory, init: InitialAtomState) -> float:
    params = trajectory.params
    state = trajectory.states[None]
    times = trajectory.times
    if params.scheme is Scheme.UPPER:
        exact = upper_classical_amplitudes(params, init, times)
        return float(max(np.abs(state[:, 0] - exact.c).max(), np.abs(state[:, 1] - exact.a).max()))
    exact = lower_survival_amplitude(params, times)
    return float(np.abs(state[:, 0] - exact).max())


def compare(
    trajectory: OracleTrajectory,
    init: InitialAtomState,
    tolerance: Optional[float] = None,
) -> list[CheckResult]:
    """Oracle trajectory against the closed-form engine at every snapshot.

    Without an explicit ``tolerance`` the threshold follows the bath width.
    """
    params = trajectory.params
    if tolerance is None:
        tolerance = bath_tolerance(trajectory.bath.bandwidth, params.gamma)
    init = init.for_scheme(params.scheme)
    name = variant_name(params)
    oracle = np.array([oracle_reduced_density(trajectory, t).rho for t in trajectory.times])
    exact = _density_stack(params, init, trajectory.times)
    oracle_entropy = _entropy_from_eigenvalues(np.linalg.eigvalsh(oracle))
    exact_entropy = _entropy_from_eigenvalues(np.linalg.eigvalsh(exact))

    results = []
    if not params.is_quantized:
        results.append(CheckResult(name, "amplitudes", _amplitude_error(trajectory, init), tolerance))
    results.extend(
        [
            CheckResult(name, "density", float(np.abs(oracle - exact).max()), tolerance),
            CheckResult(
                name,
                "entropy",
                float(np.abs(oracle_entropy - exact_entropy).max()),
                ENTROPY_FACTOR * tolerance,
            ),
            CheckResult(name, "norm", float(np.abs(trajectory.norm - 1.0).max()), NORM_CHECK),
        ]
    )
    return results


def validate_variant(
    params: PhysParams,
    init: InitialAtomState,
    bandwidth: float = DEFAULT_BANDWIDTH,
    n_modes: int = DEFAULT_MODES,
    t_end: float = DEFAULT_T_END,
    dt: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> list[CheckResult]:
    bath = build_bath(params.gamma, bandwidth, n_modes, params, t_end)
    trajectory = integrate(params, init, bath, t_end, dt)
    results = compare(trajectory, init, tolerance)
    for result in results:
        log = logger.info if result.passed else logger.warning
        log(
            "%s %s: max error %.3e (threshold %.1e)",
            result.variant,
            result.check,
            result.max_error,
            result.threshold,
        )
    return results
