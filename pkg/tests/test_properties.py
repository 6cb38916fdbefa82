"""Property-based tests for the physical invariants of atomdem.

Every reduced state must be a density matrix (unit trace, Hermitian,
positive semidefinite) with entropy in [0, ln 3]; decay only removes
population, so the norm of the atomic amplitudes never grows.
"""

import cmath
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from atomdem.amplitudes import dressed_basis, upper_classical_amplitudes, upper_roots
from atomdem.entropy import (
    _density_stack,
    _entropy_from_eigenvalues,
    entropy_trace,
    reduced_density,
    steady_entropy_closed_form,
    steady_state,
    time_grid,
    von_neumann_entropy,
)
from atomdem.model import (
    TAIL_LIMIT,
    ClassicalField,
    CoherentField,
    InitialAtomState,
    PhysParams,
    QuantizedField,
    Scheme,
)
from atomdem.oracle import build_bath, integrate

# -----------------------------------------------------------------------------
# Strategies
# -----------------------------------------------------------------------------

finite = dict(allow_nan=False, allow_infinity=False)
rabi = st.floats(min_value=0.0, max_value=3.0, **finite)
phase = st.floats(min_value=-math.pi, max_value=math.pi, **finite)
detuning = st.floats(min_value=-3.0, max_value=3.0, **finite)
single_photon = st.floats(min_value=0.0, max_value=0.5, **finite)
mean_photons = st.floats(min_value=0.0, max_value=16.0, **finite)
time = st.floats(min_value=0.0, max_value=30.0, **finite)
mixing = st.floats(min_value=0.0, max_value=math.pi / 2, **finite)
scheme = st.sampled_from([Scheme.UPPER, Scheme.LOWER])


@st.composite
def classical_params(draw):
    omega = cmath.rect(draw(rabi), draw(phase))
    return PhysParams(draw(scheme), ClassicalField(omega), detuning=draw(detuning))


@st.composite
def quantized_params(draw):
    field = QuantizedField(draw(single_photon) + 0j, CoherentField(draw(mean_photons), draw(phase)))
    return PhysParams(draw(scheme), field, detuning=draw(detuning))


@st.composite
def initial_states(draw):
    angle = draw(mixing)
    return InitialAtomState(math.cos(angle) * cmath.exp(1j * draw(phase)), complex(math.sin(angle)))


any_params = st.one_of(classical_params(), quantized_params())

SLOW = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def assert_density_matrix(rho):
    np.testing.assert_allclose(np.trace(rho).real, 1.0, atol=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(rho).min() > -1e-9


class TestReducedStateInvariants:
    @SLOW
    @given(params=any_params, init=initial_states(), t=time)
    def test_reduced_state_is_density_matrix(self, params, init, t):
        state = reduced_density(params, init, t)
        assert_density_matrix(state.rho)
        assert 0.0 <= von_neumann_entropy(state) <= math.log(3) + 1e-12

    @SLOW
    @given(params=classical_params(), t=time)
    def test_bare_and_natural_basis_agree(self, params, t):
        init = InitialAtomState.excited()
        natural = von_neumann_entropy(reduced_density(params, init, t, "natural"))
        bare = von_neumann_entropy(reduced_density(params, init, t, "bare"))
        assert abs(natural - bare) < 1e-9

    @SLOW
    @given(params=any_params, init=initial_states())
    def test_trace_bounds(self, params, init):
        trace = entropy_trace(params, init, time_grid(20, 41))
        assert np.all(trace.entropy >= 0)
        assert np.all(trace.entropy <= math.log(3) + 1e-12)
        np.testing.assert_allclose(trace.populations.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(trace.populations >= -1e-12)


class TestDecay:
    @given(params=classical_params())
    def test_exponents_never_grow(self, params):
        roots = upper_roots(params, params.coupling())
        for exponent in (roots.x1, roots.x2, roots.y1, roots.y2):
            assert exponent.real <= 1e-12

    @given(params=classical_params(), init=initial_states())
    def test_atomic_norm_never_increases(self, params, init):
        upper = PhysParams(Scheme.UPPER, params.field, detuning=params.detuning)
        amplitudes = upper_classical_amplitudes(upper, init, time_grid(30, 301))
        norm = np.abs(amplitudes.c) ** 2 + np.abs(amplitudes.a) ** 2
        assert abs(norm[0] - 1.0) < 1e-12
        assert np.all(np.diff(norm) <= 1e-12)

    @settings(max_examples=8, deadline=None)
    @given(
        omega=st.floats(min_value=0.0, max_value=0.5, **finite),
        delta=st.floats(min_value=-0.1, max_value=0.1, **finite),
        lower=st.booleans(),
    )
    def test_oracle_norm_never_increases(self, omega, delta, lower):
        params = PhysParams(Scheme.LOWER if lower else Scheme.UPPER, ClassicalField(omega + 0j), detuning=delta)
        trajectory = integrate(params, InitialAtomState.normalized(1, 1), build_bath(1.0, 25.0, 500), t_end=1.0)
        assert np.all(np.diff(trajectory.norm) <= 1e-10)
        assert abs(trajectory.norm[0] - 1.0) < 1e-12


class TestDressedBasis:
    @given(delta=detuning, omega=st.floats(min_value=1e-3, max_value=3.0, **finite), theta=phase)
    def test_unitary_eigenbasis(self, delta, omega, theta):
        coupling = cmath.rect(omega, theta)
        basis = dressed_basis(delta, coupling)
        assert abs(basis.epsilon**2 + abs(basis.eta) ** 2 - 1.0) < 1e-12
        assert basis.lambda1 >= basis.lambda2
        block = np.array([[delta, coupling.conjugate()], [coupling, 0.0]])
        vector = np.array([basis.epsilon, basis.eta])
        np.testing.assert_allclose(block @ vector, basis.lambda1 * vector, atol=1e-10)


class TestSteadyState:
    @given(delta=detuning, omega=rabi, theta=phase)
    def test_lower_classical_matches_closed_form(self, delta, omega, theta):
        coupling = cmath.rect(omega, theta)
        params = PhysParams(Scheme.LOWER, ClassicalField(coupling), detuning=delta)
        state, entropy = steady_state(params)
        assert_density_matrix(state.rho)
        assert abs(entropy - steady_entropy_closed_form(delta, coupling)) < 1e-10
        assert entropy <= math.log(2) + 1e-12

    @given(delta=detuning, omega=rabi)
    def test_even_in_detuning(self, delta, omega):
        left = steady_entropy_closed_form(-delta, omega + 0j)
        right = steady_entropy_closed_form(delta, omega + 0j)
        assert abs(left - right) < 1e-12
        assert steady_entropy_closed_form(0.0, omega + 0j) >= right - 1e-12

    @settings(max_examples=30, deadline=None)
    @given(params=quantized_params())
    def test_quantized_steady_state_is_density_matrix(self, params):
        state, entropy = steady_state(params)
        assert_density_matrix(state.rho)
        assert 0.0 <= entropy <= math.log(3) + 1e-12


class TestCoherentWeights:
    @given(m=mean_photons, theta=phase)
    def test_retained_mass(self, m, theta):
        weights = CoherentField(m, theta).weights()
        mass = float(np.sum(np.abs(weights) ** 2))
        assert 1.0 - TAIL_LIMIT < mass <= 1.0 + 1e-12


class TestSampledInvariants:
    """Seeded sweep of 200 parameter sets x 50 times, checked as whole stacks."""

    SETS = 200
    TIMES = 50

    @staticmethod
    def _draw(rng):
        scheme_ = Scheme.UPPER if rng.random() < 0.5 else Scheme.LOWER
        delta = rng.uniform(-3.0, 3.0)
        if rng.random() < 0.5:
            field = ClassicalField(cmath.rect(rng.uniform(0.0, 3.0), rng.uniform(-math.pi, math.pi)))
        else:
            coherent = CoherentField(rng.uniform(0.0, 16.0), rng.uniform(-math.pi, math.pi))
            field = QuantizedField(complex(rng.uniform(0.0, 0.5)), coherent)
        c0, a0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        init = InitialAtomState.normalized(c0, a0)
        return PhysParams(scheme_, field, detuning=delta), init

    def test_ten_thousand_samples(self):
        rng = np.random.default_rng(20240607)
        checked = 0
        for _ in range(self.SETS):
            params, init = self._draw(rng)
            times = np.sort(rng.uniform(0.0, 30.0, size=self.TIMES))
            stack = _density_stack(params, init, times)

            np.testing.assert_allclose(np.trace(stack, axis1=-2, axis2=-1), 1.0, atol=1e-9)
            np.testing.assert_allclose(stack, np.conj(np.swapaxes(stack, -1, -2)), atol=1e-10)
            eigenvalues = np.linalg.eigvalsh(stack)
            assert eigenvalues.min() > -1e-9, params

            entropy = _entropy_from_eigenvalues(eigenvalues)
            assert np.all(entropy >= 0.0)
            assert np.all(entropy <= math.log(3) + 1e-12)
            checked += len(times)
        assert checked == 10_000
