"""Tests for atomdem.model."""

import math

import numpy as np
import pytest

from atomdem.model import (
    TAIL_LIMIT,
    ClassicalField,
    CoherentField,
    FieldKind,
    InitialAtomState,
    ParameterError,
    PhysParams,
    QuantizedField,
    Scheme,
    TruncationError,
    auto_truncation,
    coherent_weights,
    poisson_tail,
    weight_at,
)


class TestCoherentWeights:
    def test_vacuum(self):
        w = coherent_weights(CoherentField(0.0, n_max=4))
        np.testing.assert_array_equal(w, [1, 0, 0, 0, 0])

    def test_poisson_mass_at_four(self):
        w = coherent_weights(CoherentField(4.0))
        assert abs(w[4]) ** 2 == pytest.approx(math.exp(-4) * 4**4 / 24, rel=1e-12)
        assert abs(w[4]) ** 2 == pytest.approx(0.19537, abs=1e-5)

    @pytest.mark.parametrize("m", [0.5, 4.0, 100.0])
    def test_normalized_up_to_tail(self, m):
        mass = float(np.sum(np.abs(coherent_weights(CoherentField(m))) ** 2))
        assert 1 - 1e-12 < mass <= 1 + 1e-12

    def test_zero_phase_gives_real_nonnegative(self):
        w = coherent_weights(CoherentField(9.0))
        assert np.all(w.imag == 0)
        assert np.all(w.real >= 0)

    def test_phase_rotates_each_number_state(self):
        theta = 0.7
        w0 = coherent_weights(CoherentField(3.0))
        w = coherent_weights(CoherentField(3.0, phase=theta))
        n = np.arange(len(w))
        np.testing.assert_allclose(w, w0 * np.exp(1j * n * theta), atol=1e-15)

    def test_unimodal_with_mode_at_floor_m(self):
        m = 7.3
        p = np.abs(coherent_weights(CoherentField(m))) ** 2
        mode = int(np.argmax(p))
        assert mode == math.floor(m)
        assert np.all(np.diff(p[: mode + 1]) > 0)
        assert np.all(np.diff(p[mode:]) < 0)

    def test_large_mean_stays_finite(self):
        w = coherent_weights(CoherentField(400.0))
        assert np.all(np.isfinite(w))

    def test_cutoff_too_small_reports_minimal(self):
        with pytest.raises(TruncationError) as exc_info:
            coherent_weights(CoherentField(4.0, n_max=5))
        err = exc_info.value
        assert err.n_max == 5
        assert err.tail >= TAIL_LIMIT
        assert err.minimal_n_max == auto_truncation(4.0)
        assert str(err.minimal_n_max) in str(err)

    def test_negative_mean_rejected(self):
        with pytest.raises(ParameterError) as exc_info:
            CoherentField(-1.0)
        assert exc_info.value.key == "mean_photons"


class TestAutoTruncation:
    def test_vacuum_needs_no_photons(self):
        assert auto_truncation(0.0) == 0

    @pytest.mark.parametrize("m", [0.3, 4.0, 25.0, 100.0])
    def test_smallest_admissible(self, m):
        n = auto_truncation(m)
        assert poisson_tail(m, n) < TAIL_LIMIT
        assert poisson_tail(m, n - 1) >= TAIL_LIMIT

    def test_tail_matches_complement(self):
        # Direct sum against 1 - head mass where the head is not tiny
        m, n = 4.0, 6
        head = sum(math.exp(-m) * m**k / math.factorial(k) for k in range(n + 1))
        assert poisson_tail(m, n) == pytest.approx(1 - head, rel=1e-9)

    def test_negative_mean_rejected(self):
        with pytest.raises(ParameterError):
            auto_truncation(-0.1)


class TestWeightAt:
    def test_inside_and_outside_window(self):
        w = np.array([0.5, 0.25])
        assert weight_at(w, 1) == 0.25
        assert weight_at(w, -1) == 0
        assert weight_at(w, 2) == 0


class TestPhysParams:
    def test_classical_coupling(self):
        params = PhysParams(Scheme.UPPER, ClassicalField(0.3 + 0.1j))
        assert params.coupling() == 0.3 + 0.1j
        assert params.kind is FieldKind.CLASSICAL
        assert not params.is_quantized

    def test_quantized_coupling_scales_with_sqrt_n(self):
        params = PhysParams(Scheme.LOWER, QuantizedField(0.25 + 0j, CoherentField(4.0)))
        assert params.coupling(4) == pytest.approx(0.5)
        assert params.kind is FieldKind.QUANTIZED

    def test_quantized_coupling_needs_sector(self):
        params = PhysParams(Scheme.LOWER, QuantizedField(0.25 + 0j, CoherentField(4.0)))
        with pytest.raises(ValueError):
            params.coupling()

    @pytest.mark.parametrize("gamma", [0.0, -1.0, float("nan")])
    def test_gamma_must_be_positive(self, gamma):
        with pytest.raises(ParameterError) as exc_info:
            PhysParams(Scheme.UPPER, ClassicalField(1 + 0j), gamma=gamma)
        assert exc_info.value.key == "gamma"

    def test_infinite_rabi_rejected(self):
        with pytest.raises(ParameterError) as exc_info:
            PhysParams(Scheme.UPPER, ClassicalField(complex(float("inf"), 0)))
        assert exc_info.value.key == "omega"

    def test_scheme_from_string(self):
        assert Scheme("lower") is Scheme.LOWER


class TestInitialAtomState:
    def test_default_is_excited(self):
        state = InitialAtomState()
        assert (state.c0, state.a0) == (0, 1)

    def test_unnormalized_rejected(self):
        with pytest.raises(ParameterError) as exc_info:
            InitialAtomState(0.5, 0.5)
        assert exc_info.value.key == "c0/a0"

    def test_normalized_rescales(self):
        state = InitialAtomState.normalized(0.7071, 0.7071)
        assert state.c0 == pytest.approx(1 / math.sqrt(2))
        assert abs(state.c0) ** 2 + abs(state.a0) ** 2 == pytest.approx(1, abs=1e-15)

    def test_normalized_rejects_zero(self):
        with pytest.raises(ParameterError):
            InitialAtomState.normalized(0, 0)

    def test_lower_scheme_forces_excited(self):
        state = InitialAtomState.normalized(1, 1).for_scheme(Scheme.LOWER)
        assert state == InitialAtomState.excited()

    def test_upper_scheme_keeps_superposition(self):
        state = InitialAtomState.normalized(1, 1j)
        assert state.for_scheme(Scheme.UPPER) is state
