"""Filter core: construction, stepping, design, and time-constant analysis."""

import math

import numpy as np
import pytest
from scipy import signal as scipy_signal

import specfilter as sf
from specfilter.errors import (
    InvalidDesignParameters,
    StateOwnershipMismatch,
    UnstableFilter,
    ZeroLeadingDenominator,
    ZeroOrderFilter,
)

from conftest import random_stable_filter, reference_filter


class TestMakeFilter:
    def test_normalizes_by_leading_denominator(self):
        f = sf.make_filter(1, b=[2.0], a=[2.0])
        assert f.b == (1.0,)
        assert f.a == (1.0,)
        assert f.order == 0

    def test_single_pole_inside_unit_circle_accepted(self):
        f = sf.make_filter(1, b=[1.0], a=[1.0, -0.5])
        assert f.order == 1
        assert f.poles == pytest.approx([0.5])

    def test_unstable_pole_rejected_with_magnitude(self):
        with pytest.raises(UnstableFilter, match="1.5"):
            sf.make_filter(1, b=[1.0], a=[1.0, -1.5])

    def test_pole_on_unit_circle_rejected(self):
        with pytest.raises(UnstableFilter):
            sf.make_filter(1, b=[1.0], a=[1.0, -1.0])

    def test_zero_leading_denominator(self):
        with pytest.raises(ZeroLeadingDenominator):
            sf.make_filter(1, b=[1.0], a=[0.0, 1.0])

    def test_empty_and_nonfinite_coefficients_rejected(self):
        with pytest.raises(ValueError):
            sf.make_filter(1, b=[], a=[1.0])
        with pytest.raises(ValueError):
            sf.make_filter(1, b=[math.nan], a=[1.0])
        with pytest.raises(ValueError):
            sf.make_filter(1, b=[1.0], a=[1.0, math.inf])


class TestStep:
    def test_identity_filter_passes_input_through(self):
        f = sf.make_filter(1, [1.0], [1.0])
        state = sf.FilterState.zeros(f)
        for u in (0.0, 1.0, -3.5, 42.0):
            assert sf.step(f, state, u) == u

    def test_single_pole_impulse_response_matches_hand_iteration(self):
        # y[n] = u[n] + 0.5 y[n-1] driven by a unit impulse
        f = sf.make_filter(1, [1.0], [1.0, -0.5])
        state = sf.FilterState.zeros(f)
        u = [1.0, 0.0, 0.0, 0.0, 0.0]
        expected = [1.0, 0.5, 0.25, 0.125, 0.0625]
        got = [sf.step(f, state, x) for x in u]
        assert got == expected

    def test_second_order_random_cases_match_difference_equation(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            b = rng.uniform(-1, 1, 3)
            r = rng.uniform(0.05, 0.9)
            theta = rng.uniform(0.1, np.pi - 0.1)
            a = np.real(np.poly([r * np.exp(1j * theta), r * np.exp(-1j * theta)]))
            f = sf.make_filter(1, b, a)
            u = rng.uniform(-2, 2, 16)
            assert sf.run_filter(f, u) == pytest.approx(reference_filter(f.b, f.a, u), abs=1e-9)

    def test_realization_equivalence_random_filters_long_run(self):
        # Direct Form II transposed vs the ring-buffer oracle, 1e4 samples total
        rng = np.random.default_rng(7)
        for _ in range(10):
            f = random_stable_filter(rng)
            u = rng.uniform(-1, 1, 1000)
            ours = sf.run_filter(f, u)
            ref = reference_filter(f.b, f.a, u)
            assert ours == pytest.approx(ref, abs=1e-9)
            assert ours == pytest.approx(scipy_signal.lfilter(f.b, f.a, u), abs=1e-9)

    def test_state_ownership_enforced(self):
        f1 = sf.make_filter(1, [1.0], [1.0, -0.5])
        f2 = sf.make_filter(2, [1.0], [1.0, -0.5])
        state = sf.FilterState.zeros(f1)
        with pytest.raises(StateOwnershipMismatch):
            sf.step(f2, state, 1.0)

    def test_linearity_from_zero_state(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            f = random_stable_filter(rng)
            u1 = rng.uniform(-1, 1, 200)
            u2 = rng.uniform(-1, 1, 200)
            alpha, beta = rng.uniform(-3, 3, 2)
            mixed = sf.run_filter(f, alpha * u1 + beta * u2)
            split = alpha * sf.run_filter(f, u1) + beta * sf.run_filter(f, u2)
            assert mixed == pytest.approx(split, abs=1e-9)


class TestReset:
    def test_zeroes_delay_line(self):
        f = sf.make_filter(1, [1.0, 0.5], [1.0, -0.5, 0.1])
        state = sf.FilterState.zeros(f)
        sf.run_filter(f, [1.0, 2.0, 3.0], state)
        assert np.any(state.w != 0.0)
        sf.reset(state)
        assert np.all(state.w == 0.0)
        assert len(state.w) == f.order

    def test_zero_input_after_reset_gives_zero_output(self):
        f = sf.make_filter(1, [1.0, 0.5], [1.0, -0.5])
        state = sf.FilterState.zeros(f)
        sf.run_filter(f, [5.0, -2.0], state)
        sf.reset(state)
        assert sf.step(f, state, 0.0) == 0.0

    def test_idempotent(self):
        f = sf.make_filter(1, [1.0], [1.0, -0.9])
        state = sf.FilterState.zeros(f)
        sf.step(f, state, 1.0)
        once = sf.reset(state).w.copy()
        twice = sf.reset(state).w.copy()
        assert np.array_equal(once, twice)


def _magnitude(b, a, omega):
    # independent response evaluation straight from the polynomial sums
    zinv = complex(math.cos(-omega), math.sin(-omega))
    num = sum(bk * zinv**k for k, bk in enumerate(b))
    den = sum(ak * zinv**k for k, ak in enumerate(a))
    return abs(num / den)


class TestCheby1Design:
    def test_odd_order_dc_gain_is_one(self):
        for ripple in (0.5, 1.0, 3.0):
            for cutoff in (0.03, 0.1, 0.4):
                f = sf.design_cheby1_lowpass(3, ripple, cutoff)
                assert _magnitude(f.b, f.a, 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_even_order_dc_gain_sits_at_ripple_floor(self):
        f = sf.design_cheby1_lowpass(2, 1.0, 0.1)
        assert _magnitude(f.b, f.a, 0.0) == pytest.approx(10 ** (-1 / 20), abs=1e-9)

    def test_cutoff_magnitude_equals_ripple_depth(self):
        for order in (1, 2, 3, 5):
            for ripple in (0.5, 1.0, 3.0):
                for cutoff in (0.033, 0.1, 0.5):
                    f = sf.design_cheby1_lowpass(order, ripple, cutoff)
                    got = _magnitude(f.b, f.a, math.pi * cutoff)
                    assert got == pytest.approx(10 ** (-ripple / 20), abs=1e-6)

    def test_designs_are_stable_over_grid(self):
        for order in range(1, 9):
            for ripple in (0.1, 1.0, 3.0):
                for cutoff in (0.02, 0.05, 0.2, 0.5, 0.9):
                    f = sf.design_cheby1_lowpass(order, ripple, cutoff)
                    assert f.max_pole_magnitude < 1.0

    def test_invalid_parameters_rejected(self):
        with pytest.raises(InvalidDesignParameters):
            sf.design_cheby1_lowpass(0, 1.0, 0.1)
        with pytest.raises(InvalidDesignParameters):
            sf.design_cheby1_lowpass(9, 1.0, 0.1)
        with pytest.raises(InvalidDesignParameters):
            sf.design_cheby1_lowpass(3, 0.0, 0.1)
        with pytest.raises(InvalidDesignParameters):
            sf.design_cheby1_lowpass(3, 1.0, 0.0)
        with pytest.raises(InvalidDesignParameters):
            sf.design_cheby1_lowpass(3, 1.0, 1.0)


class TestTimeConstant:
    def test_known_single_pole_values(self):
        # analytic: pole of a = [1, -rho] is rho, so tau = -1/ln(rho)
        f = sf.make_filter(1, [1.0], [1.0, -0.9])
        assert sf.time_constant_samples(f) == pytest.approx(-1.0 / math.log(0.9), rel=1e-12)
        f = sf.make_filter(1, [1.0], [1.0, -0.5])
        assert sf.time_constant_samples(f) == pytest.approx(1.4426950408889634, rel=1e-12)

    def test_monotone_in_pole_magnitude(self):
        taus = [
            sf.time_constant_samples(sf.make_filter(1, [1.0], [1.0, -rho]))
            for rho in (0.5, 0.9, 0.99)
        ]
        assert taus[0] < taus[1] < taus[2]

    def test_zero_order_rejected(self):
        with pytest.raises(ZeroOrderFilter):
            sf.time_constant_samples(sf.make_filter(1, [2.0], [1.0]))

    def test_pure_fir_has_zero_time_constant(self):
        f = sf.make_filter(1, [0.5, 0.5], [1.0])
        assert sf.time_constant_samples(f) == 0.0


class TestExperimentPair:
    def test_time_constants_near_thirty_samples(self, filter_pair):
        for f in filter_pair:
            assert sf.time_constant_samples(f) == pytest.approx(30.0, abs=0.5)

    def test_orders_and_ids(self, filter_pair):
        f1, f2 = filter_pair
        assert (f1.id, f1.order) == (1, 3)
        assert (f2.id, f2.order) == (2, 2)

    def test_transient_decays_below_percent_after_five_time_constants(self, filter_pair):
        for f in filter_pair:
            tau = sf.time_constant_samples(f)
            state = sf.FilterState(owner=f.id, w=np.ones(f.order))
            y = sf.run_filter(f, np.zeros(int(10 * tau)), state)
            assert abs(y[0]) > 0
            horizon = int(math.ceil(5 * tau))
            assert np.max(np.abs(y[horizon:])) < 1e-2 * abs(y[0])

    def test_transient_bounded_by_decaying_envelope(self, filter_pair):
        rng = np.random.default_rng(11)
        for f in filter_pair:
            rho = f.max_pole_magnitude
            state = sf.FilterState(owner=f.id, w=rng.uniform(-1, 1, f.order))
            y = sf.run_filter(f, np.zeros(600), state)
            fitted_c = max(abs(y[k]) / rho**k for k in range(600))
            assert fitted_c < 100.0  # non-normal growth stays modest
            assert np.all(np.abs(y) <= fitted_c * rho ** np.arange(600) + 1e-15)
