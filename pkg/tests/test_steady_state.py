import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezeband.covariance import CovarianceTriple, principal_axes
from squeezeband.dynamics import integrate_variances, variance_rhs
from squeezeband.errors import ParameterError, ThresholdError
from squeezeband.params import MeasurementParams, OscillatorParams, PumpParams, mu_for_snr, threshold
from squeezeband.steady_state import (
    appendix_residual,
    bare_conditional_variance,
    conditional_angle,
    conditional_covariance,
    conditional_pump,
    conditional_variances,
    rsb_squeezing,
    rsb_steady_state,
    unconditional_squeezing,
    unconditional_steady_state,
)

import oracles
from conftest import below_threshold, convention_case

# Conditional states frozen from the algebraic Riccati solver (tests/oracles.py).
FROZEN = [
    # (gamma, N, chi, delta, mu, eta) -> (v_minus, v_plus, alpha1)
    ((1.0, 0.0, 100.0, math.sqrt(100**2 - 1), 0.6180339887498948, 1.0),
     (0.05332198096681379, 10.664662796602677, 0.07076798211531976)),
    ((1.0, 0.0, 100.0, math.sqrt(101**2 - 1), 0.6180339887498948, 1.0),
     (0.06641177114495578, 8.250195293544802, 0.055613307123902445)),
    ((1.0, 5.0, 10.0, 20.0, 2.0, 0.3),
     (1.1854588456937862, 3.3392518017353674, 0.155523642145174)),
]


def _model(gamma, n, chi, delta, mu, eta, theta=math.pi / 4):
    return OscillatorParams(gamma, n), PumpParams(chi, delta, theta), MeasurementParams(mu, eta)


class TestUnconditional:
    def test_undriven(self):
        cov = unconditional_steady_state(OscillatorParams(1, 2), PumpParams(), MeasurementParams(mu=1))
        assert (cov.v_x, cov.v_y, cov.c) == (3.0, 3.0, 0.0)

    def test_substitution_example(self):
        cov = unconditional_steady_state(OscillatorParams(1, 0.5), PumpParams(chi=0.5), MeasurementParams())
        assert cov.v_x == pytest.approx(4 / 3, rel=1e-15)
        assert cov.v_y == pytest.approx(4 / 3, rel=1e-15)
        assert cov.c == pytest.approx(2 / 3, rel=1e-15)

    @given(below_threshold())
    def test_matches_lyapunov(self, case):
        osc, pump, meas = case
        p = oracles.unconditional(osc.gamma, osc.n_bath, pump.chi, pump.delta, meas.mu)
        cov = unconditional_steady_state(osc, pump, meas)
        np.testing.assert_allclose(cov.as_matrix(), p, rtol=1e-8, atol=1e-10 * np.max(np.abs(p)))

    @given(below_threshold())
    def test_minus_three_db(self, case):
        osc, pump, meas = case
        sq = unconditional_squeezing(osc, pump, meas)
        v = osc.v_thermal + meas.mu / (2 * osc.gamma)
        chi_th = threshold(osc, pump)
        assert sq.v_minus / v == pytest.approx(1 / (1 + pump.chi / chi_th), rel=1e-10)
        if pump.chi > 1e-6 * chi_th:
            expect = 0.5 * math.atan2(osc.gamma, pump.delta)
            assert sq.angle == pytest.approx(expect, abs=1e-10)

    def test_half_at_threshold_edge(self):
        osc, pump = OscillatorParams(1.0), PumpParams(chi=0.998 * math.hypot(1, 3), delta=3.0)
        sq = unconditional_squeezing(osc, pump, MeasurementParams())
        assert sq.v_minus / osc.v_thermal == pytest.approx(0.5005, abs=5e-5)

    def test_fixed_point_of_flow(self):
        osc, pump, meas = _model(1.0, 2.0, 3.0, 5.0, 0.7, 0.0)
        flow = integrate_variances(CovarianceTriple(2.5, 2.5), osc, pump, meas)
        cov = unconditional_steady_state(osc, pump, meas)
        np.testing.assert_allclose(flow.final.as_array(), cov.as_array(), rtol=1e-8)

    def test_threshold_rejected(self):
        with pytest.raises(ThresholdError):
            unconditional_steady_state(OscillatorParams(1), PumpParams(chi=1.0), MeasurementParams())


class TestBare:
    def test_zero_measurement(self):
        assert bare_conditional_variance(OscillatorParams(1, 3), MeasurementParams()) == 3.5

    def test_substitution(self):
        assert bare_conditional_variance(OscillatorParams(1, 0), MeasurementParams(1, 1)) == pytest.approx(0.5)

    @pytest.mark.parametrize("eta", [0.1, 0.5, 1.0])
    def test_strong_measurement(self, eta):
        v = bare_conditional_variance(OscillatorParams(1, 0), MeasurementParams(1e10, eta))
        assert v == pytest.approx(1 / (2 * math.sqrt(eta)), rel=1e-4)

    @given(st.floats(0, 100), st.floats(0.01, 1), st.floats(1e-4, 1e4))
    def test_matches_riccati(self, n, eta, mu):
        p = oracles.conditional(1.0, n, 0.0, 0.0, mu, eta)
        v = bare_conditional_variance(OscillatorParams(1.0, n), MeasurementParams(mu, eta))
        assert v == pytest.approx(p[0, 0], rel=1e-9)


class TestAngle:
    @given(st.floats(0.1, 200), st.floats(0, 0.999))
    def test_zero_snr_gives_unconditional_angle(self, delta, frac):
        osc = OscillatorParams(1.0)
        pump = PumpParams(chi=frac * math.hypot(1, delta), delta=delta)
        a = conditional_angle(osc, pump, MeasurementParams())
        assert a == pytest.approx(0.5 * math.atan(1 / delta), rel=1e-10)

    def test_strong_measurement_limit(self):
        osc, pump, _ = convention_case(10.0, "below_threshold", 1.0)
        a = conditional_angle(osc, pump, MeasurementParams(mu=mu_for_snr(osc, 1, 1e12)))
        assert a == pytest.approx(math.pi / 4, abs=1e-5)

    def test_resonant_is_quarter_pi(self):
        osc, pump = OscillatorParams(1.0), PumpParams(chi=0.5, delta=0.0)
        assert conditional_angle(osc, pump, MeasurementParams(1.0)) == math.pi / 4
        assert "resonant_drive" in conditional_variances(osc, pump, MeasurementParams(1.0)).flags

    def test_sqrt_chi_scaling_example(self):
        osc, pump, meas = convention_case(100.0, "at_threshold", 1.0)
        a = conditional_angle(osc, pump, meas)
        assert pump.chi * math.sin(2 * a) == pytest.approx(math.sqrt(2 * 100.0), rel=0.1)

    @given(below_threshold())
    def test_appendix_identity(self, case):
        osc, pump, meas = case
        if pump.delta < 1e-6:
            return
        a = conditional_angle(osc, pump, meas)
        assert abs(appendix_residual(a, osc, pump, meas, normalized=True)) < 1e-10
        sol = conditional_variances(osc, pump, meas)
        lhs = pump.delta * math.tan(2 * a)
        rhs = osc.gamma + 2 * meas.eta * meas.mu * (sol.v_x + sol.v_y)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_zero_snr_residual(self):
        osc, pump = OscillatorParams(1.0), PumpParams(chi=3.0, delta=4.0)
        a0 = 0.5 * math.atan(1 / 4.0)
        assert appendix_residual(a0, osc, pump, MeasurementParams()) == pytest.approx(0, abs=1e-12)

    def test_residual_monotone_bracket(self):
        osc, pump, meas = convention_case(10.0, "below_threshold", 3.0)
        a0 = 0.5 * math.atan(osc.gamma / pump.delta)
        grid = np.linspace(a0, math.pi / 4, 400)[1:-1]
        res = [appendix_residual(a, osc, pump, meas) for a in grid]
        assert np.all(np.diff(res) > 0)
        a1 = conditional_angle(osc, pump, meas)
        assert a0 < a1 < math.pi / 4

    def test_residual_needs_detuning(self):
        with pytest.raises(ParameterError):
            appendix_residual(0.3, OscillatorParams(), PumpParams(chi=0.5), MeasurementParams(1))


class TestConditional:
    @pytest.mark.parametrize("args,expect", FROZEN)
    def test_frozen(self, args, expect):
        osc, pump, meas = _model(*args)
        sol = conditional_variances(osc, pump, meas)
        assert sol.v_x == pytest.approx(expect[0], rel=1e-11)
        assert sol.v_y == pytest.approx(expect[1], rel=1e-11)
        assert sol.alpha1 == pytest.approx(expect[2], rel=1e-11)

    def test_undriven(self):
        osc, meas = OscillatorParams(1.0, 2.0), MeasurementParams(0.8, 0.4)
        sol = conditional_variances(osc, PumpParams(), meas)
        assert sol.v_x == pytest.approx(sol.v0, rel=1e-14)
        assert sol.v_y == pytest.approx(sol.v0, rel=1e-14)

    @given(below_threshold())
    def test_matches_riccati_at_pump_phase(self, case):
        osc, pump, meas = case
        p = oracles.conditional(osc.gamma, osc.n_bath, pump.chi, pump.delta, meas.mu, meas.eta, pump.theta)
        cov = conditional_covariance(osc, pump, meas)
        np.testing.assert_allclose(cov.as_matrix(), p, rtol=1e-7, atol=1e-9 * np.max(np.abs(p)))

    @given(below_threshold())
    def test_fixed_point_any_phase(self, case):
        osc, pump, meas = case
        cov = conditional_covariance(osc, pump, meas)
        r = variance_rhs(cov, osc, pump, meas)
        assert np.max(np.abs(r)) < 1e-8 * osc.gamma * osc.v_thermal * max(1.0, cov.v_y / osc.v_thermal)

    def test_frame_has_no_covariance(self):
        osc, pump, meas = convention_case(30.0, "below_threshold", 2.0)
        sol = conditional_variances(osc, pump, meas)
        cov = conditional_covariance(osc, conditional_pump(osc, pump, meas), meas)
        assert cov.c == pytest.approx(0, abs=1e-12 * sol.v_y)
        assert cov.v_x == pytest.approx(sol.v_x, rel=1e-12)
        sq = principal_axes(conditional_covariance(osc, pump.with_theta(math.pi / 4), meas))
        assert sq.angle == pytest.approx(sol.alpha1, abs=1e-12)

    @given(st.floats(0.01, 100), st.floats(0, 50), st.floats(0.05, 1), st.floats(0, 50), st.floats(0.05, 1))
    @settings(max_examples=40)
    def test_ratio_depends_on_snr_only(self, snr, n1, eta1, n2, eta2):
        ratios = []
        for n, eta in ((n1, eta1), (n2, eta2)):
            osc, pump, meas = convention_case(20.0, "below_threshold", snr, n_bath=n, eta=eta)
            sol = conditional_variances(osc, pump, meas)
            ratios.append(sol.v_x / sol.v0)
        assert ratios[0] == pytest.approx(ratios[1], rel=1e-9)

    def test_ode_oracle(self):
        osc, pump, meas = convention_case(100.0, "below_threshold", 1.0)
        t = osc.v_thermal
        flow = integrate_variances(CovarianceTriple(t, t), osc, conditional_pump(osc, pump, meas), meas)
        sol = conditional_variances(osc, pump, meas)
        assert flow.converged
        assert flow.final.v_x == pytest.approx(sol.v_x, rel=1e-6)
        assert flow.final.v_y == pytest.approx(sol.v_y, rel=1e-6)

    def test_on_threshold_allowed_with_measurement(self):
        osc, pump, meas = convention_case(10.0, "at_threshold", 1.0)
        assert "on_threshold" in conditional_variances(osc, pump, meas).flags
        with pytest.raises(ThresholdError):
            conditional_variances(osc, pump, MeasurementParams())

    def test_above_threshold_rejected(self):
        osc, pump, meas = convention_case(10.0, "at_threshold", 1.0)
        with pytest.raises(ThresholdError):
            conditional_variances(osc, PumpParams(chi=10.01, delta=pump.delta), meas)


class TestRsb:
    @given(below_threshold(min_eta=1.0))
    @settings(max_examples=25)
    def test_unit_efficiency_matches_quarter_rate(self, case):
        osc, pump, meas = case
        meas = MeasurementParams(meas.mu, 1.0)
        cov = rsb_steady_state(osc, pump, meas)
        ref = conditional_covariance(osc, pump, MeasurementParams(meas.mu / 4, 1.0))
        np.testing.assert_allclose(cov.as_array(), ref.as_array(), rtol=1e-8, atol=1e-10 * ref.v_y)

    def test_thermal_state(self):
        cov = rsb_steady_state(OscillatorParams(1, 3), PumpParams(), MeasurementParams(0, 0.5))
        np.testing.assert_allclose(cov.as_array(), [3.5, 3.5, 0.0], atol=1e-12)

    @pytest.mark.parametrize("mu", [0.5, 2.0, 10.0])
    def test_unconditional_undriven(self, mu):
        n = 4.0
        cov = rsb_steady_state(OscillatorParams(1, n), PumpParams(), MeasurementParams(mu, 0.0))
        expect = 2 * n / (2 + mu) + 0.5
        np.testing.assert_allclose(cov.as_array(), [expect, expect, 0.0], rtol=1e-10, atol=1e-12)

    def test_threshold_rejected(self):
        with pytest.raises(ThresholdError):
            rsb_steady_state(OscillatorParams(1), PumpParams(chi=2.0), MeasurementParams(2.0, 0.1))

    def test_squeezing_below_standard_threshold_extension(self):
        # the optical damping lifts the threshold, so chi above gamma is fine at delta = 0
        sq = rsb_squeezing(OscillatorParams(1), PumpParams(chi=1.5), MeasurementParams(2.0, 0.1))
        assert 0 < sq.v_minus < sq.v_plus
