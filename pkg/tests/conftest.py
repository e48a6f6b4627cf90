import math

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from squeezeband.params import (
    MeasurementParams,
    OscillatorParams,
    PumpParams,
    delta_for_convention,
    mu_for_snr,
)

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def below_threshold(draw, min_eta=0.05):
    """(osc, pump, meas) strictly below threshold, with eta * mu > 0."""
    gamma = draw(st.floats(0.2, 5.0))
    n_bath = draw(st.floats(0.0, 100.0))
    delta = draw(st.floats(0.0, 200.0))
    frac = draw(st.floats(0.0, 0.999))
    chi = frac * math.hypot(gamma, delta)
    eta = draw(st.floats(min_eta, 1.0))
    snr = 10 ** draw(st.floats(-3.0, 4.0))
    theta = draw(st.floats(0.0, math.pi))
    osc = OscillatorParams(gamma=gamma, n_bath=n_bath)
    return (
        osc,
        PumpParams(chi=chi, delta=delta, theta=theta),
        MeasurementParams(mu=mu_for_snr(osc, eta, snr), eta=eta),
    )


def convention_case(chi, convention, snr, n_bath=0.0, eta=1.0, gamma=1.0):
    osc = OscillatorParams(gamma=gamma, n_bath=n_bath)
    pump = PumpParams(chi=chi, delta=delta_for_convention(osc, chi, convention))
    return osc, pump, MeasurementParams(mu=mu_for_snr(osc, eta, snr), eta=eta)


@pytest.fixture
def unit_osc():
    return OscillatorParams(gamma=1.0)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the summary."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
