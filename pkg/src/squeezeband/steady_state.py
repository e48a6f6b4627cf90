"""Closed-form and numerically solved steady states.

Conventions: unconditional results are given for pump phase ``theta = pi/4``.
Conditional results use the pump phase ``theta = pi/4 - alpha_1`` that makes
the squeezed quadrature X and the covariance vanish, where ``alpha_1`` is the
conditional antisqueezing angle. Because heterodyne-type readout of both
quadratures is phase covariant, changing the pump phase only rotates these
states (see :func:`squeezeband.covariance.rotate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from . import dynamics
from .covariance import CovarianceTriple, SqueezingSolution, covariance_from_axes, principal_axes, rotate
from .errors import ConvergenceError, ParameterError, ThresholdError
from .params import (
    MeasurementParams,
    OscillatorParams,
    PumpParams,
    back_action_phonons,
    rsb_threshold,
    signal_to_noise,
    threshold,
)

# Relative slack when deciding that a drive sits exactly on threshold.
THRESHOLD_RTOL = 1e-12


@dataclass(frozen=True)
class ConditionalSolution:
    """Conditional steady state in the frame where X is maximally squeezed."""

    cov: CovarianceTriple
    squeezing: SqueezingSolution
    snr: float
    v0: float
    flags: tuple[str, ...] = ()

    @property
    def v_x(self) -> float:
        return self.cov.v_x

    @property
    def v_y(self) -> float:
        return self.cov.v_y

    @property
    def alpha1(self) -> float:
        return self.squeezing.angle


def _effective_variance(osc, meas):
    return osc.v_thermal + back_action_phonons(osc, meas)


def _require_below(osc, pump):
    chi_th = threshold(osc, pump)
    # the hypot can round below chi while gamma^2 + delta^2 - chi^2 rounds to zero
    if pump.chi >= chi_th or osc.gamma**2 + pump.delta**2 - pump.chi**2 <= 0:
        raise ThresholdError(
            f"chi={pump.chi:g} >= threshold {chi_th:g}: no unconditional steady state"
        )


def _require_conditional(osc, pump, meas):
    """Conditioning keeps the state bounded on threshold but not beyond it."""
    chi_th = threshold(osc, pump)
    if pump.chi > chi_th * (1 + THRESHOLD_RTOL):
        raise ThresholdError(f"chi={pump.chi:g} above threshold {chi_th:g}")
    if pump.chi >= chi_th and meas.eta * meas.mu == 0:
        raise ThresholdError("on threshold the unconditional state diverges")


def unconditional_steady_state(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams
) -> CovarianceTriple:
    """Stationary covariance with the record discarded, at pump phase pi/4.

    ``pump.theta`` is ignored; rotate the result for other phases.
    """
    _require_below(osc, pump)
    g, chi, delta = osc.gamma, pump.chi, pump.delta
    v = _effective_variance(osc, meas)
    den = g**2 + delta**2 - chi**2
    return CovarianceTriple(
        (1 - chi * (delta - chi) / den) * v,
        (1 + chi * (delta + chi) / den) * v,
        chi * g / den * v,
    )


def bare_conditional_variance(osc: OscillatorParams, meas: MeasurementParams) -> float:
    """Conditional variance of either quadrature without parametric drive.

    Written as ``2 (V_T + N_BA) / (1 + sqrt(1 + 4 SNR))``, which is the usual
    expression rationalized so that it extends continuously to ``eta*mu = 0``.
    """
    snr = signal_to_noise(osc, meas)
    return 2.0 * _effective_variance(osc, meas) / (1.0 + math.sqrt(1.0 + 4.0 * snr))


def _angle_terms(osc, pump, snr):
    """cos(2 alpha_1) and sin(2 alpha_1) from the closed form, cancellation-free."""
    g2, chi2, d2 = osc.gamma**2, pump.chi**2, pump.delta**2
    th2 = d2 + g2
    p = th2 + chi2 + 4 * g2 * snr
    r = math.sqrt((th2 - chi2) ** 2 + 8 * (th2 + chi2) * g2 * snr + 16 * g2**2 * snr**2)
    cos2 = pump.delta * math.sqrt(2.0 / (p + r))
    # sin^2 = (p + r - 2 delta^2)/(p + r); rationalize when delta dominates
    q = d2 - g2 - chi2 - 4 * g2 * snr
    num = r - q if q <= 0 else 4 * g2 * (d2 * (1 + 4 * snr) - chi2) / (r + q)
    sin2 = math.sqrt(max(num, 0.0) / (p + r))
    return cos2, sin2


def _snr_form_residual(alpha, osc, pump, snr):
    """Implicit angle equation in its SNR form, and its derivative in alpha."""
    g, chi, delta = osc.gamma, pump.chi, pump.delta
    c, s = math.cos(2 * alpha), math.sin(2 * alpha)
    t = s / c
    k = chi**2 * g**2 / delta**2
    f = delta**2 * t**2 - chi**2 * s**2 + k * c**2 - g**2 * (1 + 4 * snr)
    df = 4 * delta**2 * t * (1 + t**2) - 4 * chi**2 * s * c - 4 * k * s * c
    return f, df


def conditional_angle(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> float:
    """Antisqueezing angle of the conditional covariance ellipse.

    Evaluated in closed form and refined by one Newton step on the implicit
    angle equation, kept only if it lowers the residual. A resonant drive
    (``delta = 0``) gives ``pi/4`` exactly.
    """
    _require_conditional(osc, pump, meas)
    if pump.delta == 0:
        return math.pi / 4
    snr = signal_to_noise(osc, meas)
    cos2, sin2 = _angle_terms(osc, pump, snr)
    alpha = 0.5 * math.atan2(sin2, cos2)
    if cos2 == 0.0 or pump.chi == 0.0:
        return alpha
    try:
        f, df = _snr_form_residual(alpha, osc, pump, snr)
        if df != 0 and math.isfinite(df) and math.isfinite(f):
            trial = alpha - f / df
            if 0 < abs(trial) < math.pi / 2:
                f_new, _ = _snr_form_residual(trial, osc, pump, snr)
                if abs(f_new) < abs(f):
                    alpha = trial
    except (ZeroDivisionError, OverflowError):
        # detuning so small the polish is meaningless; keep the closed form
        pass
    return alpha


def appendix_residual(
    alpha: float,
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    normalized: bool = False,
) -> float:
    """Residual of the parameter-only equation fixing the conditional angle.

    ``(delta^2 tan^2 2a - gamma^2)(1 - chi^2 cos^2 2a / delta^2) - 8 eta mu gamma (V_T + N_BA)``.
    With ``normalized=True`` it is divided by ``gamma^2 (1 + 4 SNR)``, the
    scale of the equation's terms.
    """
    if pump.delta**2 == 0:
        raise ParameterError("the angle equation needs a nonzero detuning")
    g, chi, delta = osc.gamma, pump.chi, pump.delta
    c = math.cos(2 * alpha)
    t = math.tan(2 * alpha)
    rhs = 8 * meas.eta * meas.mu * g * _effective_variance(osc, meas)
    res = (delta**2 * t**2 - g**2) * (1 - chi**2 * c**2 / delta**2) - rhs
    if normalized:
        res /= g**2 * (1 + 4 * signal_to_noise(osc, meas))
    return res


def _quadratic_root(b, d, k):
    """Positive root of ``k v^2 + 2 b v - d = 0`` without cancellation."""
    s = math.sqrt(b * b + k * d)
    if b >= 0:
        return d / (b + s)
    return (s - b) / k


def conditional_variances(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams
) -> ConditionalSolution:
    """Squeezed (X) and antisqueezed (Y) conditional variances.

    The state is the one reached with pump phase ``pi/4 - alpha_1``, where the
    covariance vanishes; ``pump.theta`` is ignored.
    """
    alpha = conditional_angle(osc, pump, meas)
    snr = signal_to_noise(osc, meas)
    g, chi = osc.gamma, pump.chi
    s = math.sin(2 * alpha)
    d = 2 * g * _effective_variance(osc, meas)
    k = 4 * meas.eta * meas.mu
    v_x = _quadratic_root(g + chi * s, d, k)
    v_y = _quadratic_root(g - chi * s, d, k)
    flags = ("resonant_drive",) if pump.delta == 0 else ()
    if pump.chi >= threshold(osc, pump):
        flags += ("on_threshold",)
    return ConditionalSolution(
        cov=CovarianceTriple(v_x, v_y, 0.0),
        squeezing=SqueezingSolution(v_x, v_y, alpha),
        snr=snr,
        v0=bare_conditional_variance(osc, meas),
        flags=flags,
    )


def conditional_pump(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> PumpParams:
    """The pump with its phase set to ``pi/4 - alpha_1``."""
    return pump.with_theta(math.pi / 4 - conditional_angle(osc, pump, meas))


def conditional_covariance(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams
) -> CovarianceTriple:
    """Conditional steady state at the pump's own phase ``pump.theta``."""
    sol = conditional_variances(osc, pump, meas)
    return rotate(sol.cov, (math.pi / 4 - sol.alpha1) - pump.theta)


def _jacobian(f, y, h=1e-7):
    y = np.asarray(y, float)
    f0 = f(y)
    jac = np.empty((y.size, y.size))
    for i in range(y.size):
        step = h * max(1.0, abs(y[i]))
        yp = y.copy()
        yp[i] += step
        jac[:, i] = (f(yp) - f0) / step
    return jac


def _is_physical_fixed_point(f, y):
    if y[0] <= 0 or y[1] <= 0 or y[0] * y[1] - y[2] ** 2 < 0:
        return False
    return bool(np.max(np.linalg.eigvals(_jacobian(f, y)).real) < 0)


def rsb_steady_state(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams, tol: float = 1e-10
) -> CovarianceTriple:
    """Conditional steady state with resolved-sideband readout, at ``pump.theta``.

    No closed form exists for ``eta < 1``; the fixed point of the variance
    equations is found by Newton iteration from the ``eta = 1`` solution
    (standard readout at a quarter of the rate), falling back to pseudo-time
    integration when that start is unusable.

    Raises
    ------
    ThresholdError
        ``chi`` at or above the sideband-cooled threshold.
    ConvergenceError
        Neither route brought the residual, relative to
        :func:`squeezeband.dynamics.term_scale`, below ``tol``.
    """
    chi_th = rsb_threshold(osc, pump, meas)
    if pump.chi >= chi_th:
        raise ThresholdError(f"chi={pump.chi:g} >= sideband-cooled threshold {chi_th:g}")

    def f(y):
        return dynamics.rsb_variance_rhs(y, osc, pump, meas)

    diagnostics = {}
    start = None
    try:
        start = conditional_covariance(osc, pump, MeasurementParams(meas.mu / 4, 1.0)).as_array()
    except (ThresholdError, ParameterError) as exc:
        diagnostics["guess"] = str(exc)
    if start is not None:
        sol = root(f, start, method="hybr", options={"xtol": 1e-14})
        y = sol.x
        if dynamics.relative_residual(f(y), y, osc, pump, meas) < tol and _is_physical_fixed_point(f, y):
            return CovarianceTriple(*y)
        diagnostics["newton"] = {"x": y.tolist(), "rhs": float(np.max(np.abs(f(y))))}

    thermal = osc.v_thermal
    flow = dynamics.integrate_variances(
        CovarianceTriple(thermal, thermal, 0.0), osc, pump, meas, kind="rsb", tol=tol
    )
    y = flow.final.as_array()
    if flow.converged and _is_physical_fixed_point(f, y):
        return flow.final
    diagnostics["integration"] = {"x": y.tolist(), "residual": flow.residual}
    raise ConvergenceError("sideband-cooled steady state not found", diagnostics)


def rsb_squeezing(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> SqueezingSolution:
    return principal_axes(rsb_steady_state(osc, pump.with_theta(math.pi / 4), meas))


def unconditional_squeezing(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams
) -> SqueezingSolution:
    return principal_axes(unconditional_steady_state(osc, pump, meas))


__all__ = [
    "ConditionalSolution",
    "appendix_residual",
    "bare_conditional_variance",
    "conditional_angle",
    "conditional_covariance",
    "conditional_pump",
    "conditional_variances",
    "covariance_from_axes",
    "principal_axes",
    "rsb_squeezing",
    "rsb_steady_state",
    "unconditional_squeezing",
    "unconditional_steady_state",
]
