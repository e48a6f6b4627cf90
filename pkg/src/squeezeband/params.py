"""Physical parameters of the driven, measured oscillator and scalar diagnostics.

All rates (damping, drive, detuning, measurement) share one arbitrary unit;
every closed form downstream is homogeneous of degree one in the rates, so
only ratios such as ``chi/gamma`` matter. Variances are in quadrature units
where the ground state has variance 1/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ParameterError, ValidityWarning

#: Ground-state variance of either quadrature.
V_GROUND = 0.5

# Validity regimes of the rotating-wave and bad-cavity approximations.
_RWA_MARGIN = 10.0


def _finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical mode: damping ``gamma``, bath occupation ``n_bath``, optional ``omega_m``."""

    gamma: float = 1.0
    n_bath: float = 0.0
    omega_m: float | None = None
    flags: tuple[str, ...] = field(default=(), init=False, compare=False)

    def __post_init__(self):
        _finite("gamma", self.gamma)
        _finite("n_bath", self.n_bath)
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.n_bath < 0:
            raise ParameterError(f"n_bath must be >= 0, got {self.n_bath}")
        flags = []
        if self.omega_m is not None:
            _finite("omega_m", self.omega_m)
            if self.omega_m <= 0:
                raise ParameterError(f"omega_m must be > 0, got {self.omega_m}")
            if self.omega_m < _RWA_MARGIN * self.gamma:
                flags.append("low_q")
                warnings.warn(
                    f"omega_m/gamma = {self.omega_m / self.gamma:g} < {_RWA_MARGIN:g}; "
                    "rotating-wave treatment of the quadratures is questionable",
                    ValidityWarning,
                    stacklevel=3,
                )
        object.__setattr__(self, "flags", tuple(flags))

    @property
    def quality_factor(self) -> float | None:
        return None if self.omega_m is None else self.omega_m / self.gamma

    @property
    def v_thermal(self) -> float:
        return self.n_bath + 0.5


@dataclass(frozen=True)
class PumpParams:
    """Parametric drive of strength ``chi``, detuning ``delta`` and phase ``theta``.

    ``theta`` is reduced modulo pi on construction since the drive enters
    only through ``2*theta``.
    """

    chi: float = 0.0
    delta: float = 0.0
    theta: float = math.pi / 4

    def __post_init__(self):
        for name in ("chi", "delta", "theta"):
            _finite(name, getattr(self, name))
        if self.chi < 0:
            raise ParameterError(f"chi must be >= 0, got {self.chi}")
        theta = math.fmod(self.theta, math.pi) % math.pi
        # a tiny negative input rounds up to exactly pi
        object.__setattr__(self, "theta", 0.0 if theta >= math.pi else theta)

    def with_theta(self, theta: float) -> PumpParams:
        return PumpParams(self.chi, self.delta, theta)


@dataclass(frozen=True)
class MeasurementParams:
    """Continuous measurement at rate ``mu`` with detection efficiency ``eta``."""

    mu: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        _finite("mu", self.mu)
        _finite("eta", self.eta)
        if self.mu < 0:
            raise ParameterError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class CavityParams:
    """Optomechanical cavity used to derive the measurement rate (bad-cavity limit)."""

    g: float
    nbar: float
    kappa: float
    x_zpf: float
    omega_m: float | None = None
    flags: tuple[str, ...] = field(default=(), init=False, compare=False)

    def __post_init__(self):
        for name in ("g", "nbar", "kappa", "x_zpf"):
            value = getattr(self, name)
            _finite(name, value)
            if value <= 0:
                raise ParameterError(f"{name} must be > 0, got {value}")
        flags = []
        if self.omega_m is not None and self.kappa < _RWA_MARGIN * self.omega_m:
            flags.append("not_bad_cavity")
            warnings.warn(
                f"kappa/omega_m = {self.kappa / self.omega_m:g}; the measurement-rate "
                "formula assumes kappa >> omega_m",
                ValidityWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "flags", tuple(flags))


@dataclass(frozen=True)
class DerivedQuantities:
    n_ba: float
    v_t: float
    snr: float
    chi_th: float
    omega_e: float | None
    v_g: float = V_GROUND
    flags: tuple[str, ...] = ()


def measurement_rate_from_cavity(cav: CavityParams) -> float:
    """Measurement rate ``8 g^2 x_zpf^2 nbar / kappa`` of a bad-cavity readout."""
    return 8.0 * cav.g**2 * cav.x_zpf**2 * cav.nbar / cav.kappa


def chi_from_spring(omega_m: float, k_r: float, k_0: float) -> float:
    """Drive strength from a spring-constant modulation ``k_r`` on top of ``k_0``."""
    if not k_0 > 0:
        raise ParameterError(f"k_0 must be > 0, got {k_0}")
    if k_r < 0:
        raise ParameterError(f"k_r must be >= 0, got {k_r}")
    if k_r > k_0:
        warnings.warn(
            f"k_r/k_0 = {k_r / k_0:g} > 1: modulation exceeds the static spring",
            ValidityWarning,
            stacklevel=2,
        )
    return omega_m * k_r / (2.0 * k_0)


def back_action_phonons(osc: OscillatorParams, meas: MeasurementParams) -> float:
    return meas.mu / (2.0 * osc.gamma)


def signal_to_noise(osc: OscillatorParams, meas: MeasurementParams) -> float:
    """Ratio of mechanical signal to shot noise, ``2 eta mu (V_T + N_BA) / gamma``."""
    v = osc.v_thermal + back_action_phonons(osc, meas)
    return 2.0 * meas.eta * meas.mu * v / osc.gamma


def threshold(osc: OscillatorParams, pump: PumpParams) -> float:
    return math.hypot(osc.gamma, pump.delta)


def rsb_threshold(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> float:
    """Instability threshold with the extra optical damping of sideband cooling."""
    return math.hypot(osc.gamma + meas.mu / 2.0, pump.delta)


def elliptical_frequency(pump: PumpParams) -> float | None:
    """Rotation frequency of the mean in phase space; None unless ``chi^2 < delta^2``."""
    if pump.chi**2 < pump.delta**2:
        return math.sqrt(pump.delta**2 - pump.chi**2)
    return None


def validity_flags(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> tuple[str, ...]:
    flags = list(osc.flags)
    if osc.omega_m is not None:
        if meas.mu >= osc.omega_m / _RWA_MARGIN:
            flags.append("rwa_mu")
        if pump.chi >= osc.omega_m / _RWA_MARGIN:
            flags.append("rwa_chi")
    return tuple(flags)


def derived_quantities(
    osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams
) -> DerivedQuantities:
    return DerivedQuantities(
        n_ba=back_action_phonons(osc, meas),
        v_t=osc.v_thermal,
        snr=signal_to_noise(osc, meas),
        chi_th=threshold(osc, pump),
        omega_e=elliptical_frequency(pump),
        flags=validity_flags(osc, pump, meas),
    )


def mu_for_snr(osc: OscillatorParams, eta: float, snr: float) -> float:
    """Measurement rate that yields ``snr`` at efficiency ``eta``.

    Solves ``eta mu^2/gamma^2 + 2 eta mu V_T/gamma = snr`` for the positive root.
    """
    if snr < 0:
        raise ParameterError(f"snr must be >= 0, got {snr}")
    if snr == 0:
        return 0.0
    if eta <= 0:
        raise ParameterError("a positive SNR needs eta > 0")
    v_t = osc.v_thermal
    # rationalized root: no cancellation when snr/eta << v_t^2
    return osc.gamma * (snr / eta) / (v_t + math.sqrt(v_t**2 + snr / eta))


def detuning_at_threshold(osc: OscillatorParams, chi: float) -> float:
    """Detuning that puts ``chi`` exactly on threshold, ``sqrt(chi^2 - gamma^2)``."""
    if chi < osc.gamma:
        raise ParameterError(f"chi={chi} < gamma={osc.gamma}: no detuning puts it on threshold")
    return math.sqrt(chi**2 - osc.gamma**2)


def detuning_below_threshold(osc: OscillatorParams, chi: float, margin: float | None = None) -> float:
    """Detuning whose threshold sits ``margin`` (default gamma) above ``chi``."""
    margin = osc.gamma if margin is None else margin
    return math.sqrt((chi + margin) ** 2 - osc.gamma**2)


def delta_for_convention(osc: OscillatorParams, chi: float, convention: str) -> float:
    if convention == "at_threshold":
        return detuning_at_threshold(osc, chi)
    if convention == "below_threshold":
        return detuning_below_threshold(osc, chi)
    raise ParameterError(f"unknown detuning convention {convention!r}")
