"""Run configurations, sweeps, figure datasets and verification campaigns.

A run is described by one JSON document. Rates (``chi``, ``delta``, ``mu``)
are in units of the intrinsic damping ``gamma`` unless ``"units":
"absolute"`` is given together with an explicit ``gamma``. Every function here
returns plain data (tables or dicts); writing files is left to
:mod:`squeezeband.cli`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dynamics, filtering, steady_state
from .covariance import CovarianceTriple, principal_axes
from .errors import ConfigError, ParameterError, SqueezebandError, ThresholdError
from .parallel import ordered_map
from .params import (
    V_GROUND,
    MeasurementParams,
    OscillatorParams,
    PumpParams,
    delta_for_convention,
    derived_quantities,
    mu_for_snr,
    rsb_threshold,
    signal_to_noise,
    threshold,
)

MODES = ("steady-state", "sweep", "simulate", "filter-verify", "figure")
FIGURES = ("fig2", "fig3", "fig4", "fig5")
DETUNING_CONVENTIONS = ("at_threshold", "below_threshold")

# Model inputs a config may set or sweep.
MODEL_KEYS = ("gamma", "n_bath", "chi", "delta", "theta", "mu", "snr", "eta", "omega_m")
MODEL_DEFAULTS = {
    "gamma": 1.0, "n_bath": 0.0, "chi": 0.0, "delta": 0.0,
    "theta": math.pi / 4, "eta": 1.0, "omega_m": None,
}
TOP_KEYS = {
    "mode", "units", "params", "sweep", "seed", "dt", "n_steps", "n_trajectories",
    "out", "figure", "simulate", "filter", "steady_state",
}

DETUNING_NOTE = {
    "at_threshold": "delta = sqrt(chi^2 - gamma^2), so chi equals the threshold",
    "below_threshold": "delta = sqrt((chi + gamma)^2 - gamma^2), so the threshold is chi + gamma",
}
THETA_NOTE = "conditional quantities use pump phase theta = pi/4 - alpha_1 (X squeezed, C = 0)"


@dataclass(frozen=True)
class Axis:
    """One sweep axis: parameter name and its grid values."""

    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: dict[str, Any]
    axes: tuple[Axis, ...] = ()
    seed: int | None = None
    dt: float | None = None
    n_steps: int | None = None
    n_trajectories: int | None = None
    out: str | None = None
    figure: dict[str, Any] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)
    allow_divergence: bool = False


@dataclass(frozen=True)
class Table:
    """Column names plus rows; the unit of CSV output."""

    header: tuple[str, ...]
    rows: list[tuple]

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]


@dataclass(frozen=True)
class Model:
    osc: OscillatorParams
    pump: PumpParams
    meas: MeasurementParams
    detuning: str | None = None

    def inputs(self) -> dict[str, Any]:
        return {
            "gamma": self.osc.gamma, "n_bath": self.osc.n_bath, "chi": self.pump.chi,
            "delta": self.pump.delta, "theta": self.pump.theta, "mu": self.meas.mu,
            "eta": self.meas.eta,
        }


# -- configuration ---------------------------------------------------------


def _number(name, v, *, integer=False, positive=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{name} must be > 0")
    return int(v) if integer else float(v)


def grid_values(desc: dict, name: str = "axis") -> tuple[float, ...]:
    """Grid from ``{"grid": "linear"|"log"|"symlog", "min", "max", "count"}`` or ``{"values": [...]}``."""
    if not isinstance(desc, dict):
        raise ConfigError(f"{name}: grid must be an object")
    if "values" in desc:
        vals = desc["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{name}: values must be a nonempty list")
        return tuple(_number(name, v) for v in vals)
    kind = desc.get("grid", "linear")
    lo = _number(f"{name}.min", desc.get("min"))
    hi = _number(f"{name}.max", desc.get("max"))
    count = _number(f"{name}.count", desc.get("count"), integer=True, positive=True)
    if hi < lo:
        raise ConfigError(f"{name}: max < min")
    if kind == "linear":
        vals = np.linspace(lo, hi, count)
    elif kind == "log":
        if lo <= 0:
            raise ConfigError(f"{name}: log grid needs min > 0")
        vals = np.geomspace(lo, hi, count)
    elif kind == "symlog":
        # linear near zero, logarithmic beyond ``linthresh``
        lt = _number(f"{name}.linthresh", desc.get("linthresh", 1.0), positive=True)
        vals = lt * np.sinh(np.linspace(np.arcsinh(lo / lt), np.arcsinh(hi / lt), count))
        vals[0], vals[-1] = lo, hi
    else:
        raise ConfigError(f"{name}: unknown grid kind {kind!r}")
    if count == 1:
        vals = np.array([lo])
    return tuple(float(v) for v in vals)


def _check_params(params, where="params"):
    if not isinstance(params, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(params) - set(MODEL_KEYS) - {"detuning"}
    if unknown:
        raise ConfigError(f"{where}: unknown parameter(s) {sorted(unknown)}")
    if "mu" in params and "snr" in params:
        raise ConfigError(f"{where}: give either mu or snr, not both")


def parse_config(
    doc: dict, mode: str | None = None, seed: int | None = None, out: str | None = None
) -> RunConfig:
    """Validate a config document. Command-line ``mode``, ``seed`` and ``out`` take precedence.

    Raises
    ------
    ConfigError
        Unknown keys or parameters, empty grids, missing seed for a
        stochastic mode, or a mode mismatch.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
    doc_mode = doc.get("mode")
    if mode is not None and doc_mode is not None and doc_mode != mode:
        raise ConfigError(f"config is for mode {doc_mode!r}, not {mode!r}")
    mode = mode or doc_mode
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    units = doc.get("units", "gamma")
    if units not in ("gamma", "absolute"):
        raise ConfigError("units must be 'gamma' or 'absolute'")
    params = dict(doc.get("params", {}))
    _check_params(params)
    if units == "gamma" and params.get("gamma", 1.0) != 1.0:
        raise ConfigError("gamma is the rate unit; set units='absolute' to give it explicitly")

    axes = ()
    allow = False
    if "sweep" in doc:
        sw = doc["sweep"]
        if not isinstance(sw, dict) or not isinstance(sw.get("axes"), list) or not sw["axes"]:
            raise ConfigError("sweep.axes must be a nonempty list")
        allow = bool(sw.get("allow_divergence", False))
        parsed = []
        for i, ax in enumerate(sw["axes"]):
            name = ax.get("name") if isinstance(ax, dict) else None
            if name not in MODEL_KEYS or name == "omega_m":
                raise ConfigError(f"sweep.axes[{i}]: unknown parameter {name!r}")
            parsed.append(Axis(name, grid_values(ax, f"sweep.axes[{i}]")))
        names = [a.name for a in parsed]
        if len(set(names)) != len(names):
            raise ConfigError("sweep axes repeat a parameter")
        if "mu" in names and ("snr" in names or "snr" in params):
            raise ConfigError("sweep sets both mu and snr")
        if "snr" in names and "mu" in params:
            raise ConfigError("sweep sets both mu and snr")
        axes = tuple(parsed)
    elif mode == "sweep":
        raise ConfigError("sweep mode needs a 'sweep' section")

    seed = doc.get("seed") if seed is None else seed
    if seed is not None:
        seed = _number("seed", seed, integer=True)
        if seed < 0:
            raise ConfigError("seed must be >= 0")
    if mode in ("simulate", "filter-verify") and seed is None:
        raise ConfigError(f"mode {mode} needs a seed")

    figure = doc.get("figure", {})
    if mode == "figure":
        if not isinstance(figure, dict) or figure.get("which") not in FIGURES:
            raise ConfigError(f"figure.which must be one of {FIGURES}")
    options = {}
    for key in ("simulate", "filter", "steady_state"):
        if key in doc:
            if not isinstance(doc[key], dict):
                raise ConfigError(f"{key} must be an object")
            options.update(doc[key])
    n_steps = doc.get("n_steps")
    n_traj = doc.get("n_trajectories")
    cfg = RunConfig(
        mode=mode,
        params=dict(params, units=units),
        axes=axes,
        seed=seed,
        dt=_number("dt", doc.get("dt"), positive=True, allow_none=True),
        n_steps=_number("n_steps", n_steps, integer=True, positive=True, allow_none=True),
        n_trajectories=_number("n_trajectories", n_traj, integer=True, positive=True, allow_none=True),
        out=out if out is not None else doc.get("out"),
        figure=dict(figure),
        options=options,
        allow_divergence=allow,
    )
    if mode == "simulate" and cfg.n_steps is None:
        raise ConfigError("simulate mode needs n_steps")
    # catch bad parameter values now rather than mid-run
    if mode != "figure":
        try:
            build_model(cfg.params)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def build_model(values: dict) -> Model:
    """Parameter objects from a flat mapping of config values.

    ``delta`` may be a number or a detuning convention name
    (``"at_threshold"``, ``"below_threshold"``); ``snr`` replaces ``mu``.
    """
    v = dict(MODEL_DEFAULTS)
    v.update({k: x for k, x in values.items() if k != "units"})
    if "detuning" in v:
        v["delta"] = v.pop("detuning")
    try:
        gamma = float(v["gamma"])
        osc = OscillatorParams(gamma=gamma, n_bath=float(v["n_bath"]), omega_m=v["omega_m"])
        chi = float(v["chi"])
        convention = None
        if isinstance(v["delta"], str):
            convention = v["delta"]
            if convention not in DETUNING_CONVENTIONS:
                raise ConfigError(f"unknown detuning convention {convention!r}")
            delta = delta_for_convention(osc, chi, convention)
        else:
            delta = float(v["delta"])
        pump = PumpParams(chi=chi, delta=delta, theta=float(v["theta"]))
        eta = float(v["eta"])
        if v.get("snr") is not None:
            mu = mu_for_snr(osc, eta, float(v["snr"]))
        else:
            mu = float(v.get("mu", 0.0))
        meas = MeasurementParams(mu=mu, eta=eta)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SqueezebandError):
            raise
        raise ConfigError(f"bad parameter value: {exc}") from exc
    return Model(osc, pump, meas, convention)


# -- steady state ----------------------------------------------------------


def _triple(cov: CovarianceTriple) -> dict:
    return {"v_x": cov.v_x, "v_y": cov.v_y, "c": cov.c}


def _axes_dict(sq) -> dict:
    return {"v_minus": sq.v_minus, "v_plus": sq.v_plus, "angle": sq.angle}


def steady_state_report(model: Model, rsb: bool = False) -> dict:
    """Derived quantities plus unconditional and conditional steady states.

    The unconditional and sideband-cooled sections carry an ``error`` entry
    when they do not exist for the given parameters (e.g. unconditional state
    on threshold).

    Raises
    ------
    ThresholdError
        No conditional steady state: the drive is above threshold.
    """
    osc, pump, meas = model.osc, model.pump, model.meas
    dq = derived_quantities(osc, pump, meas)
    report: dict[str, Any] = {
        "schema": "squeezeband.steady-state/1",
        "inputs": model.inputs(),
        "detuning_convention": model.detuning,
        "derived": {
            "n_ba": dq.n_ba, "v_t": dq.v_t, "snr": dq.snr, "chi_th": dq.chi_th,
            "omega_e": dq.omega_e, "v_g": dq.v_g,
        },
        "flags": list(dq.flags),
        "conventions": {"theta": THETA_NOTE, "unconditional_theta": "pi/4"},
    }
    try:
        unc = steady_state.unconditional_steady_state(osc, pump, meas)
        report["unconditional"] = {**_triple(unc), **_axes_dict(principal_axes(unc))}
    except ThresholdError as exc:
        report["unconditional"] = {"error": str(exc)}
    sol = steady_state.conditional_variances(osc, pump, meas)
    at_pump = steady_state.conditional_covariance(osc, pump, meas)
    report["conditional"] = {
        "v_x": sol.v_x, "v_y": sol.v_y, "alpha1": sol.alpha1, "v0": sol.v0,
        "v_x_over_v0": sol.v_x / sol.v0, "flags": list(sol.flags),
        "at_pump_theta": _triple(at_pump),
    }
    if rsb:
        try:
            cov = steady_state.rsb_steady_state(osc, pump, meas)
            report["rsb"] = {**_triple(cov), **_axes_dict(principal_axes(cov)),
                             "chi_th": rsb_threshold(osc, pump, meas)}
        except SqueezebandError as exc:
            report["rsb"] = {"error": str(exc)}
    return report


# -- sweeps ----------------------------------------------------------------

SWEEP_HEADER = (
    "index", "gamma", "n_bath", "chi", "delta", "theta", "mu", "eta", "detuning",
    "snr", "chi_th", "v_t", "n_ba", "v_x", "v_y", "alpha1", "v0", "v_x_over_v0",
    "flags", "error",
)


def _grid_points(cfg: RunConfig):
    names = [a.name for a in cfg.axes]
    for idx, combo in enumerate(itertools.product(*(a.values for a in cfg.axes))):
        values = dict(cfg.params)
        if "snr" in names:
            values.pop("mu", None)
        if "mu" in names:
            values.pop("snr", None)
        values.update(zip(names, combo))
        yield idx, values


def _sweep_row(item) -> tuple:
    idx, values = item
    try:
        model = build_model(values)
    except SqueezebandError as exc:
        return (idx,) + (None,) * (len(SWEEP_HEADER) - 3) + ("", f"{type(exc).__name__}: {exc}")
    osc, pump, meas = model.osc, model.pump, model.meas
    base = (
        idx, osc.gamma, osc.n_bath, pump.chi, pump.delta, pump.theta, meas.mu, meas.eta,
        model.detuning or "", signal_to_noise(osc, meas), threshold(osc, pump),
        osc.v_thermal, meas.mu / (2 * osc.gamma),
    )
    try:
        sol = steady_state.conditional_variances(osc, pump, meas)
    except SqueezebandError as exc:
        return base + (None,) * 5 + ("", f"{type(exc).__name__}: {exc}")
    flags = tuple(sol.flags) + derived_quantities(osc, pump, meas).flags
    return base + (sol.v_x, sol.v_y, sol.alpha1, sol.v0, sol.v_x / sol.v0, flags, "")


def run_sweep(cfg: RunConfig) -> Table:
    """Cartesian sweep of the conditional steady state, one row per grid point.

    Rows are ordered by grid index (last axis fastest). A point that fails is
    kept with its error message. Without ``allow_divergence`` a grid reaching
    above threshold is rejected up front.
    """
    points = list(_grid_points(cfg))
    if not cfg.allow_divergence:
        for idx, values in points:
            try:
                m = build_model(values)
            except SqueezebandError:
                continue
            if m.pump.chi > threshold(m.osc, m.pump) * (1 + steady_state.THRESHOLD_RTOL):
                raise ConfigError(
                    f"grid point {idx} is above threshold; set sweep.allow_divergence to keep it"
                )
    return Table(SWEEP_HEADER, ordered_map(_sweep_row, points))


# -- simulation ------------------------------------------------------------


def _initial_state(model: Model, desc) -> dynamics.MomentState:
    if desc is None or desc == "thermal":
        v = model.osc.v_thermal
        return dynamics.MomentState(0.0, 0.0, CovarianceTriple(v, v, 0.0))
    if desc == "conditional":
        cov = steady_state.conditional_covariance(model.osc, model.pump, model.meas)
        return dynamics.MomentState(0.0, 0.0, cov)
    if isinstance(desc, dict):
        try:
            return dynamics.MomentState(
                float(desc.get("mean_x", 0.0)), float(desc.get("mean_y", 0.0)),
                CovarianceTriple(float(desc["v_x"]), float(desc["v_y"]), float(desc.get("c", 0.0))),
            )
        except (KeyError, TypeError, ParameterError) as exc:
            raise ConfigError(f"bad initial state: {exc}") from exc
    raise ConfigError("initial must be 'thermal', 'conditional' or an object")


def run_simulate(cfg: RunConfig) -> dict[str, Table]:
    """Stochastic trajectories and their measurement records.

    ``simulate.kind`` selects ``"conditional"`` (observer's moments, default)
    or ``"truth"`` (classical ground-truth path). Returns ``{"trajectory":
    ..., "record": ...}`` for the conditional kind and ``{"truth": ...}`` for
    the other; with several trajectories a leading ``trajectory`` column is
    added.
    """
    model = build_model(cfg.params)
    osc, pump, meas = model.osc, model.pump, model.meas
    kind = cfg.options.get("kind", "conditional")
    dt = cfg.dt or dynamics.max_time_step(osc, pump, meas)
    n = cfg.n_steps
    n_traj = cfg.n_trajectories or 1
    idx = list(range(n_traj))
    multi = n_traj > 1
    lead = ("trajectory",) if multi else ()

    def rows(i, cols):
        pre = (i,) if multi else ()
        return [pre + tuple(r) for r in zip(*cols)]

    if kind == "conditional":
        init = _initial_state(model, cfg.options.get("initial"))
        traj, rec = dynamics.simulate_conditional_batch(init, osc, pump, meas, dt, n, cfg.seed, idx)
        t_rows, r_rows = [], []
        for b in range(n_traj):
            t_rows += rows(b, (traj.t, traj.mean_x[b], traj.mean_y[b], traj.v_x, traj.v_y, traj.c))
            r_rows += rows(b, (rec.times, rec.dq_x[b], rec.dq_y[b]))
        return {
            "trajectory": Table(lead + ("t", "mean_x", "mean_y", "v_x", "v_y", "c"), t_rows),
            "record": Table(lead + ("t", "dq_x", "dq_y"), r_rows),
        }
    if kind == "truth":
        path, rec = dynamics.simulate_truth_batch(osc, pump, meas, dt, n, cfg.seed, idx)
        out = []
        for b in range(n_traj):
            out += rows(b, (rec.times, path.x[b], path.y[b], rec.dq_x[b], rec.dq_y[b]))
        return {"truth": Table(lead + ("t", "x", "y", "dq_x", "dq_y"), out)}
    raise ConfigError(f"simulate.kind must be 'conditional' or 'truth', got {kind!r}")


# -- filter verification ---------------------------------------------------

FILTER_RTOL = 0.05


def run_filter_verify(cfg: RunConfig) -> dict:
    """Monte-Carlo check that the stationary filter's MSE equals the conditional variances.

    The JSON-ready report holds the inputs, filter constants, empirical
    MSEs with standard errors, targets, relative errors, the exact
    (Lyapunov) error covariance and an overall ``passed`` flag at 5%.
    """
    model = build_model(cfg.params)
    osc, pump, meas = model.osc, model.pump, model.meas
    if meas.eta * meas.mu == 0:
        raise ConfigError("filter-verify needs eta * mu > 0: the record carries no information")
    opts = cfg.options
    rtol = float(opts.get("rtol", FILTER_RTOL))
    rep = filtering.filter_mse_ensemble(
        osc, pump, meas,
        n_trajectories=cfg.n_trajectories or int(opts.get("n_trajectories", 500)),
        seed=cfg.seed,
        dt=cfg.dt,
        horizon=opts.get("horizon"),
        transient=opts.get("transient"),
    )
    fp = filtering.filter_params(osc, pump, meas)
    exact = filtering.stationary_error_covariance(osc, pump, meas, fp)
    ex, ey = rep.relative_error()
    finite = bool(np.all(np.isfinite(rep.per_trajectory_x)) and np.all(np.isfinite(rep.per_trajectory_y)))
    return {
        "schema": "squeezeband.filter-verify/1",
        "inputs": model.inputs(),
        "detuning_convention": model.detuning,
        "seed": cfg.seed,
        "snr": signal_to_noise(osc, meas),
        "filter": {
            "gamma_f": fp.gamma_f, "omega_f": fp.omega_f, "phi": fp.phi,
            "gamma_x": fp.gamma_x, "gamma_y": fp.gamma_y, "alpha1": fp.alpha1,
            "g_xx": fp.g_xx, "g_xy": fp.g_xy, "g_yy": fp.g_yy, "g_yx": fp.g_yx,
            "flags": list(fp.flags),
        },
        "simulation": {
            "n_trajectories": rep.n_trajectories, "dt": rep.dt, "n_steps": rep.n_steps,
            "transient_steps": rep.transient_steps, "all_finite": finite,
        },
        "target": {"v_x": rep.target_x, "v_y": rep.target_y},
        "mse": {"x": rep.mse_x, "y": rep.mse_y},
        "standard_error": {"x": rep.se_x, "y": rep.se_y},
        "relative_error": {"x": ex, "y": ey},
        "exact_error_covariance": {"v_x": exact[0, 0], "v_y": exact[1, 1], "c": exact[0, 1]},
        "rtol": rtol,
        "passed": bool(finite and rep.passed(rtol)),
    }


# -- figures ---------------------------------------------------------------

SNR_GRID = {"grid": "log", "min": 1e-3, "max": 1e4, "count": 141}


def _fig_grid(over: dict, key: str, default: dict) -> tuple[float, ...]:
    desc = dict(default)
    desc.update(over.get(key, {}))
    return grid_values(desc, f"figure.{key}")


def _fig_list(over, key, default):
    vals = over.get(key, default)
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"figure.{key} must be a nonempty list")
    return vals


def _figure_overrides(over: dict, allowed: set):
    unknown = set(over) - allowed - {"which"}
    if unknown:
        raise ConfigError(f"figure: unknown override(s) {sorted(unknown)}")


def figure2(over: dict) -> dict:
    """Conditional angle and squeezing ratio against SNR."""
    _figure_overrides(over, {"snr", "chi", "detuning", "n_bath", "eta"})
    snrs = _fig_grid(over, "snr", SNR_GRID)
    chis = _fig_list(over, "chi", [10.0, 100.0])
    convs = _fig_list(over, "detuning", list(DETUNING_CONVENTIONS))
    n_bath, eta = float(over.get("n_bath", 0.0)), float(over.get("eta", 1.0))
    header = ("chi", "detuning", "delta", "n_bath", "eta", "snr", "mu", "alpha1", "v_x", "v0", "v_x_over_v0")
    rows = []
    for chi in chis:
        for conv in convs:
            for snr in snrs:
                m = build_model({"chi": chi, "delta": conv, "n_bath": n_bath, "eta": eta, "snr": snr})
                sol = steady_state.conditional_variances(m.osc, m.pump, m.meas)
                rows.append((float(chi), conv, m.pump.delta, n_bath, eta, snr, m.meas.mu,
                             sol.alpha1, sol.v_x, sol.v0, sol.v_x / sol.v0))
    meta = {"figure": "fig2", "detuning": {c: DETUNING_NOTE[c] for c in convs}, "theta": THETA_NOTE}
    return {"data": Table(header, rows), "meta": meta}


def figure3(over: dict) -> dict:
    """Driven squeezed variance and undriven conditional variance over thermal variance."""
    _figure_overrides(over, {"snr", "chi", "n_bath", "eta"})
    snrs = _fig_grid(over, "snr", SNR_GRID)
    chi = float(over.get("chi", 100.0))
    ns = _fig_list(over, "n_bath", [100.0, 1.0, 0.0])
    eta = float(over.get("eta", 1.0))
    header = ("curve", "n_bath", "chi", "delta", "eta", "snr", "mu", "v_t", "v", "v_over_vt")
    rows = []
    for n in ns:
        for snr in snrs:
            m = build_model({"chi": chi, "delta": "at_threshold", "n_bath": n, "eta": eta, "snr": snr})
            sol = steady_state.conditional_variances(m.osc, m.pump, m.meas)
            vt = m.osc.v_thermal
            rows.append(("driven", float(n), chi, m.pump.delta, eta, snr, m.meas.mu, vt, sol.v_x, sol.v_x / vt))
            rows.append(("undriven", float(n), 0.0, 0.0, eta, snr, m.meas.mu, vt, sol.v0, sol.v0 / vt))
    meta = {"figure": "fig3", "detuning": {"at_threshold": DETUNING_NOTE["at_threshold"]}, "theta": THETA_NOTE}
    return {"data": Table(header, rows), "meta": meta}


def figure4(over: dict) -> dict:
    """Squeezed variance over ground-state variance on an (N, mu) grid."""
    _figure_overrides(over, {"n_bath", "mu", "chi", "delta", "eta"})
    ns = _fig_grid(over, "n_bath", {"grid": "symlog", "min": 0.0, "max": 100.0, "count": 101, "linthresh": 1.0})
    mus = _fig_grid(over, "mu", {"grid": "log", "min": 1e-2, "max": 1e2, "count": 101})
    chi = float(over.get("chi", 100.0))
    delta = over.get("delta", 100.0)
    eta = float(over.get("eta", 1.0))
    header = ("n_bath", "mu", "chi", "delta", "eta", "snr", "v_x", "v_x_over_vg", "backaction_dominant")
    rows = []
    for n in ns:
        for mu in mus:
            m = build_model({"chi": chi, "delta": delta, "n_bath": n, "eta": eta, "mu": mu})
            sol = steady_state.conditional_variances(m.osc, m.pump, m.meas)
            rows.append((n, mu, chi, m.pump.delta, eta, sol.snr, sol.v_x, sol.v_x / V_GROUND,
                         mu / m.osc.gamma > n + 0.5))
    overlay = Table(("n_bath", "mu_backaction"), [(n, n + 0.5) for n in ns])
    meta = {"figure": "fig4", "overlay": "mu/gamma = N + 1/2", "theta": THETA_NOTE}
    return {"data": Table(header, rows), "overlay": overlay, "meta": meta}


def _fig5_row(args):
    model_name, m = args
    osc, pump, meas = m.osc, m.pump, m.meas
    try:
        if model_name == "standard":
            v = steady_state.conditional_variances(osc, pump, meas).v_x
        else:
            v = steady_state.rsb_squeezing(osc, pump, meas).v_minus
        err = ""
    except SqueezebandError as exc:
        v, err = None, f"{type(exc).__name__}: {exc}"
    ratio = None if v is None else v / V_GROUND
    return (model_name, osc.n_bath, pump.chi, pump.delta, meas.eta, meas.mu, v, ratio, err)


def figure5(over: dict) -> dict:
    """Squeezed variance over ground-state variance against mu, standard vs sideband-cooled readout."""
    _figure_overrides(over, {"mu", "chi", "detuning", "n_bath", "eta"})
    mus = _fig_grid(over, "mu", {"grid": "log", "min": 1e-2, "max": 1e3, "count": 121})
    chi = float(over.get("chi", 100.0))
    conv = over.get("detuning", "below_threshold")
    n_bath = float(over.get("n_bath", 0.0))
    eta = float(over.get("eta", 0.1))
    jobs = []
    for name in ("standard", "rsb"):
        for mu in mus:
            jobs.append((name, build_model({"chi": chi, "delta": conv, "n_bath": n_bath, "eta": eta, "mu": mu})))
    header = ("model", "n_bath", "chi", "delta", "eta", "mu", "v_minus", "v_minus_over_vg", "error")
    meta = {"figure": "fig5", "theta": THETA_NOTE,
            "detuning": {conv: DETUNING_NOTE.get(conv, "explicit value")}}
    return {"data": Table(header, ordered_map(_fig5_row, jobs)), "meta": meta}


FIGURE_BUILDERS = {"fig2": figure2, "fig3": figure3, "fig4": figure4, "fig5": figure5}


def run_figure(which: str, overrides: dict | None = None) -> dict:
    """Dataset(s) behind a figure: ``{"data": Table, "meta": dict, ...}``.

    Raises
    ------
    ConfigError
        Unknown figure or override.
    """
    if which not in FIGURE_BUILDERS:
        raise ConfigError(f"figure must be one of {FIGURES}, got {which!r}")
    over = dict(overrides or {})
    try:
        return FIGURE_BUILDERS[which](over)
    except (TypeError, ParameterError, ThresholdError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad figure override: {exc}") from exc
