"""Time-domain moment equations and their integrators.

The Gaussian state of the measured oscillator is fully described by the
conditional means of the two quadratures and their covariance triple.
Third and higher cumulants are zero by construction, so the moment
equations close exactly.

Two kinds of time-domain simulation are provided. :func:`simulate_conditional`
integrates the observer's conditional moments together with the measurement
record they generate. :func:`simulate_truth_and_record` instead simulates a
classical linear-Gaussian "true" path and a record derived from it; the two
are statistically equivalent, and the second gives a ground truth against
which filtered estimates can be scored.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, solve_continuous_lyapunov

from .covariance import CovarianceTriple
from .errors import ConvergenceError, DivergenceError, ParameterError, StepSizeError
from .params import MeasurementParams, OscillatorParams, PumpParams, signal_to_noise
from .rng import normal_blocks

log = logging.getLogger(__name__)

# Step-size rule: the fastest rate in the model times dt may not exceed this.
STEP_FRACTION = 1.0 / 50.0
# Determinant below which a simulated covariance is projected back to PSD.
PSD_CLAMP = 1e-12


@dataclass(frozen=True)
class MomentState:
    mean_x: float
    mean_y: float
    cov: CovarianceTriple


@dataclass(frozen=True)
class RsbParams:
    """Optical bath of resolved-sideband cooling: damping ``gamma_c``, occupation ``n_c``."""

    gamma_c: float = 0.0
    n_c: float = 0.0

    def __post_init__(self):
        if not (self.gamma_c >= 0 and self.n_c >= 0):
            raise ParameterError("gamma_c and n_c must be >= 0")


@dataclass(frozen=True)
class MeasurementRecord:
    """Integrated measurement increments ``dq_x``, ``dq_y`` on a grid of step ``dt``.

    Arrays are 1-D for a single trajectory or ``(n_trajectories, n_steps)``
    for a batch.
    """

    dt: float
    dq_x: np.ndarray
    dq_y: np.ndarray
    seed: int | None = None
    trajectory: int | tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if np.shape(self.dq_x) != np.shape(self.dq_y):
            raise ParameterError("dq_x and dq_y must have equal shape")
        if not (np.all(np.isfinite(self.dq_x)) and np.all(np.isfinite(self.dq_y))):
            raise ParameterError("measurement record contains non-finite entries")

    @property
    def n_steps(self) -> int:
        return np.shape(self.dq_x)[-1]

    @property
    def times(self) -> np.ndarray:
        """Start time of each increment."""
        return self.dt * np.arange(self.n_steps)


@dataclass(frozen=True)
class TruePath:
    """Ground-truth quadratures at the start of every record step."""

    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class ConditionalTrajectory:
    """Conditional moments sampled at ``t = 0, dt, ..., n_steps*dt``."""

    t: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    v_x: np.ndarray
    v_y: np.ndarray
    c: np.ndarray

    def state(self, i: int = -1) -> MomentState:
        return MomentState(
            float(self.mean_x[i]),
            float(self.mean_y[i]),
            CovarianceTriple(float(self.v_x[i]), float(self.v_y[i]), float(self.c[i])),
        )


@dataclass(frozen=True)
class VarianceFlow:
    """Output of :func:`integrate_variances`."""

    t: np.ndarray
    v_x: np.ndarray
    v_y: np.ndarray
    c: np.ndarray
    converged: bool
    residual: float  # relative to term_scale at the last sample

    @property
    def final(self) -> CovarianceTriple:
        return CovarianceTriple(float(self.v_x[-1]), float(self.v_y[-1]), float(self.c[-1]))


def _unpack(cov):
    if isinstance(cov, CovarianceTriple):
        return np.asarray(cov.v_x, float), np.asarray(cov.v_y, float), np.asarray(cov.c, float)
    v_x, v_y, c = np.asarray(cov, dtype=float)
    return v_x, v_y, c


def diffusion(osc: OscillatorParams, meas: MeasurementParams) -> float:
    """Per-quadrature diffusion rate from the thermal bath plus back-action."""
    return osc.gamma * (2.0 * osc.n_bath + 1.0) + meas.mu


def drift_matrix(osc: OscillatorParams, pump: PumpParams, extra_damping: float = 0.0) -> np.ndarray:
    """Linear drift of the quadrature means, ``d(x, y)/dt = A @ (x, y)``."""
    g = osc.gamma + extra_damping
    c2, s2 = math.cos(2 * pump.theta), math.sin(2 * pump.theta)
    return np.array(
        [
            [-(g + pump.chi * c2), -(pump.delta - pump.chi * s2)],
            [pump.delta + pump.chi * s2, -(g - pump.chi * c2)],
        ]
    )


def variance_rhs(cov, osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> np.ndarray:
    """Time derivatives ``(dV_X, dV_Y, dC)/dt`` of the conditional covariance.

    ``cov`` is a :class:`CovarianceTriple` or anything unpacking to three
    arrays; the result has shape ``(3, ...)`` matching the inputs.
    """
    v_x, v_y, c = _unpack(cov)
    g, chi, delta = osc.gamma, pump.chi, pump.delta
    c2, s2 = math.cos(2 * pump.theta), math.sin(2 * pump.theta)
    d = diffusion(osc, meas)
    k = 4.0 * meas.eta * meas.mu
    dv_x = -2 * (g + chi * c2) * v_x - 2 * (delta - chi * s2) * c + d - k * (v_x**2 + c**2)
    dv_y = -2 * (g - chi * c2) * v_y + 2 * (delta + chi * s2) * c + d - k * (v_y**2 + c**2)
    dc = -2 * g * c - delta * (v_y - v_x) + chi * s2 * (v_x + v_y) - k * c * (v_x + v_y)
    return np.array([dv_x, dv_y, dc])


def rsb_variance_rhs(cov, osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> np.ndarray:
    """Variance derivatives with good-cavity resolved-sideband readout.

    The measurement bath is a zero-temperature optical bath of rate ``mu``,
    read out by heterodyne detection of the cavity output. Written for any
    pump phase; the drive terms are those of :func:`variance_rhs`.
    """
    v_x, v_y, c = _unpack(cov)
    g, chi, delta, mu = osc.gamma, pump.chi, pump.delta, meas.mu
    c2, s2 = math.cos(2 * pump.theta), math.sin(2 * pump.theta)
    em = meas.eta * mu
    damp = 2 * g + mu
    heat = 2 * osc.n_bath * g
    ex, ey = v_x - 0.5, v_y - 0.5
    dv_x = -damp * ex - 2 * chi * c2 * v_x - 2 * (delta - chi * s2) * c + heat - em * (ex**2 + c**2)
    dv_y = -damp * ey + 2 * chi * c2 * v_y + 2 * (delta + chi * s2) * c + heat - em * (ey**2 + c**2)
    dc = -damp * c - delta * (v_y - v_x) + chi * s2 * (v_x + v_y) - em * c * (v_x + v_y - 1)
    return np.array([dv_x, dv_y, dc])


def rsb_deterministic_mean_rhs(
    state: MomentState, osc: OscillatorParams, pump: PumpParams, rsb: RsbParams
) -> np.ndarray:
    """Unconditional moment derivatives with a mechanical and an optical bath.

    Returns ``(d<X>, d<Y>, dV_X, dV_Y, dC)/dt``. Damping is ``gamma + gamma_c``
    and diffusion ``gamma(2N+1) + gamma_c(2N_c+1)``.
    """
    a = drift_matrix(osc, pump, extra_damping=rsb.gamma_c)
    m = np.array([state.mean_x, state.mean_y])
    p = state.cov.as_matrix()
    d = osc.gamma * (2 * osc.n_bath + 1) + rsb.gamma_c * (2 * rsb.n_c + 1)
    dp = a @ p + p @ a.T + d * np.eye(2)
    dm = a @ m
    return np.array([dm[0], dm[1], dp[0, 0], dp[1, 1], dp[0, 1]])


def unconditional_covariance(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> CovarianceTriple:
    """Stationary covariance with the record discarded, by a Lyapunov solve.

    Valid for any pump phase. Raises :class:`ParameterError` when the drift is
    not strictly stable.
    """
    a = drift_matrix(osc, pump)
    if np.max(np.linalg.eigvals(a).real) >= 0:
        raise ParameterError("drift is not stable; no unconditional steady state")
    p = solve_continuous_lyapunov(a, -diffusion(osc, meas) * np.eye(2))
    return CovarianceTriple.from_matrix(p)


_RHS = {"standard": variance_rhs, "rsb": rsb_variance_rhs}


def _rhs_for(kind):
    try:
        return _RHS[kind]
    except KeyError:
        raise ParameterError(f"unknown variance equation kind {kind!r}") from None


def integrate_variances(
    initial: CovarianceTriple,
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    *,
    kind: str = "standard",
    horizon: float | None = None,
    tol: float = 1e-10,
    max_time: float | None = None,
    n_samples: int = 201,
    divergence_bound: float = 1e12,
) -> VarianceFlow:
    """Integrate the deterministic variance equations.

    With ``horizon`` set, returns the flow sampled on ``n_samples`` points of
    ``[0, horizon]``. Without it, integrates until the residual
    ``max|rhs| / term_scale`` stays below ``tol`` over a full relaxation time
    ``1/gamma`` and returns the sampled history with ``converged=True``.

    Raises
    ------
    DivergenceError
        A variance exceeded ``divergence_bound * V_T``.
    ConvergenceError
        ``max_time`` passed without meeting the steady-state criterion.
    """
    rhs = _rhs_for(kind)

    def f(_t, y):
        return rhs(y, osc, pump, meas)

    scale = osc.v_thermal + meas.mu / (2 * osc.gamma)
    bound = divergence_bound * scale

    def blowup(_t, y):
        return bound - np.max(np.abs(y))

    blowup.terminal = True

    y0 = initial.as_array()
    opts = dict(method="DOP853", rtol=1e-12, atol=1e-14 * scale, events=blowup)

    if horizon is not None:
        t_eval = np.linspace(0.0, horizon, n_samples)
        sol = solve_ivp(f, (0.0, horizon), y0, t_eval=t_eval, **opts)
        if sol.status == 1:
            raise DivergenceError(
                "variances diverged", {"t": float(sol.t_events[0][0]), "bound": bound}
            )
        if not sol.success:
            raise ConvergenceError(sol.message, {"t": float(sol.t[-1]) if sol.t.size else 0.0})
        resid = relative_residual(f(0, sol.y[:, -1]), sol.y[:, -1], osc, pump, meas)
        return VarianceFlow(sol.t, *sol.y, converged=False, residual=resid)

    relax = 1.0 / osc.gamma
    max_time = 1e5 * relax if max_time is None else max_time
    ts, ys = [0.0], [y0]
    t, y = 0.0, y0
    quiet_since = None
    resid = math.inf
    while t < max_time:
        window = min(max(relax, 0.25 * t), max_time - t)
        probe = np.linspace(t, t + window, 9)[1:]
        sol = solve_ivp(f, (t, t + window), y, t_eval=probe, **opts)
        if sol.status == 1:
            raise DivergenceError(
                "variances diverged", {"t": float(sol.t_events[0][0]), "bound": bound}
            )
        if not sol.success:
            raise ConvergenceError(sol.message, {"t": t})
        for tp, yp in zip(sol.t, sol.y.T):
            resid = relative_residual(f(tp, yp), yp, osc, pump, meas)
            if resid < tol:
                quiet_since = tp if quiet_since is None else quiet_since
            else:
                quiet_since = None
        t, y = float(sol.t[-1]), sol.y[:, -1]
        ts.append(t)
        ys.append(y)
        if quiet_since is not None and t - quiet_since >= relax:
            hist = np.array(ys).T
            return VarianceFlow(np.array(ts), *hist, converged=True, residual=resid)
    raise ConvergenceError(
        "no steady state within max_time",
        {"t": t, "state": y.tolist(), "relative_residual": resid},
    )


def term_scale(y, osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> float:
    """Magnitude of the largest individual term in the variance equations at ``y``.

    Residuals are judged against this: near threshold the antisqueezed
    variance is large and roundoff in ``delta * V_Y`` alone exceeds any fixed
    absolute target.
    """
    v = float(np.max(np.abs(y)))
    rate = osc.gamma + meas.mu + pump.chi + abs(pump.delta)
    return rate * v + diffusion(osc, meas) + 4.0 * meas.eta * meas.mu * v * v


def relative_residual(rhs, y, osc, pump, meas) -> float:
    return float(np.max(np.abs(rhs))) / term_scale(y, osc, pump, meas)


def max_time_step(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams) -> float:
    """Largest step allowed for the stochastic integrators."""
    rates = (
        osc.gamma + pump.chi,
        abs(pump.delta),
        osc.gamma * (1.0 + signal_to_noise(osc, meas)),
    )
    return STEP_FRACTION / max(rates)


def _check_step(dt, osc, pump, meas):
    limit = max_time_step(osc, pump, meas)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:g} exceeds the stable step {limit:g} for these rates")


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _clamp_psd(v_x, v_y, c):
    det = v_x * v_y - c * c
    if det < -PSD_CLAMP:
        log.warning("covariance lost positivity (det=%g); projecting back", det)
        m = np.array([[v_x, c], [c, v_y]])
        w, u = np.linalg.eigh(m)
        m = (u * np.maximum(w, 1e-300)) @ u.T
        return m[0, 0], m[1, 1], m[0, 1]
    return v_x, v_y, c


def simulate_conditional_batch(
    initial: MomentState,
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    dt: float,
    n_steps: int,
    seed: int,
    trajectories,
) -> tuple[ConditionalTrajectory, MeasurementRecord]:
    """Vectorized :func:`simulate_conditional` over several trajectory indices.

    The covariance flow is deterministic and shared; means and records carry a
    leading trajectory axis.
    """
    _check_step(dt, osc, pump, meas)
    idx = list(trajectories)
    b = len(idx)
    a = drift_matrix(osc, pump)
    root = math.sqrt(4.0 * meas.eta * meas.mu)
    sqdt = math.sqrt(dt)

    def f(y):
        return variance_rhs(y, osc, pump, meas)

    means = np.empty((b, n_steps + 1, 2))
    covs = np.empty((n_steps + 1, 3))
    dq = np.empty((b, n_steps, 2))
    m = np.tile([initial.mean_x, initial.mean_y], (b, 1)).astype(float)
    p = initial.cov.as_array()
    means[:, 0], covs[0] = m, p
    for start, block in normal_blocks(seed, idx, n_steps, 2):
        dw = block * sqdt
        for j in range(dw.shape[1]):
            n = start + j
            w = dw[:, j]
            dq[:, n] = root * dt * m + w
            gain = root * np.array([[p[0], p[2]], [p[2], p[1]]])
            m = m + dt * (m @ a.T) + w @ gain.T
            p = np.array(_clamp_psd(*_rk4(f, p, dt)))
            means[:, n + 1], covs[n + 1] = m, p
    t = dt * np.arange(n_steps + 1)
    traj = ConditionalTrajectory(
        t, means[..., 0], means[..., 1], covs[:, 0], covs[:, 1], covs[:, 2]
    )
    rec = MeasurementRecord(dt, dq[..., 0], dq[..., 1], seed=seed, trajectory=tuple(idx))
    return traj, rec


def simulate_conditional(
    initial: MomentState,
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    dt: float,
    n_steps: int,
    seed: int,
    trajectory: int = 0,
) -> tuple[ConditionalTrajectory, MeasurementRecord]:
    """Simulate the observer's conditional moments and the record they produce.

    Means take Euler-Maruyama steps driven by the innovation increments
    ``dW``; covariances take fixed RK4 steps of the deterministic variance
    equations. The record is ``dQ = sqrt(4 eta mu) <quadrature> dt + dW``.

    Raises
    ------
    StepSizeError
        ``dt`` exceeds :func:`max_time_step`.
    """
    traj, rec = simulate_conditional_batch(
        initial, osc, pump, meas, dt, n_steps, seed, [trajectory]
    )
    single = ConditionalTrajectory(
        traj.t, traj.mean_x[0], traj.mean_y[0], traj.v_x, traj.v_y, traj.c
    )
    return single, MeasurementRecord(dt, rec.dq_x[0], rec.dq_y[0], seed=seed, trajectory=trajectory)


def truth_discretization(osc: OscillatorParams, pump: PumpParams, meas: MeasurementParams, dt: float):
    """Exact one-step transition ``Phi`` and noise covariance ``Qd`` of the true path."""
    a = drift_matrix(osc, pump)
    q = diffusion(osc, meas) * np.eye(2)
    # Van Loan: expm([[-A, Q], [0, A^T]] dt) = [[., Phi^-1 Qd], [0, Phi^T]]
    blk = expm(np.block([[-a, q], [np.zeros((2, 2)), a.T]]) * dt)
    phi = blk[2:, 2:].T
    qd = phi @ blk[:2, 2:]
    return phi, 0.5 * (qd + qd.T)


def simulate_truth_batch(
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    dt: float,
    n_steps: int,
    seed: int,
    trajectories,
    initial=None,
) -> tuple[TruePath, MeasurementRecord]:
    """Vectorized :func:`simulate_truth_and_record` over several trajectory indices.

    ``initial`` is an optional ``(n_trajectories, 2)`` array of starting
    quadratures (default zero). Returned arrays have a leading trajectory axis.
    """
    _check_step(dt, osc, pump, meas)
    idx = list(trajectories)
    b = len(idx)
    phi, qd = truth_discretization(osc, pump, meas, dt)
    chol = np.linalg.cholesky(qd + 1e-300 * np.eye(2))
    root = math.sqrt(4.0 * meas.eta * meas.mu)
    sqdt = math.sqrt(dt)
    x = np.empty((b, n_steps))
    y = np.empty((b, n_steps))
    dq_x = np.empty((b, n_steps))
    dq_y = np.empty((b, n_steps))
    state = np.zeros((b, 2)) if initial is None else np.array(initial, dtype=float).reshape(b, 2)
    for start, block in normal_blocks(seed, idx, n_steps, 4):
        steps = block.shape[1]
        proc = block[:, :, :2] @ chol.T
        dw = block[:, :, 2:] * sqdt
        for j in range(steps):
            n = start + j
            x[:, n] = state[:, 0]
            y[:, n] = state[:, 1]
            state = state @ phi.T + proc[:, j]
        dq_x[:, start : start + steps] = root * x[:, start : start + steps] * dt + dw[:, :, 0]
        dq_y[:, start : start + steps] = root * y[:, start : start + steps] * dt + dw[:, :, 1]
    rec = MeasurementRecord(dt, dq_x, dq_y, seed=seed, trajectory=tuple(idx))
    return TruePath(x, y), rec


def simulate_truth_and_record(
    osc: OscillatorParams,
    pump: PumpParams,
    meas: MeasurementParams,
    dt: float,
    n_steps: int,
    seed: int,
    trajectory: int = 0,
    initial=(0.0, 0.0),
) -> tuple[TruePath, MeasurementRecord]:
    """Simulate a classical ground-truth path and the record it generates.

    The true quadratures follow the mean drift of the moment equations plus
    white noise of intensity ``gamma(2N+1) + mu`` per quadrature, stepped with
    the exact Gaussian transition of that linear SDE. The record increment over
    ``[t_n, t_n + dt)`` is ``sqrt(4 eta mu) * true(t_n) * dt`` plus an
    independent Wiener increment.
    """
    path, rec = simulate_truth_batch(
        osc, pump, meas, dt, n_steps, seed, [trajectory], initial=[initial]
    )
    return (
        TruePath(path.x[0], path.y[0]),
        MeasurementRecord(dt, rec.dq_x[0], rec.dq_y[0], seed=seed, trajectory=trajectory),
    )
