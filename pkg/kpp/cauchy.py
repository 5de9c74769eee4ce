"""
cauchy.py - the Cauchy problem from step-like data.

    u_t = (-1)^(m+1) D_x^(2m) u + u (1 - u),   u(x, 0) ~ H(-x)

is integrated on a window [x_f - A, x_f + B] that follows the front. The
2m-order term is stiff (~ h^-2m) and taken implicitly, the logistic
reaction explicitly (first-order IMEX Euler):

    (I - dt L) u_new = u + dt u (1 - u)

with far-field clamps u = 1 behind the front and u = 0 ahead of it. The step
size is controlled by step doubling on a ladder dt0 * 2^k so the sparse LU
factors of (I - dt L) can be reused.

Along the run the front x_f(t) (crossing of 1/2) is recorded at every output
time. fit_shift fits x_f(t) ~ lambda0 t - k log t - c, and lyapunov_monitor
evaluates the fourth-order energy L[u], which is non-increasing:
dL/dt = -int (u_t)^2.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import log
from typing import Callable, Optional

# Import external packages
import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.integrate import quad, trapezoid
from scipy.sparse.linalg import splu

# Import functions from local modules
from kpp import stencils
from kpp.errors import (
    DependencyError,
    DomainError,
    FitError,
    InstabilityError,
    IntegrationError,
    MonitorError,
    TrackingError,
)
from kpp.model import Grid, locate_crossing
from utils.utils_logger import logger

#####################################
# Defaults
#####################################

DEFAULT_A = 150.0
DEFAULT_B = 450.0
DEFAULT_STEP_TOL = 1e-4
DEFAULT_BLOWUP = 1e3
DEFAULT_DT_MIN = 1e-10
FRONT_WINDOW = 5.0
MIN_FIT_SAMPLES = 10

#####################################
# Domain Types
#####################################


class InitialData(str, Enum):
    HEAVISIDE = "heaviside"
    SMOOTHED = "smoothed"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class CauchyConfig:
    """Window, resolution, step control and initial data of one run."""

    m: int
    T_final: float
    A: float = DEFAULT_A
    B: float = DEFAULT_B
    h: float = 0.1
    dt0: float = 0.01
    dt_max: float = 0.5
    dt_min: float = DEFAULT_DT_MIN
    step_tol: float = DEFAULT_STEP_TOL
    u0: InitialData = InitialData.HEAVISIDE
    width: Optional[float] = None
    custom_x: Optional[np.ndarray] = None
    custom_u: Optional[np.ndarray] = None
    recenter_fraction: float = 0.5
    output_interval: float = 1.0
    reaction: bool = True
    blowup_threshold: float = DEFAULT_BLOWUP
    far_left: float = 1.0
    far_right: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}.")
        if self.A <= 0 or self.B <= 0:
            raise DomainError(f"Window extents must be positive, got A={self.A}, B={self.B}.")
        if self.h <= 0 or self.T_final <= 0:
            raise DomainError("Spacing h and T_final must be positive.")
        if not 0 < self.dt_min <= self.dt0 <= self.dt_max:
            raise DomainError("Need 0 < dt_min <= dt0 <= dt_max.")
        if InitialData(self.u0) is InitialData.CUSTOM and (self.custom_x is None or self.custom_u is None):
            raise DomainError("u0=custom requires custom_x and custom_u samples.")

    @property
    def ramp_width(self) -> float:
        return self.width if self.width is not None else 2.0 * self.h

    @property
    def recenter_threshold(self) -> float:
        """Front offset from the window's left end that triggers a recenter."""
        return self.recenter_fraction * (self.A + self.B)


@dataclass
class CauchyState:
    x: np.ndarray
    u: np.ndarray
    t: float
    m: int
    far_left: float = 1.0
    far_right: float = 0.0

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    x: np.ndarray
    u: np.ndarray


@dataclass
class FrontHistory:
    """Front position and extrema at each output time."""

    times: list = field(default_factory=list)
    xf: list = field(default_factory=list)
    umax: list = field(default_factory=list)
    umin: list = field(default_factory=list)

    def record(self, t: float, xf: float, u: np.ndarray) -> None:
        if self.times and t <= self.times[-1]:
            raise DomainError(f"History times must increase; got {t} after {self.times[-1]}.")
        self.times.append(float(t))
        self.xf.append(float(xf))
        self.umax.append(float(np.max(u)))
        self.umin.append(float(np.min(u)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "xf": self.xf})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "FrontHistory":
        nan = [float("nan")] * len(frame)
        return cls(list(frame["t"]), list(frame["xf"]), list(nan), list(nan))


@dataclass
class ShiftFit:
    """x_f(t) ~ lambda0 t - k log t - c fitted over window."""

    lambda0: float
    k: float
    c: float
    window: tuple
    residual_rms: float
    samples: int
    alternatives: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BlowupReport:
    detected: bool
    t_detect: float = float("nan")
    sup_norm_at_detect: float = float("nan")


@dataclass
class SelfSimilarReport:
    t: float
    extent: float
    predicted: float
    ratio: float
    sup_error_compact: float


#####################################
# Initial Data and Stepping
#####################################


def initial_state(config: CauchyConfig, x0: float = 0.0) -> CauchyState:
    """Window [x0 - A, x0 + B] with the configured initial data."""
    grid = Grid.from_spacing(x0 - config.A, x0 + config.B, config.h)
    x = grid.nodes
    kind = InitialData(config.u0)
    if kind is InitialData.CUSTOM:
        u = np.interp(x, config.custom_x, config.custom_u, left=config.far_left, right=config.far_right)
    else:
        # Heaviside is regularized to a tanh ramp of width 2h
        ramp = 0.5 * (1.0 - np.tanh((x - x0) / config.ramp_width))
        u = config.far_right + (config.far_left - config.far_right) * ramp
    return CauchyState(x, u, 0.0, config.m, config.far_left, config.far_right)


@lru_cache(maxsize=32)
def _implicit_factor(n: int, h: float, m: int, dt: float):
    interior = stencils.linear_operator(n, h, m, with_clamps=False)
    mask = stencils.interior_mask(n, m).astype(float)
    system = sp.diags(mask) - dt * interior + stencils.clamp_rows(n, m)
    return splu(system.tocsc())


def step(state: CauchyState, dt: float, reaction: bool = True) -> CauchyState:
    """
    One IMEX Euler step: implicit 2m-order term, explicit reaction.

    Raises InstabilityError if the new state is not finite.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}.")
    u = state.u
    n, m = len(u), state.m
    mask = stencils.interior_mask(n, m).astype(float)
    rhs = mask * (u + dt * u * (1.0 - u)) if reaction else mask * u
    rhs = rhs + stencils.clamp_rhs(n, m, state.far_left, state.far_right)
    u_new = _implicit_factor(n, round(state.h, 14), m, dt).solve(rhs)
    if not np.all(np.isfinite(u_new)):
        raise InstabilityError(f"Non-finite values after a step of dt={dt} at t={state.t}.")
    return CauchyState(state.x, u_new, state.t + dt, m, state.far_left, state.far_right)


def _doubled_step(state: CauchyState, dt: float, reaction: bool):
    try:
        full = step(state, dt, reaction)
        half = step(step(state, 0.5 * dt, reaction), 0.5 * dt, reaction)
    except InstabilityError:
        return None, float("inf")
    return half, float(np.max(np.abs(full.u - half.u)))


def recenter(state: CauchyState, xf: float, A: float) -> CauchyState:
    """Shift the window right by whole nodes so the front sits A ahead of its left end."""
    shift = int(round((xf - (state.x[0] + A)) / state.h))
    if shift <= 0:
        return state
    x = state.x + shift * state.h
    u = np.concatenate([state.u[shift:], np.full(shift, state.far_right)])
    logger.debug(f"Recentered window by {shift} nodes at t={state.t:.3f}")
    return CauchyState(x, u, state.t, state.m, state.far_left, state.far_right)


#####################################
# Front Tracking
#####################################


def track_front(snapshot, level: float = 0.5, window: float = FRONT_WINDOW) -> float:
    """x_f of a snapshot: right-most downward crossing of 1/2 with u > 1/2 behind it."""
    x, u = (snapshot.x, snapshot.u) if hasattr(snapshot, "u") else snapshot
    xf = locate_crossing(x, u, level, window)
    if xf is None:
        raise TrackingError("Snapshot has no qualifying downward crossing of 1/2.")
    return xf


#####################################
# Evolution
#####################################


def evolve(config: CauchyConfig, x0: float = 0.0):
    """
    Integrate to T_final or blow-up.

    Returns (FrontHistory, snapshots, BlowupReport). A snapshot and a front
    position are recorded at each multiple of output_interval.
    """
    state = initial_state(config, x0)
    history = FrontHistory()
    snapshots = [Snapshot(0.0, state.x.copy(), state.u.copy())]
    try:
        history.record(0.0, track_front(snapshots[0]), state.u)
    except TrackingError:
        logger.warning("Initial data has no front crossing; history starts empty.")

    dt = config.dt0
    next_output = config.output_interval
    logger.info(f"Evolving m={config.m} to T={config.T_final} on {len(state.x)} nodes")
    while state.t < config.T_final - 1e-12:
        target = min(next_output, config.T_final)
        dt_try = min(dt, target - state.t)
        candidate, err = _doubled_step(state, dt_try, config.reaction)
        if candidate is None or err > config.step_tol:
            dt = 0.5 * dt_try
            if dt < config.dt_min:
                sup = float(np.max(np.abs(state.u)))
                if sup >= 10.0 or candidate is None:
                    logger.info(f"Blow-up detected at t={state.t:.6f} (dt floor), sup|u|={sup:.3e}")
                    return history, snapshots, BlowupReport(True, state.t, sup)
                raise IntegrationError(f"Step size fell below {config.dt_min} at t={state.t}.")
            continue
        state = candidate
        sup = float(np.max(np.abs(state.u)))
        if sup >= config.blowup_threshold:
            snapshots.append(Snapshot(state.t, state.x.copy(), state.u.copy()))
            logger.info(f"Blow-up detected at t={state.t:.6f}, sup|u|={sup:.3e}")
            return history, snapshots, BlowupReport(True, state.t, sup)
        if err < 0.25 * config.step_tol and dt_try == dt:
            dt = min(2.0 * dt, config.dt_max)

        if state.t >= target - 1e-12:
            snap = Snapshot(state.t, state.x.copy(), state.u.copy())
            snapshots.append(snap)
            try:
                xf = track_front(snap)
                history.record(state.t, xf, state.u)
                if xf - state.x[0] > config.recenter_threshold:
                    state = recenter(state, xf, config.A)
            except TrackingError:
                logger.warning(f"No front crossing at t={state.t:.3f}; position not recorded.")
            next_output += config.output_interval
    logger.info(f"Reached T={state.t:.3f}; front at {history.xf[-1] if history.xf else float('nan'):.4f}")
    return history, snapshots, BlowupReport(False)


def mean_speed(history: FrontHistory, t0: float, t1: float) -> float:
    """Average front speed between t0 and t1 (positions interpolated)."""
    times = np.asarray(history.times)
    xf = np.asarray(history.xf)
    if t0 < times[0] or t1 > times[-1] or t1 <= t0:
        raise DomainError(f"Interval [{t0}, {t1}] not inside recorded times.")
    return float((np.interp(t1, times, xf) - np.interp(t0, times, xf)) / (t1 - t0))


#####################################
# Shift Fitting
#####################################


def _lstsq(design: np.ndarray, values: np.ndarray):
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError("Design matrix is rank deficient; widen the fit window.")
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = values - design @ coef
    return coef, float(np.sqrt(np.mean(resid**2)))


def fit_shift(history: FrontHistory, window=None) -> ShiftFit:
    """
    Least-squares fit of x_f(t) against {t, log t, 1}.

    Returns lambda0 (coefficient of t), k (minus the coefficient of log t)
    and c (minus the constant). The default window is [T/10, T]. The
    residual RMS of the bases {t, 1} and {t, sqrt t, 1} is reported
    alongside for comparison.
    """
    times = np.asarray(history.times, dtype=float)
    xf = np.asarray(history.xf, dtype=float)
    if len(times) == 0:
        raise FitError("Front history is empty.")
    if window is None:
        window = (max(1.0, times[-1] / 10.0), times[-1])
    t_min, t_max = window
    if t_min < 1.0:
        raise FitError(f"Fit window must start at t >= 1, got {t_min}.")
    sel = (times >= t_min) & (times <= t_max) & np.isfinite(xf)
    if np.count_nonzero(sel) < MIN_FIT_SAMPLES:
        raise FitError(f"Need at least {MIN_FIT_SAMPLES} samples in [{t_min}, {t_max}], got {np.count_nonzero(sel)}.")
    t, x = times[sel], xf[sel]
    coef, rms = _lstsq(np.column_stack([t, np.log(t), np.ones_like(t)]), x)
    alternatives = {
        "t,1": _lstsq(np.column_stack([t, np.ones_like(t)]), x)[1],
        "t,sqrt(t),1": _lstsq(np.column_stack([t, np.sqrt(t), np.ones_like(t)]), x)[1],
    }
    fit = ShiftFit(float(coef[0]), float(-coef[1]), float(-coef[2]), (float(t_min), float(t_max)), rms, int(t.size), alternatives)
    logger.info(f"Shift fit: lambda0={fit.lambda0:.6f}, k={fit.k:.4f}, c={fit.c:.4f}, rms={fit.residual_rms:.3e}")
    return fit


#####################################
# Pseudo-Lyapunov Monitor (m = 2)
#####################################


def default_c_profile(x):
    """Smooth c(x) with c(-inf) = 1/6 and c(+inf) = 0."""
    return (1.0 - np.tanh(x)) / 12.0


def _settled_state(value: float, tol: float):
    """The equilibrium (0 or 1) value sits at, or None."""
    for equilibrium in (1.0, 0.0):
        if abs(value - equilibrium) <= tol:
            return equilibrium
    return None


def lyapunov_functional(snapshot: Snapshot, c_profile: Callable, x_ref: float, tail_tol: float = 1e-3) -> float:
    """
    L[u] = 1/2 int (u_xx)^2 + int (c(x) - u^2/2 + u^3/3) on [x_ref, window right].

    Behind the window u equals its settled left value e, so the stretch
    [x_ref, x_left] contributes int (c - e^2/2 + e^3/3) dx exactly.
    """
    x, u = np.asarray(snapshot.x), np.asarray(snapshot.u)
    if not np.all(np.isfinite(u)):
        raise MonitorError(f"Non-finite snapshot at t={snapshot.t}.")
    left = _settled_state(u[0], tail_tol)
    if left is None or _settled_state(u[-1], tail_tol) is None:
        raise MonitorError(f"Window too small at t={snapshot.t}: u has not settled at the ends.")
    h = x[1] - x[0]
    uxx = np.zeros_like(u)
    uxx[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    value = 0.5 * trapezoid(uxx**2, dx=h)
    value += trapezoid(c_profile(x) - 0.5 * u**2 + u**3 / 3.0, dx=h)
    if x[0] > x_ref:
        potential = 0.5 * left**2 - left**3 / 3.0
        behind, _ = quad(lambda s: float(c_profile(s)) - potential, x_ref, x[0], limit=200)
        value += behind
    return float(value)


def lyapunov_monitor(snapshots: list, c_profile: Optional[Callable] = None, m: int = 2) -> np.ndarray:
    """
    L(t) at each snapshot. Along an m=2 orbit the series is non-increasing.

    The reference left end is the first snapshot's window left end.
    """
    if m != 2:
        raise DomainError("The pseudo-Lyapunov functional is defined for m=2 only.")
    if not snapshots:
        return np.array([])
    c_profile = c_profile or default_c_profile
    x_ref = float(snapshots[0].x[0])
    return np.array([lyapunov_functional(s, c_profile, x_ref) for s in snapshots])


def is_non_increasing(series: np.ndarray, rel_tol: float = 1e-6) -> bool:
    """True if every step of series rises by at most rel_tol * |series[0]|."""
    series = np.asarray(series)
    if series.size < 2:
        return True
    tol = rel_tol * abs(series[0])
    return bool(np.all(np.diff(series) <= tol))


#####################################
# Small-time Self-similar Check
#####################################


def selfsimilar_domain_check(
    snapshot: Snapshot,
    t: float,
    profile_v=None,
    m: int = 2,
    tol: float = 0.1,
    compact: float = 5.0,
) -> SelfSimilarReport:
    """
    Compare u(x, t) with V(x / t^(1/2m)) near the origin.

    extent is the width of the connected x-region around the front where
    |u - V| <= tol; predicted is t^(1/2m) |log t|. profile_v is a pair
    (z, V) from linearized.selfsimilar_profile.
    """
    if profile_v is None:
        raise DependencyError("Self-similar profile V(z) is required; compute it with selfsimilar_profile.")
    if not 0 < t:
        raise DomainError(f"t must be positive, got {t}.")
    z_v, v = profile_v
    x, u = np.asarray(snapshot.x), np.asarray(snapshot.u)
    scale = t ** (1.0 / (2 * m))
    z = x / scale
    vz = np.interp(z, z_v, v, left=1.0, right=0.0)
    err = np.abs(u - vz)
    centre = int(np.argmin(np.abs(x)))
    good = err <= tol
    lo = hi = centre
    if good[centre]:
        while lo > 0 and good[lo - 1]:
            lo -= 1
        while hi < len(x) - 1 and good[hi + 1]:
            hi += 1
        extent = float(x[hi] - x[lo])
    else:
        extent = 0.0
    predicted = scale * abs(log(t)) if t != 1.0 else 0.0
    compact_sel = np.abs(z) <= compact
    sup_err = float(np.max(err[compact_sel])) if np.any(compact_sel) else float("nan")
    ratio = extent / predicted if predicted > 0 else float("inf")
    return SelfSimilarReport(float(t), extent, predicted, ratio, sup_err)

