"""Method-of-lines solver for

    u_t + u u_x = -d/dx g * (2 mu0 e^{-lambda t} u + u_x^2 / 2) - lambda u

on S with Fourier collocation in space and classical RK4 in time.  The state
is carried as rfft coefficients.  Tracer points q' = u(t, q) can be advanced
with the same RK4 stages (see :mod:`muhs.characteristics`).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .grid import as_field, derivative_symbol, interpolate_coefficients, make_grid, wavenumbers
from .initial_data import InitialCondition, gradient_norm
from .mollifier import mollify_field
from .operators import dx_inverse_symbol

log = logging.getLogger(__name__)

MAX_STEPS = 10_000_000
CFL_EPS = 1e-12
# "extended" runs in np.longdouble (80-bit on x86), which pushes the
# roundoff floor below the RK4 error for long tracer runs
PRECISIONS = {"double": np.float64, "extended": np.longdouble}


class BlowupGuardTriggered(RuntimeError):
    """Raised by :func:`step_rk4` when sup |u_x| exceeds the guard."""

    def __init__(self, state, threshold):
        super().__init__(f"sup|u_x| exceeded {threshold:g} at t = {state.t:.6g}")
        self.state = state
        self.threshold = threshold


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    n_points: int
    t_end: float
    dt: float | None = None
    cfl_safety: float | None = None
    dealias: bool = True
    snapshot_stride: int = 10
    blowup_guard: float | None = None
    mollify_n: int | None = None
    precision: str = "double"

    def __post_init__(self):
        make_grid(self.n_points)
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not math.isfinite(self.t_end) or self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if (self.dt is None) == (self.cfl_safety is None):
            raise ValueError("exactly one of dt and cfl_safety must be set")
        if self.dt is not None:
            if not self.dt > 0:
                raise ValueError(f"dt must be positive, got {self.dt}")
            if self.t_end / self.dt > MAX_STEPS:
                raise ValueError(f"t_end/dt = {self.t_end / self.dt:g} exceeds {MAX_STEPS} steps")
        if self.cfl_safety is not None and not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")
        if self.blowup_guard is not None and not self.blowup_guard > 0:
            raise ValueError("blowup_guard must be positive")
        if self.mollify_n is not None and self.mollify_n < 3:
            raise ValueError("mollify_n must be >= 3")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}, got {self.precision!r}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    @property
    def grid(self):
        return make_grid(self.n_points)

    def guard_for(self, mu0: float, mu1: float) -> float:
        if self.blowup_guard is not None:
            return self.blowup_guard
        return 1e3 * (abs(mu0) + mu1 + 1.0)


@dataclass(frozen=True)
class SolverState:
    t: float
    u: np.ndarray = field(repr=False)
    mu0: float
    mu1: float


@dataclass
class Trajectory:
    config: SolverConfig
    times: np.ndarray
    snapshots: np.ndarray = field(repr=False)
    steps: np.ndarray
    status: str
    mu0: float
    mu1: float
    guard_time: float | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def states(self):
        for t, u in zip(self.times, self.snapshots):
            yield SolverState(float(t), u, self.mu0, self.mu1)


@lru_cache(maxsize=32)
def dealias_mask(n_points: int) -> np.ndarray:
    """Keep |k| < N/3 (2/3 rule)."""
    mask = (3 * wavenumbers(n_points) < n_points).astype(float)
    mask.flags.writeable = False
    return mask


def _rhs_hat(t, uh, mu0, lam, dealias, n):
    ik = derivative_symbol(n)
    if dealias:
        mask = dealias_mask(n)
        uh_d = uh * mask
    else:
        mask = None
        uh_d = uh
    u = np.fft.irfft(uh_d, n)
    ux = np.fft.irfft(ik * uh_d, n)
    adv = np.fft.rfft(u * ux)
    sq = np.fft.rfft(ux * ux)
    if mask is not None:
        adv *= mask
        sq *= mask
    forcing = 2.0 * mu0 * math.exp(-lam * t) * uh + 0.5 * sq
    return -adv - dx_inverse_symbol(n) * forcing - lam * uh


def rhs(t: float, u: np.ndarray, mu0: float, lam: float, dealias: bool = True) -> np.ndarray:
    """u_t from the nonlocal form, evaluated on node values."""
    n = u.size
    return np.fft.irfft(_rhs_hat(t, np.fft.rfft(u), mu0, lam, dealias, n), n)


def _tracer_velocity(uh, n, q):
    vel, grad = interpolate_coefficients(np.stack([uh, derivative_symbol(n) * uh]), n, q)
    return vel, grad


def _rk4(t, uh, dt, mu0, lam, dealias, n, tracers=None):
    """One RK4 step; ``tracers`` is (q, log_qx) advanced with the same stages."""
    k1 = _rhs_hat(t, uh, mu0, lam, dealias, n)
    u2 = uh + 0.5 * dt * k1
    k2 = _rhs_hat(t + 0.5 * dt, u2, mu0, lam, dealias, n)
    u3 = uh + 0.5 * dt * k2
    k3 = _rhs_hat(t + 0.5 * dt, u3, mu0, lam, dealias, n)
    u4 = uh + dt * k3
    k4 = _rhs_hat(t + dt, u4, mu0, lam, dealias, n)
    new = uh + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if tracers is None:
        return new, None
    q, logqx = tracers
    a1, b1 = _tracer_velocity(uh, n, q)
    a2, b2 = _tracer_velocity(u2, n, q + 0.5 * dt * a1)
    a3, b3 = _tracer_velocity(u3, n, q + 0.5 * dt * a2)
    a4, b4 = _tracer_velocity(u4, n, q + dt * a3)
    q = q + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    logqx = logqx + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return new, (q, logqx)


def _sup_gradient(uh, n):
    return float(np.max(np.abs(np.fft.irfft(derivative_symbol(n) * uh, n))))


def step_rk4(state: SolverState, dt: float, lam: float, dealias: bool = True,
             blowup_guard: float | None = None) -> SolverState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = state.u.size
    uh, _ = _rk4(state.t, np.fft.rfft(state.u), dt, state.mu0, lam, dealias, n)
    new = SolverState(state.t + dt, np.fft.irfft(uh, n), state.mu0, state.mu1)
    if blowup_guard is not None and _sup_gradient(uh, n) > blowup_guard:
        raise BlowupGuardTriggered(new, blowup_guard)
    return new


def prepare_initial_field(config: SolverConfig, ic: InitialCondition) -> np.ndarray:
    """The field actually evolved: u0, or phi_n * u0 when mollify_n is set.

    The result is in the working precision of ``config``.  For extended runs
    build the data in long double too; a float64 u0 keeps its rounding noise.
    """
    if ic.grid.n_points != config.n_points:
        raise ValueError(
            f"initial data has {ic.grid.n_points} nodes, config asks for {config.n_points}")
    u0 = np.asarray(ic.u0, dtype=config.dtype)
    if config.mollify_n is not None:
        return mollify_field(u0, config.mollify_n)
    if ic.is_measure:
        raise ValueError("measure initial data (peakon) requires mollify_n")
    return u0.copy()


@dataclass
class _TracerLog:
    times: list
    q: list
    logqx: list


def integrate(config: SolverConfig, ic: InitialCondition, seeds=None):
    """Run the solver; returns the trajectory and, if seeds are given, the tracer log."""
    n = config.n_points
    u0 = as_field(prepare_initial_field(config, ic))
    mu0 = float(np.mean(u0))
    mu1 = gradient_norm(u0)
    guard = config.guard_for(mu0, mu1)
    lam = config.lam
    dx = 1.0 / n

    uh = np.fft.rfft(u0)
    t = 0.0
    step = 0
    times, snaps, steps = [0.0], [u0.copy()], [0]
    tracers = None
    tlog = None
    if seeds is not None:
        seeds = np.asarray(seeds, dtype=config.dtype)
        tracers = (seeds.copy(), np.zeros_like(seeds))
        tlog = _TracerLog([0.0], [seeds.copy()], [np.zeros_like(seeds)])

    status = "completed"
    guard_time = None
    if config.dt is not None:
        n_steps = max(1, int(round(config.t_end / config.dt)))
    else:
        n_steps = None

    while True:
        if n_steps is not None:
            if step >= n_steps:
                break
            # last step lands exactly on t_end
            dt = config.dt if step < n_steps - 1 else config.t_end - t
        else:
            if config.t_end - t <= 1e-14 * config.t_end:
                break
            umax = float(np.max(np.abs(np.fft.irfft(uh, n))))
            dt = min(config.cfl_safety * dx / (umax + CFL_EPS), config.t_end - t)
        uh, tracers = _rk4(t, uh, dt, mu0, lam, config.dealias, n, tracers)
        step += 1
        if n_steps is None:
            t = t + dt
        else:
            t = config.t_end if step == n_steps else step * config.dt
        if not np.all(np.isfinite(uh)):
            status, guard_time = "blowup_guard_triggered", t
            log.warning("solution became non-finite at t=%.6g", t)
            break
        if _sup_gradient(uh, n) > guard:
            status, guard_time = "blowup_guard_triggered", t
        finished = (n_steps is not None and step == n_steps) or (
            n_steps is None and config.t_end - t <= 1e-14 * config.t_end)
        if step % config.snapshot_stride == 0 or finished or status != "completed":
            times.append(t)
            snaps.append(np.fft.irfft(uh, n))
            steps.append(step)
            if tlog is not None:
                tlog.times.append(t)
                tlog.q.append(tracers[0].copy())
                tlog.logqx.append(tracers[1].copy())
        if status != "completed":
            log.warning("blow-up guard %.3g triggered at t=%.6g", guard, t)
            break

    traj = Trajectory(config, np.array(times), np.array(snaps), np.array(steps), status,
                      mu0, mu1, guard_time)
    return traj, tlog


def simulate(config: SolverConfig, ic: InitialCondition) -> Trajectory:
    traj, _ = integrate(config, ic)
    return traj


def with_mollification(config: SolverConfig, n: int | None) -> SolverConfig:
    return replace(config, mollify_n=n)
