"""Characteristics q_t = u(t, q), q(0, x) = x, integrated alongside the PDE.

q_x is carried as exp(int_0^t u_x(s, q(s, x)) ds), the integral advanced by
the same RK4 stages that advance u.  Along characteristics
y(t, q) q_x^2 = y0(x) e^{-lambda t}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import SolverConfig, Trajectory, integrate
from .grid import interpolate
from .initial_data import InitialCondition
from .operators import apply_A

DEFAULT_SEEDS = 16


@dataclass
class CharacteristicsTrack:
    """q is stored lifted to R (not reduced mod 1)."""

    seeds: np.ndarray
    times: np.ndarray
    q: np.ndarray = field(repr=False)
    qx: np.ndarray = field(repr=False)
    y_along: np.ndarray = field(repr=False)
    trajectory: Trajectory = field(repr=False)


def default_seeds(count: int = DEFAULT_SEEDS) -> np.ndarray:
    return np.arange(count) / count


def advect(config: SolverConfig, ic: InitialCondition, seeds=None) -> CharacteristicsTrack:
    seeds = default_seeds() if seeds is None else np.asarray(seeds, dtype=float)
    if seeds.ndim != 1 or seeds.size == 0:
        raise ValueError("seeds must be a non-empty 1-D sequence")
    if np.any(seeds < 0) or np.any(seeds >= 1):
        raise ValueError("seeds must lie in [0, 1)")
    traj, tlog = integrate(config, ic, seeds)
    q = np.array(tlog.q)
    qx = np.exp(np.array(tlog.logqx))
    if not np.all(np.isfinite(qx)) or np.any(qx <= 0):
        raise FloatingPointError("q_x lost positivity; the time step is too coarse")
    y_along = np.array([interpolate(apply_A(u), qs) for u, qs in zip(traj.snapshots, q)])
    return CharacteristicsTrack(seeds, traj.times.copy(), q, qx, y_along, traj)


def conserved_density_residual(track: CharacteristicsTrack,
                               trajectory: Trajectory | None = None) -> np.ndarray:
    """r(t, x) = y(t, q(t, x)) q_x^2 - y0(x) e^{-lambda t}, one row per time."""
    traj = track.trajectory if trajectory is None else trajectory
    if traj.times.shape != track.times.shape or not np.array_equal(traj.times, track.times):
        raise ValueError("track and trajectory are sampled at different times")
    y0 = interpolate(apply_A(traj.snapshots[0]), track.seeds)
    decay = np.exp(-traj.config.lam * track.times)[:, None]
    return track.y_along * track.qx**2 - y0[None, :] * decay


def order_preserved(track: CharacteristicsTrack) -> bool:
    """Sorted seeds stay sorted and within one period of each other."""
    order = np.argsort(track.seeds)
    q = track.q[:, order]
    gaps = np.diff(q, axis=1)
    span = q[:, -1] - q[:, 0]
    return bool(np.all(gaps > 0) and np.all(span < 1))


def qx_finite_difference(track: CharacteristicsTrack) -> np.ndarray:
    """Centered difference of q across neighbouring seeds (equispaced seeds only).

    Uses q(t, x + 1) = q(t, x) + 1 to wrap around the circle.
    """
    seeds = track.seeds
    h = 1.0 / seeds.size
    if not np.allclose(np.diff(seeds), h):
        raise ValueError("finite-difference q_x needs equispaced seeds covering S")
    q = track.q
    ahead = np.roll(q, -1, axis=1)
    ahead[:, -1] += 1.0
    behind = np.roll(q, 1, axis=1)
    behind[:, 0] -= 1.0
    return (ahead - behind) / (2.0 * h)
