"""Uniform periodic grid on the unit circle and spectral calculus on it.

Fields are plain 1-D float arrays holding node values; the grid they live on
is implied by their length.  All transforms use the real FFT.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MIN_POINTS = 8


@dataclass(frozen=True)
class PeriodicGrid:
    """Nodes x_j = j/N, j = 0..N-1, on S = R/Z."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError(f"n_points must be an integer, got {n!r}")
        if n < MIN_POINTS or n % 2:
            raise ValueError(f"n_points must be even and >= {MIN_POINTS}, got {n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return self.coordinates()

    def coordinates(self, dtype=np.float64) -> np.ndarray:
        """Nodes in the requested floating type (``np.longdouble`` for extended runs)."""
        return np.arange(self.n_points, dtype=dtype) / dtype(self.n_points)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func`` at the nodes and return a field."""
        return as_field(np.broadcast_to(func(self.nodes), (self.n_points,)), self)


def make_grid(n_points: int) -> PeriodicGrid:
    if isinstance(n_points, np.integer):
        n_points = int(n_points)
    return PeriodicGrid(n_points)


def as_field(values, grid: PeriodicGrid | None = None) -> np.ndarray:
    """Validate node values; float64 and long double are kept, anything else becomes float64."""
    f = np.array(values)
    if f.dtype not in (np.float64, np.longdouble):
        f = f.astype(float)
    if f.ndim != 1:
        raise ValueError("a field is a 1-D array of node values")
    if grid is not None and f.size != grid.n_points:
        raise ValueError(f"field has {f.size} values, grid has {grid.n_points} nodes")
    if f.size < MIN_POINTS or f.size % 2:
        raise ValueError(f"field length must be even and >= {MIN_POINTS}, got {f.size}")
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")
    return f


@lru_cache(maxsize=32)
def wavenumbers(n_points: int) -> np.ndarray:
    """Integer wavenumbers 0..N/2 matching ``np.fft.rfft`` output."""
    k = np.arange(n_points // 2 + 1, dtype=float)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=32)
def derivative_symbol(n_points: int) -> np.ndarray:
    """Multiplier 2*pi*i*k with the Nyquist entry zeroed."""
    sym = 2j * np.pi * wavenumbers(n_points)
    sym[-1] = 0.0
    sym.flags.writeable = False
    return sym


@lru_cache(maxsize=32)
def second_derivative_symbol(n_points: int) -> np.ndarray:
    """Multiplier -(2*pi*k)^2, Nyquist kept so that A stays invertible."""
    sym = -((2.0 * np.pi * wavenumbers(n_points)) ** 2)
    sym.flags.writeable = False
    return sym


def derivative(f: np.ndarray) -> np.ndarray:
    n = f.size
    return np.fft.irfft(derivative_symbol(n) * np.fft.rfft(f), n)


def second_derivative(f: np.ndarray) -> np.ndarray:
    n = f.size
    return np.fft.irfft(second_derivative_symbol(n) * np.fft.rfft(f), n)


def mean(f: np.ndarray) -> float:
    """Rectangle-rule mean, i.e. the integral over S for resolved fields."""
    return float(np.mean(f))


def l2_norm(f: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(f))))


def l1_norm(f: np.ndarray) -> float:
    return float(np.mean(np.abs(f)))


def interpolate(f: np.ndarray, x) -> np.ndarray | float:
    """Trigonometric interpolant of the node values evaluated at ``x`` (mod 1).

    The Nyquist coefficient enters as a cosine so the interpolant is real and
    reproduces the node values.
    """
    coeffs = np.fft.rfft(f)
    return interpolate_coefficients(coeffs, f.size, x)


def _fourier_phases(xs: np.ndarray, n_modes: int, block: int = 16) -> np.ndarray:
    """exp(2 pi i k x) for k = 0..n_modes-1, shape (len(xs), n_modes).

    Built as exp(2 pi i block a x) * exp(2 pi i b x) with k = block a + b, which
    needs far fewer complex exponentials than the full outer product.
    """
    k = np.arange(n_modes)
    coarse = np.exp(2j * np.pi * np.multiply.outer(xs, block * np.arange(k[-1] // block + 1)))
    fine = np.exp(2j * np.pi * np.multiply.outer(xs, np.arange(block)))
    return coarse[:, k // block] * fine[:, k % block]


def interpolate_coefficients(coeffs: np.ndarray, n_points: int, x):
    """Evaluate trigonometric interpolants given by rfft coefficients.

    ``coeffs`` may be 2-D (one row per field); the result then has one row per
    field and one column per point.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x))
    if xs.dtype != np.longdouble:
        xs = xs.astype(float)
    xs = np.mod(xs, 1.0)
    n_modes = n_points // 2 + 1
    weights = np.full(n_modes, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    phase = _fourier_phases(xs, n_modes)
    vals = ((weights * coeffs) @ phase.T).real / n_points
    if scalar:
        return vals[..., 0]
    return vals


def total_variation(f: np.ndarray) -> float:
    """Cyclic sum of |f(x_{j+1}) - f(x_j)|."""
    return float(np.abs(np.diff(f, append=f[:1])).sum())
