"""Friedrichs mollifiers phi_n(x) = n phi(n x) / int(phi) and periodic smoothing.

phi(x) = exp(1/(x^2 - 1)) on |x| < 1.  Mollification of fields is done in
Fourier space with quadrature coefficients of the kernel, so the mean is kept
exactly and smoothing commutes with differentiation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .grid import PeriodicGrid, wavenumbers

MIN_INDEX = 3
# midpoint samples of the bump on (0, 1) used for its cosine transform
_TRANSFORM_SAMPLES = 4096


def bump(x):
    """exp(1/(x^2 - 1)) for |x| < 1, else 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 / (x[inside] ** 2 - 1.0))
    return out if out.ndim else float(out)


@lru_cache(maxsize=1)
def normalization_constant() -> float:
    """1 / int_{-1}^{1} phi, by adaptive quadrature."""
    half, _ = quad(bump, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / (2.0 * half)


def phi_n(x, n: int):
    """Normalized, scaled kernel on the real line (not periodized)."""
    return normalization_constant() * n * bump(n * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MollifierKernel:
    n: int
    n_points: int
    coefficients: np.ndarray = field(repr=False)

    @property
    def normalization(self) -> float:
        return normalization_constant()

    @property
    def support_radius(self) -> float:
        return 1.0 / self.n


def _check_index(n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"mollifier index must be an integer, got {n!r}")
    n = int(n)
    if n < MIN_INDEX:
        raise ValueError(f"mollifier index must be >= {MIN_INDEX}, got {n}")
    return n


@lru_cache(maxsize=64)
def mollifier_kernel(n: int, n_points: int) -> MollifierKernel:
    """Kernel with Fourier coefficients phi_n^(k) = int phi_n(x) cos(2 pi k x) dx.

    The bump is even and flat to all orders at +-1, so the midpoint rule on
    (0, 1) converges faster than any power; the zero mode is pinned to 1.
    """
    n = _check_index(n)
    k = wavenumbers(n_points)
    m = max(_TRANSFORM_SAMPLES, 16 * int(np.ceil(k[-1] / n)))
    xi = (np.arange(m) + 0.5) / m
    weights = 2.0 * bump(xi) / m * normalization_constant()
    coeffs = np.cos(2.0 * np.pi * np.outer(k / n, xi)) @ weights
    if abs(coeffs[0] - 1.0) > 1e-12:
        raise RuntimeError(f"mollifier mass {coeffs[0]!r} differs from 1")
    coeffs[0] = 1.0
    coeffs.flags.writeable = False
    return MollifierKernel(n, n_points, coeffs)


def mollify_field(u0: np.ndarray, n: int) -> np.ndarray:
    """phi_n * u0 on the circle."""
    kernel = mollifier_kernel(_check_index(n), u0.size)
    return np.fft.irfft(kernel.coefficients * np.fft.rfft(u0), u0.size)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite signed sum of point masses on S."""

    positions: tuple[float, ...] = ()
    masses: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.positions) != len(self.masses):
            raise ValueError("positions and masses differ in length")
        if not all(np.isfinite(self.masses)) or not all(np.isfinite(self.positions)):
            raise ValueError("atoms must have finite positions and masses")
        object.__setattr__(self, "positions", tuple(float(p) % 1.0 for p in self.positions))
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))

    @classmethod
    def from_atoms(cls, atoms) -> "AtomicMeasure":
        atoms = list(atoms)
        return cls(tuple(a[0] for a in atoms), tuple(a[1] for a in atoms))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.positions, self.masses))

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def sign(self) -> str:
        if all(m >= 0 for m in self.masses):
            return "positive"
        if all(m <= 0 for m in self.masses):
            return "negative"
        return "mixed"


def mollify_measure(y0: AtomicMeasure, n: int, grid: PeriodicGrid) -> np.ndarray:
    """Node samples of sum_i p_i phi_n(x - x_i), periodized.

    Sampling keeps the result nonnegative for nonnegative masses; its discrete
    mean matches the total mass once the kernel spans enough nodes
    (roughly n_points / n >= 64 for 1e-8).
    """
    n = _check_index(n)
    x = grid.nodes
    out = np.zeros(grid.n_points)
    for pos, mass in y0.atoms:
        d = np.mod(x - pos + 0.5, 1.0) - 0.5
        out += mass * phi_n(d, n)
    return out
