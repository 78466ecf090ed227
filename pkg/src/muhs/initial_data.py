"""Initial conditions: smooth cosine data, peakons, and data read from CSV."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import PeriodicGrid, as_field, derivative, l2_norm
from .mollifier import AtomicMeasure
from .operators import apply_A, green_function

SIGN_CLASSES = ("y_nonneg", "y_nonpos", "mixed")
DEFAULT_SIGN_TOL = 1e-8


@dataclass(frozen=True)
class InitialCondition:
    """u0 on a grid, its momentum sign class and the cached mu0, mu1.

    ``y0_atoms`` is set for measure data (peakons); such data must be
    mollified before it is evolved.
    """

    grid: PeriodicGrid
    u0: np.ndarray = field(repr=False)
    sign_class: str
    mu0: float
    mu1: float
    y0_atoms: AtomicMeasure | None = None
    kind: str = "custom"

    @property
    def is_measure(self) -> bool:
        return self.y0_atoms is not None


def gradient_norm(u: np.ndarray) -> float:
    """||u_x||_{L^2(S)} with the spectral derivative."""
    return l2_norm(derivative(u))


def classify_sign(u0: np.ndarray, tol: float = DEFAULT_SIGN_TOL) -> str:
    """Sign class of y0 = mean(u0) - u0'' judged on its node values."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    y0 = apply_A(u0)
    if y0.min() >= -tol:
        return "y_nonneg"
    if y0.max() <= tol:
        return "y_nonpos"
    return "mixed"


def from_field(grid: PeriodicGrid, u0, kind: str = "custom",
               tol: float = DEFAULT_SIGN_TOL) -> InitialCondition:
    u0 = as_field(u0, grid)
    u0.flags.writeable = False
    return InitialCondition(grid, u0, classify_sign(u0, tol), float(np.mean(u0)),
                            gradient_norm(u0), None, kind)


def cosine_data(grid: PeriodicGrid, a: float, b: float, dtype=np.float64) -> InitialCondition:
    """u0 = a + b cos(2 pi x), so y0 = a + 4 pi^2 b cos(2 pi x).

    The sign class is decided analytically: y_nonneg iff a >= 4 pi^2 |b|.
    Pass ``dtype=np.longdouble`` to build the samples in extended precision.
    """
    two_pi = 2 * np.arccos(dtype(-1))
    u0 = dtype(a) + dtype(b) * np.cos(two_pi * grid.coordinates(dtype))
    amp = 4.0 * np.pi**2 * abs(b)
    if a >= amp:
        sign = "y_nonneg"
    elif a <= -amp:
        sign = "y_nonpos"
    else:
        sign = "mixed"
    u0 = as_field(u0, grid)
    u0.flags.writeable = False
    return InitialCondition(grid, u0, sign, float(np.mean(u0)), gradient_norm(u0),
                            None, "cosine")


def peakon_data(grid: PeriodicGrid, p: float, x0: float, dtype=np.float64) -> InitialCondition:
    """u0 = p g(x - x0), whose momentum is the point mass p delta_{x0}.

    The node mean is p (1 + 1/(12 N^2)), not p, because g has a kink.
    """
    if p == 0:
        raise ValueError("peakon amplitude must be nonzero")
    x0 = float(x0) % 1.0
    u0 = as_field(dtype(p) * green_function(grid.coordinates(dtype) - dtype(x0)), grid)
    u0.flags.writeable = False
    sign = "y_nonneg" if p > 0 else "y_nonpos"
    atoms = AtomicMeasure((x0,), (float(p),))
    return InitialCondition(grid, u0, sign, float(np.mean(u0)), gradient_norm(u0),
                            atoms, "peakon")


def read_field_csv(path: str | Path, grid: PeriodicGrid) -> np.ndarray:
    """One node value per line, n_points lines."""
    values = np.loadtxt(path, dtype=float, delimiter=",", ndmin=1)
    if values.ndim != 1:
        raise ValueError(f"{path}: expected a single column of node values")
    if values.size != grid.n_points:
        raise ValueError(f"{path}: {values.size} values for a grid of {grid.n_points}")
    return values


def file_data(grid: PeriodicGrid, path: str | Path) -> InitialCondition:
    return from_field(grid, read_field_csv(path, grid), kind="file")
