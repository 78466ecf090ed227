"""The operator A = mu - d^2/dx^2 on S and three routes to its inverse.

``invert_A_spectral`` is the production path.  ``invert_A_explicit`` evaluates
the closed-form nested-integral representation of A^{-1} and
``convolve_green`` convolves with the Green's function
g(x) = x(x-1)/2 + 13/12; both serve as cross-checks of the spectral path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .grid import (
    PeriodicGrid,
    derivative_symbol,
    make_grid,
    second_derivative,
    wavenumbers,
)

# Gauss-Legendre points per grid cell when integrating g against Fourier modes.
_GL_POINTS = 8


def green_function(x) -> np.ndarray:
    """g(x) = x(x-1)/2 + 13/12 on [0, 1), extended periodically."""
    s = np.asarray(x)
    if s.dtype != np.longdouble:
        s = s.astype(float)
    s = np.mod(s, 1.0)
    return 0.5 * s * (s - 1.0) + 13.0 / 12.0


@dataclass(frozen=True)
class GreenKernel:
    """Node samples of g together with its Fourier coefficients on the grid.

    ``coefficients[k]`` is the integral of g(s) exp(-2 pi i k s) over [0, 1],
    computed by composite Gauss-Legendre quadrature of the formula for g (one
    panel per grid cell).  No knowledge of the symbol of A enters, so agreement
    with 1/(4 pi^2 k^2) is a genuine check that g inverts A.
    """

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)

    @property
    def node_mean(self) -> float:
        return float(np.mean(self.values))


@lru_cache(maxsize=16)
def _green_kernel(n_points: int) -> GreenKernel:
    grid = make_grid(n_points)
    values = green_function(grid.nodes)
    values.flags.writeable = False

    t, w = np.polynomial.legendre.leggauss(_GL_POINTS)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    k = wavenumbers(n_points)
    panels = np.arange(n_points)
    coeffs = np.zeros(k.size, dtype=complex)
    # sum over panels p and local nodes t_m of w_m g((p + t_m)/N) e^{-2 pi i k (p + t_m)/N} / N
    for tm, wm in zip(t, w):
        samples = wm * green_function((panels + tm) / n_points)
        coeffs += np.exp(-2j * np.pi * k * tm / n_points) * np.fft.rfft(samples)
    coeffs /= n_points
    coeffs.flags.writeable = False
    return GreenKernel(grid, values, coeffs)


def green_kernel(grid: PeriodicGrid | int) -> GreenKernel:
    n = grid.n_points if isinstance(grid, PeriodicGrid) else int(grid)
    return _green_kernel(n)


@lru_cache(maxsize=32)
def inverse_symbol(n_points: int) -> np.ndarray:
    """Fourier multiplier of A^{-1}: 1 on k = 0 and 1/(4 pi^2 k^2) otherwise."""
    k = wavenumbers(n_points)
    sym = np.ones_like(k)
    sym[1:] = 1.0 / (4.0 * np.pi**2 * k[1:] ** 2)
    sym.flags.writeable = False
    return sym


@lru_cache(maxsize=32)
def dx_inverse_symbol(n_points: int) -> np.ndarray:
    """Multiplier of d/dx A^{-1}; zero on k = 0 and on the Nyquist mode."""
    sym = derivative_symbol(n_points) * inverse_symbol(n_points)
    sym.flags.writeable = False
    return sym


def apply_A(w: np.ndarray) -> np.ndarray:
    """A w = mean(w) - w''."""
    return np.mean(w) - second_derivative(w)


def invert_A_spectral(w: np.ndarray) -> np.ndarray:
    n = w.size
    return np.fft.irfft(inverse_symbol(n) * np.fft.rfft(w), n)


def _periodic_antiderivative(p: np.ndarray) -> np.ndarray:
    """Node values of the antiderivative of a zero-mean field, vanishing at x = 0.

    The Nyquist cosine integrates to a sine that vanishes at every node, so it
    is dropped.
    """
    n = p.size
    sym = np.zeros(n // 2 + 1, dtype=complex)
    sym[1:-1] = 1.0 / derivative_symbol(n)[1:-1]
    out = np.fft.irfft(sym * np.fft.rfft(p), n)
    return out - out[0]


def invert_A_explicit(w: np.ndarray, quadrature: str = "spectral") -> np.ndarray:
    """Evaluate the closed form

        v(x) = (x^2/2 - x/2 + 13/12) mu(w) + (x - 1/2) int_0^1 W1
               - int_0^x W1 + int_0^1 int_0^y W1,   W1(y) = int_0^y w,

    with the nested integrals anchored at x = 0.

    ``quadrature="spectral"`` integrates the trigonometric interpolant of w
    exactly (polynomial part carried analytically); ``"trapezoid"`` uses
    cumulative trapezoid sums and is second order.
    """
    n = w.size
    x = np.arange(n) / n
    if quadrature == "trapezoid":
        xe = np.append(x, 1.0)
        we = np.append(w, w[0])
        mu = trapezoid(we, xe)
        w1 = cumulative_trapezoid(we, xe, initial=0.0)
        int_w1 = trapezoid(w1, xe)
        w2 = cumulative_trapezoid(w1, xe, initial=0.0)
        int_w2 = trapezoid(w2, xe)
        w2 = w2[:-1]
    elif quadrature == "spectral":
        mu = float(np.mean(w))
        p1 = _periodic_antiderivative(w - mu)  # W1 = mu x + p1
        m1 = float(np.mean(p1))
        p2 = _periodic_antiderivative(p1 - m1)  # W2 = mu x^2/2 + m1 x + p2
        int_w1 = mu / 2.0 + m1
        w2 = mu * x**2 / 2.0 + m1 * x + p2
        int_w2 = mu / 6.0 + m1 / 2.0 + float(np.mean(p2))
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    return (x**2 / 2.0 - x / 2.0 + 13.0 / 12.0) * mu + (x - 0.5) * int_w1 - w2 + int_w2


def convolve_green(w: np.ndarray, sampling: str = "quadrature") -> np.ndarray:
    """Periodic convolution g * w computed through the DFT.

    ``sampling="quadrature"`` uses the kernel's quadrature Fourier coefficients
    and is exact for trigonometric polynomials.  ``sampling="nodes"`` is the
    plain discrete convolution (1/N) sum_j g(x_i - x_j) w_j with the kernel
    sampled at the nodes; it carries an O(N^-2) bias, e.g. a constant c maps
    to c (1 + 1/(12 N^2)).
    """
    n = w.size
    kernel = green_kernel(n)
    if sampling == "quadrature":
        mult = kernel.coefficients
    elif sampling == "nodes":
        mult = np.fft.rfft(kernel.values) / n
    else:
        raise ValueError(f"unknown sampling {sampling!r}")
    return np.fft.irfft(mult * np.fft.rfft(w), n)


def dx_Ainv(w: np.ndarray, method: str = "spectral") -> np.ndarray:
    """d/dx A^{-1} w, which equals A^{-1} d/dx w.

    ``method="explicit"`` evaluates (x - 1/2) mu(w) - int_0^x w + int_0^1 int_0^x w.
    """
    n = w.size
    if method == "spectral":
        return np.fft.irfft(dx_inverse_symbol(n) * np.fft.rfft(w), n)
    if method == "explicit":
        x = np.arange(n) / n
        mu = float(np.mean(w))
        p1 = _periodic_antiderivative(w - mu)
        w1 = mu * x + p1
        int_w1 = mu / 2.0 + float(np.mean(p1))
        return (x - 0.5) * mu - w1 + int_w1
    raise ValueError(f"unknown method {method!r}")


def check_inverse_identity(w: np.ndarray) -> float:
    """Sup-norm residual of A^{-1} w'' = -w + mean(w)."""
    lhs = invert_A_spectral(second_derivative(w))
    return float(np.max(np.abs(lhs - (np.mean(w) - w))))


def route_differences(w: np.ndarray) -> dict[str, float]:
    """Pairwise sup-norm differences between the three inverse routes."""
    spectral = invert_A_spectral(w)
    explicit = invert_A_explicit(w)
    conv = convolve_green(w)

    def sup(a, b):
        return float(np.max(np.abs(a - b)))

    return {
        "spectral_vs_explicit": sup(spectral, explicit),
        "spectral_vs_convolution": sup(spectral, conv),
        "explicit_vs_convolution": sup(explicit, conv),
    }


def random_trig_polynomial(n_points: int, degree: int, rng: np.random.Generator) -> np.ndarray:
    """a_0 + sum_{k<=degree} a_k cos(2 pi k x) + b_k sin(2 pi k x), standard normal coefficients."""
    if not 0 <= degree < n_points // 2:
        raise ValueError(f"degree must lie in [0, {n_points // 2}), got {degree}")
    x = make_grid(n_points).nodes
    k = np.arange(1, degree + 1)
    a = rng.standard_normal(degree + 1)
    b = rng.standard_normal(degree)
    phase = 2.0 * np.pi * np.outer(x, k)
    return a[0] + np.cos(phase) @ a[1:] + np.sin(phase) @ b


def kernel_check(n_points: int = 256, count: int = 20, degree: int = 20, seed: int = 0) -> dict:
    """Worst route disagreement and inverse-identity residual over random polynomials,
    plus the Green's function values and node mean."""
    rng = np.random.default_rng(seed)
    worst = {"spectral_vs_explicit": 0.0, "spectral_vs_convolution": 0.0,
             "explicit_vs_convolution": 0.0}
    identity = 0.0
    for _ in range(count):
        w = random_trig_polynomial(n_points, int(rng.integers(0, degree + 1)), rng)
        for key, value in route_differences(w).items():
            worst[key] = max(worst[key], value)
        identity = max(identity, check_inverse_identity(w))
    kernel = green_kernel(n_points)
    return {
        "n_points": n_points,
        "count": count,
        "max_degree": degree,
        "seed": seed,
        "route_differences": worst,
        "identity_residual": identity,
        "g_at_0": float(green_function(0.0)),
        "g_at_half": float(green_function(0.5)),
        "g_node_mean": kernel.node_mean,
        "g_node_mean_expected": 1.0 + 1.0 / (12.0 * n_points**2),
    }
