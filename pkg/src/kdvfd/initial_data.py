"""Initial data: cell averages, smooth and cnoidal data, rough periodic families, mollifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import solve_triangular

from .grid import GridFunction, PeriodicGrid
from .special import elliptic_K, jacobi_cn

Pointwise = Callable[[np.ndarray], np.ndarray]


def cell_average(f: Pointwise, grid: PeriodicGrid, quad_order: int = 4) -> GridFunction:
    """(1/dx) int over each cell of f, by Gauss-Legendre with ``quad_order`` nodes per cell."""
    if quad_order < 1:
        raise ValueError("quad_order must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    dx = grid.dx
    x = grid.nodes[:, None] + dx * (nodes[None, :] + 1) / 2
    fx = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ValueError("non-finite samples of the averaged function")
    return GridFunction(grid, fx @ weights / 2)


def sinusoidal(L: float) -> Pointwise:
    k = 2 * np.pi / L
    return lambda x: np.cos(k * np.asarray(x, dtype=float))


def constant(value: float) -> Pointwise:
    return lambda x: np.full(np.shape(x), float(value))


def scaled(f: Pointwise, factor: float) -> Pointwise:
    return lambda x: factor * f(x)


def peak_abs(f: Pointwise, L: float, samples: int = 2**16 + 1) -> float:
    """max |f| over a uniform sample of [0, L]."""
    return float(np.max(np.abs(f(np.linspace(0.0, L, samples)))))


@dataclass(frozen=True)
class CnoidalParams:
    m: float = 0.9
    mu: float = 1.0 / 576.0
    L: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"m must lie in (0, 1), got {self.m}")
        if not self.mu > 0 or not self.L > 0:
            raise ValueError("mu and L must be positive")

    @cached_property
    def K(self) -> float:
        return elliptic_K(self.m)

    @property
    def a(self) -> float:
        return 192 * self.m * self.mu * self.K**2

    @property
    def v(self) -> float:
        return 64 * self.mu * (2 * self.m - 1) * self.K**2

    @property
    def crest(self) -> float:
        return self.mu ** (-0.2) * self.a

    @property
    def phase_speed(self) -> float:
        """The profile translates rigidly at v mu^{-1/5}."""
        return self.v * self.mu ** (-0.2)

    @property
    def spatial_period(self) -> float:
        """Period of the profile in x (cn^2 has period 2K)."""
        return 1.0 / (2 * self.mu**0.4)


def cnoidal(params: CnoidalParams, t, x):
    """mu^{-1/5} a cn^2(4K (mu^{2/5} (x - L/2) - v mu^{1/5} t) | m)."""
    p = params
    z = 4 * p.K * (p.mu**0.4 * (np.asarray(x, dtype=float) - p.L / 2) - p.v * p.mu**0.2 * t)
    return p.crest * jacobi_cn(z, p.m) ** 2


def cnoidal_mismatch(params: CnoidalParams, t: float = 0.0, h: float = 1e-6) -> dict:
    """Seam mismatch of the closed form on [0, L]: value and one-sided slope at 0 versus L."""
    u = lambda x: cnoidal(params, t, x)
    L = params.L
    slope0 = (u(h) - u(0.0)) / h
    slopeL = (u(L) - u(L - h)) / h
    return {"value": float(abs(u(0.0) - u(L))), "slope": float(abs(slope0 - slopeL)),
            "crest": params.crest, "spatial_period": params.spatial_period}


def _piecewise_eval(pieces, L, x):
    x = np.mod(np.asarray(x, dtype=float), L)
    left, right = pieces
    return np.where(x < L / 2, left(x), right(x))


def _halfinteger_pieces(level: int, L: float):
    left, right = Polynomial([1.0]), Polynomial([-1.0])
    for _ in range(level):
        P1 = left.integ(lbnd=0.0)
        P2 = right.integ(lbnd=L / 2) + P1(L / 2)
        mean = (P1.integ(lbnd=0.0)(L / 2) + P2.integ(lbnd=L / 2)(L)) / L
        left, right = P1 - mean, P2 - mean
    return left, right


def rough_halfinteger(level: int, L: float) -> Pointwise:
    """Level 0 is the square wave 2 1_[0,L/2) - 1; each further level is the
    mean-free periodic antiderivative of the previous one."""
    if level < 0:
        raise ValueError("level must be >= 0")
    pieces = _halfinteger_pieces(int(level), float(L))
    return lambda x: _piecewise_eval(pieces, L, x)


def rough_integer_coefficients(s: int, L: float) -> np.ndarray:
    """b_1..b_s making x^{s-1/2} - sum b_i x^i / i! and its first s-1 derivatives agree at 0 and L."""
    if s < 1:
        raise ValueError("s must be >= 1")
    A = np.zeros((s, s))
    rhs = np.zeros(s)
    for k in range(s):
        ck = math.prod(s - 0.5 - q for q in range(k))
        rhs[k] = ck * L ** (s - 0.5 - k)
        for i in range(k + 1, s + 1):
            A[k, i - 1] = L ** (i - k) / math.factorial(i - k)
    assert np.all(np.diag(A) != 0)
    return solve_triangular(A, rhs, lower=False)


def rough_integer(s: int, L: float) -> Pointwise:
    b = rough_integer_coefficients(int(s), float(L))
    poly = Polynomial(np.concatenate([[0.0], b / [math.factorial(i) for i in range(1, s + 1)]]))

    def f(x):
        y = np.mod(np.asarray(x, dtype=float), L)
        return y ** (s - 0.5) - poly(y)

    return f


# mollifier

def _g(t):
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        e0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        e1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return e0 / (e0 + e1)


def cutoff(zeta):
    """Smooth even cutoff: 1 on |zeta| <= 1/2, 0 on |zeta| >= 1."""
    z = np.abs(np.asarray(zeta, dtype=float))
    return np.where(z <= 0.5, 1.0, np.where(z >= 1.0, 0.0, 1.0 - _g((z - 0.5) * 2)))


def physical_wavenumbers(grid: PeriodicGrid) -> np.ndarray:
    """2 pi k / L for k in (-J/2, J/2], in numpy FFT ordering."""
    return 2 * np.pi * np.fft.fftfreq(grid.J, d=grid.dx)


def mollify(u0: GridFunction, delta: float) -> GridFunction:
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    k = physical_wavenumbers(u0.grid)
    if u0.grid.J % 2 == 0:
        k[u0.grid.J // 2] = abs(k[u0.grid.J // 2])  # Nyquist counted at +J/2
    chi = cutoff(delta * k)
    return GridFunction(u0.grid, np.fft.irfft(np.fft.rfft(u0.values) * chi[: u0.grid.J // 2 + 1],
                                              n=u0.grid.J))


def delta_rule(dx: float, s: float, exponent: float | None = None, gamma: float = 0.49) -> float:
    """delta = dx^a with a = 1/6 for s >= 3 and a = gamma / (6 - s) otherwise."""
    if exponent is None:
        exponent = 1.0 / 6.0 if s >= 3 else gamma / (6.0 - s)
    return dx**exponent
