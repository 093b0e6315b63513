"""Periodic 1-D grids, grid functions and the discrete difference calculus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.mixins import NDArrayOperatorsMixin


class GridMismatchError(ValueError):
    """Raised when two grid functions live on incompatible grids."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic mesh of ``J`` cells on ``[0, L)``; cell ``j`` is ``[j dx, (j+1) dx)``."""

    L: float
    J: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        if int(self.J) != self.J or self.J < 4:
            raise ValueError(f"J must be an integer >= 4, got {self.J}")
        object.__setattr__(self, "J", int(self.J))

    @property
    def dx(self) -> float:
        return self.L / self.J

    @property
    def nodes(self) -> np.ndarray:
        """Left cell edges x_j = j dx."""
        return np.arange(self.J) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.J + 1) * self.dx

    def refine(self, factor: int = 2) -> "PeriodicGrid":
        return PeriodicGrid(self.L, self.J * factor)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.J))


class GridFunction(NDArrayOperatorsMixin):
    """Real cell values attached to a :class:`PeriodicGrid`.

    Values are stored read-only. Arithmetic with scalars, arrays of length J
    and grid functions on the same grid returns a new grid function.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: PeriodicGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.J,):
            raise ValueError(f"expected {grid.J} values, got shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or "out" in kwargs:
            return NotImplemented
        grid = self.grid
        raw = []
        for x in inputs:
            if isinstance(x, GridFunction):
                if x.grid != grid:
                    raise GridMismatchError(f"{x.grid} vs {grid}")
                raw.append(x.values)
            else:
                raw.append(x)
        out = getattr(ufunc, method)(*raw, **kwargs)
        if isinstance(out, np.ndarray) and out.shape == (grid.J,) and out.dtype.kind == "f":
            return GridFunction(grid, out)
        return out

    def __len__(self):
        return self.grid.J

    def __getitem__(self, j):
        if isinstance(j, (int, np.integer)):
            return self.values[j % self.grid.J]
        return self.values[j]

    def __repr__(self):
        return f"GridFunction(J={self.grid.J}, L={self.grid.L}, values={self.values!r})"

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass
class TimeStamps:
    """Accepted time steps of a run; ``t_final`` is their running sum."""

    dt_history: list = field(default_factory=list)
    t_final: float = 0.0

    def append(self, dt: float):
        if not dt > 0:
            raise ValueError(f"time steps must be positive, got {dt}")
        self.dt_history.append(float(dt))
        self.t_final += float(dt)

    def __len__(self):
        return len(self.dt_history)


def _same_grid(a: GridFunction, b: GridFunction) -> PeriodicGrid:
    if a.grid != b.grid:
        raise GridMismatchError(f"{a.grid} vs {b.grid}")
    return a.grid


# array kernels, shared with the time steppers

def roll(v: np.ndarray, ell: int) -> np.ndarray:
    """result[j] = v[(j + ell) mod J]."""
    return np.roll(v, -ell)


def dplus_array(v, dx):
    return (np.roll(v, -1) - v) / dx


def dminus_array(v, dx):
    return (v - np.roll(v, 1)) / dx


def dcenter_array(v, dx):
    return (np.roll(v, -1) - np.roll(v, 1)) / (2 * dx)


def d3_array(v, dx):
    """Right-winded third difference (v[j+2] - 3v[j+1] + 3v[j] - v[j-1]) / dx^3."""
    return (np.roll(v, -2) - 3 * np.roll(v, -1) + 3 * v - np.roll(v, 1)) / dx**3


def dpm_array(v, dx):
    """Second difference D+D- v."""
    return (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / dx**2


# grid-function operators

def shift(a: GridFunction, ell: int) -> GridFunction:
    return GridFunction(a.grid, roll(a.values, int(ell)))


def d_plus(a: GridFunction) -> GridFunction:
    return GridFunction(a.grid, dplus_array(a.values, a.grid.dx))


def d_minus(a: GridFunction) -> GridFunction:
    return GridFunction(a.grid, dminus_array(a.values, a.grid.dx))


def d_center(a: GridFunction) -> GridFunction:
    return GridFunction(a.grid, dcenter_array(a.values, a.grid.dx))


def d3(a: GridFunction) -> GridFunction:
    return GridFunction(a.grid, d3_array(a.values, a.grid.dx))


def d3_composed(a: GridFunction) -> GridFunction:
    """D+D+D- built from first differences; reference path for :func:`d3`."""
    return d_plus(d_plus(d_minus(a)))


def l2_delta(values, dx: float) -> float:
    """sqrt(dx sum a_j^2) on a bare array."""
    values = np.asarray(values, dtype=float)
    return math.sqrt(dx * float(np.dot(values, values)))


def inner(a: GridFunction, b: GridFunction) -> float:
    grid = _same_grid(a, b)
    return grid.dx * float(np.dot(a.values, b.values))


def norm_l2_delta(a: GridFunction) -> float:
    return math.sqrt(inner(a, a))


def norm_linf(a: GridFunction) -> float:
    return float(np.max(np.abs(a.values)))


def norm_l4_delta(a: GridFunction) -> float:
    return float((a.grid.dx * np.sum(a.values**4)) ** 0.25)
