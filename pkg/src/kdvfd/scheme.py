"""Time steppers: full KdV Rusanov/theta scheme, Airy-only and Burgers-only parts."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .grid import GridFunction, PeriodicGrid, TimeStamps, d3_array, norm_l2_delta, norm_linf
from .theta import ThetaOperator

C_FLOOR = 1e-12


# Rusanov coefficient policies

@dataclass(frozen=True)
class Fixed:
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"fixed Rusanov coefficient must be positive, got {self.c}")


@dataclass(frozen=True)
class AdaptiveMaxAbs:
    """c^n = max_j |v_j^n|, floored so that dx / c stays finite."""

    floor: float = C_FLOOR


# CFL policies

@dataclass(frozen=True)
class Theoretical:
    """(c + 1/2) dt <= (1 - beta0) dx, plus dt (1 - 2 theta) <= (1 - beta0) dx^3 / 4 when theta < 1/2."""

    beta0: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.beta0 < 1.0:
            raise ValueError(f"beta0 must lie in (0, 1), got {self.beta0}")


@dataclass(frozen=True)
class Experimental:
    """dt = dx / c."""


RusanovPolicy = Union[Fixed, AdaptiveMaxAbs]
CFLPolicy = Union[Theoretical, Experimental]


@dataclass(frozen=True)
class SchemeConfig:
    theta: float = 1.0
    rusanov_policy: RusanovPolicy = AdaptiveMaxAbs()
    cfl_policy: CFLPolicy = Experimental()
    t_final: float = 0.1
    dt_cap: Optional[float] = None  # None means dx
    solver: str = "spectral"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.t_final >= 0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.dt_cap is not None and not self.dt_cap > 0:
            raise ValueError(f"dt_cap must be positive, got {self.dt_cap}")
        if self.solver not in ("spectral", "banded"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class SolverState:
    v: GridFunction
    t: float = 0.0
    n: int = 0
    stamps: TimeStamps = field(default_factory=TimeStamps)
    c_history: list = field(default_factory=list)


class BlowUpError(RuntimeError):
    def __init__(self, step: int, t: float, norms: dict):
        self.step, self.t, self.norms = step, t, norms
        super().__init__(f"non-finite solution at step {step} (t={t:.17g}); "
                         f"last finite norms {norms}")


def rusanov_coefficient(policy: RusanovPolicy, v) -> float:
    if isinstance(policy, Fixed):
        return policy.c
    if isinstance(policy, AdaptiveMaxAbs):
        m = float(np.max(np.abs(np.asarray(v))))
        return max(m, policy.floor)
    raise TypeError(f"unknown Rusanov policy {policy!r}")


def select_dt(cfl_policy: CFLPolicy, c: float, grid: PeriodicGrid, theta: float,
              dt_cap: Optional[float] = None) -> float:
    if not c > 0:
        raise ValueError(f"Rusanov coefficient must be positive, got {c}")
    dx = grid.dx
    cap = dx if dt_cap is None else dt_cap
    if isinstance(cfl_policy, Theoretical):
        b = 1.0 - cfl_policy.beta0
        dt = b * dx / (c + 0.5)
        if theta < 0.5:
            dt = min(dt, b * dx**3 / (4 * (1 - 2 * theta)))
        return min(dt, cap)
    if isinstance(cfl_policy, Experimental):
        return min(dx / c, cap)
    raise TypeError(f"unknown CFL policy {cfl_policy!r}")


class OperatorCache:
    """Reuses A_theta for repeated (theta, dt, grid) triples."""

    def __init__(self, maxsize: int = 4):
        self.maxsize = maxsize
        self._ops = {}

    def get(self, theta: float, dt: float, grid: PeriodicGrid) -> ThetaOperator:
        key = (theta, dt, grid)
        op = self._ops.get(key)
        if op is None:
            if len(self._ops) >= self.maxsize:
                self._ops.pop(next(iter(self._ops)))
            op = self._ops[key] = ThetaOperator(theta, dt, grid)
        return op


def kdv_rhs(v: np.ndarray, dx: float, dt: float, c: float, theta: float) -> np.ndarray:
    """Explicit part of the scheme: everything except A_theta v^{n+1}."""
    vp = np.roll(v, -1)
    vm = np.roll(v, 1)
    out = v - dt * (vp * vp - vm * vm) / (4 * dx) + c * dt / (2 * dx) * (vp - 2 * v + vm)
    if theta != 1.0:
        out = out - (1 - theta) * dt * d3_array(v, dx)
    return out


def _accept(state: SolverState, new: np.ndarray, dt: float, c: float) -> SolverState:
    if not np.all(np.isfinite(new)):
        raise BlowUpError(state.n + 1, state.t + dt,
                          {"l2": norm_l2_delta(state.v), "linf": norm_linf(state.v)})
    state.stamps.append(dt)
    if c is not None:
        state.c_history.append(c)
    return replace(state, v=GridFunction(state.v.grid, new), t=state.t + dt, n=state.n + 1)


def step_kdv(state: SolverState, config: SchemeConfig, dt: float, c: float,
             op_cache: Optional[OperatorCache] = None) -> SolverState:
    """One step of A v^{n+1} = v^n - dt D(v^2/2) - (1-theta) dt D+D+D- v^n + (c dt dx/2) D+D- v^n.

    The returned state shares the step and coefficient histories of ``state``.
    """
    grid = state.v.grid
    with np.errstate(over="ignore", invalid="ignore"):  # non-finite output is checked below
        rhs = kdv_rhs(state.v.values, grid.dx, dt, c, config.theta)
        if config.theta == 0.0:
            new = rhs
        else:
            op = (op_cache or OperatorCache()).get(config.theta, dt, grid)
            new = op.solve_array(rhs, config.solver)
    return _accept(state, new, dt, c)


def airy_amplification(theta: float, dt: float, dx: float, xi):
    r = dt / dx**3
    xi = np.asarray(xi, dtype=float)
    s = np.sin(np.pi * xi)
    c = np.cos(np.pi * xi)
    num = 1 - 8 * (1 - theta) * r * s**4 - 8j * (1 - theta) * r * s**3 * c
    den = 1 + 8 * theta * r * s**4 + 8j * theta * r * s**3 * c
    return num / den


def step_airy(state: SolverState, theta: float, dt: float,
              solver: str = "spectral") -> SolverState:
    """A v^{n+1} = v^n - (1-theta) dt D+D+D- v^n."""
    grid = state.v.grid
    v = state.v.values
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = v - (1 - theta) * dt * d3_array(v, grid.dx) if theta != 1.0 else v
        new = ThetaOperator(theta, dt, grid).solve_array(rhs, solver) if theta > 0 else rhs
    return _accept(state, new, dt, None)


def burgers_update(v: np.ndarray, dx: float, dt: float, c: float) -> np.ndarray:
    vp = np.roll(v, -1)
    vm = np.roll(v, 1)
    return v - dt * (vp * vp - vm * vm) / (4 * dx) + c * dt * (vp - 2 * v + vm) / (2 * dx)


def step_burgers(state: SolverState, c: float, dt: float) -> SolverState:
    dx = state.v.grid.dx
    if c * dt > dx * (1 + 1e-14):
        warnings.warn(f"c dt = {c * dt:.6g} exceeds dx = {dx:.6g}; maximum principle not guaranteed",
                      RuntimeWarning, stacklevel=2)
    with np.errstate(over="ignore", invalid="ignore"):
        new = burgers_update(state.v.values, dx, dt, c)
    return _accept(state, new, dt, c)


Observer = Callable[[int, float, GridFunction], None]


class Stepper:
    """Drives one run step by step. Every step uses the configured Rusanov and
    CFL policies on the current state, truncated so as not to pass ``limit``."""

    def __init__(self, initial: GridFunction, config: SchemeConfig):
        self.config = config
        self.state = SolverState(v=initial)
        self._cache = OperatorCache()
        self._warned = False

    @property
    def t(self) -> float:
        return self.state.t

    def coefficient(self) -> float:
        policy = self.config.rusanov_policy
        c = rusanov_coefficient(policy, self.state.v.values)
        if isinstance(policy, Fixed) and not self._warned and norm_linf(self.state.v) >= c:
            warnings.warn(f"max|v| = {norm_linf(self.state.v):.6g} reaches the fixed Rusanov "
                          f"coefficient {c:.6g} at step {self.state.n}", RuntimeWarning, stacklevel=3)
            self._warned = True
        return c

    def cfl_dt(self, c: float) -> float:
        cfg = self.config
        return select_dt(cfg.cfl_policy, c, self.state.v.grid, cfg.theta, cfg.dt_cap)

    def step(self, limit: float, dt: Optional[float] = None) -> SolverState:
        """One step of size ``dt`` (default: the CFL step), landing exactly on
        ``limit`` if it would reach it or stop within rounding of it."""
        c = self.coefficient()
        if dt is None:
            dt = self.cfl_dt(c)
        t = self.state.t
        land = t + dt >= limit or limit - (t + dt) <= 1e-12 * max(1.0, abs(limit))
        if land:
            dt = limit - t
        self.state = step_kdv(self.state, self.config, dt, c, self._cache)
        if land:
            self.state.t = limit
        return self.state

    def advance_to(self, target: float, observer: Optional[Observer] = None) -> SolverState:
        while self.state.t < target:
            self.step(target)
            if observer is not None:
                observer(self.state.n, self.state.t, self.state.v)
        return self.state


def run(initial: GridFunction, config: SchemeConfig, observer: Optional[Observer] = None,
        sync_times: Optional[Sequence[float]] = None) -> SolverState:
    """Advance ``initial`` to ``config.t_final``.

    Steps follow the CFL policy, truncated so that the run lands exactly on
    ``t_final`` and on every time in ``sync_times``. The observer sees
    (n, t, v) after every accepted step.
    """
    stepper = Stepper(initial, config)
    T = config.t_final
    targets = sorted({float(t) for t in (sync_times or ()) if 0 < t < T} | {float(T)})
    for target in targets:
        if target > 0:
            stepper.advance_to(target, observer)
    return stepper.state
