"""Error measurement, observed convergence rates and refinement ladders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import GridFunction, PeriodicGrid, norm_l2_delta
from .initial_data import Pointwise, cell_average, mollify
from .scheme import SchemeConfig, Stepper, run

NOISE_FLOOR = 1e2 * np.finfo(float).eps

SpaceTime = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class ErrorRow:
    J: int
    dx: float
    error: float
    rate: Optional[float] = None
    flag: Optional[str] = None  # "noise floor", "nonpositive error", "failed: ..."


@dataclass(frozen=True)
class RateTheory:
    s: float
    q_proved: Optional[float]  # None where no rate is proved
    q_conjectured: float


def theory_rates(s: float) -> RateTheory:
    if not s > 0:
        raise ValueError("s must be positive")
    if s < 0.75:
        proved = None
    elif s <= 3:
        proved = s / (12 - 2 * s)
    else:
        proved = min(s, 6) / 6
    return RateTheory(s, proved, min(s, 6) / 6)


def observed_rate(e_coarse: float, e_fine: float) -> float:
    return (math.log(e_coarse) - math.log(e_fine)) / math.log(2)


def rate_table(errors: Sequence) -> list:
    """Rows (J, error) or (J, error, scale) sorted by J, which must double.

    ``scale`` is a typical solution size; an error below 1e2 eps scale is
    flagged as at the noise floor and gets no rate, as does a row whose
    error is nonpositive or missing.
    """
    rows = []
    for item in sorted(errors, key=lambda e: e[0]):
        J, err = int(item[0]), item[1]
        scale = item[2] if len(item) > 2 else None
        dx = item[3] if len(item) > 3 else float("nan")
        row = ErrorRow(J, dx, float("nan") if err is None else float(err))
        if err is None or not math.isfinite(row.error):
            row.flag = row.flag or "no error"
        elif row.error <= 0:
            row.flag = "nonpositive error"
        elif scale is not None and row.error < NOISE_FLOOR * scale:
            row.flag = "noise floor"
        rows.append(row)
    for prev, row in zip(rows, rows[1:]):
        if row.J != 2 * prev.J:
            raise ValueError(f"ladder must double: {prev.J} -> {row.J}")
        if prev.flag is None and row.flag is None:
            row.rate = observed_rate(prev.error, row.error)
    return rows


def aggregate_rate(rows: Sequence[ErrorRow], count: int = 2) -> Optional[float]:
    """Mean of the ``count`` finest available rates."""
    rates = [r.rate for r in rows if r.rate is not None]
    if not rates:
        return None
    return float(np.mean(rates[-count:]))


# exact-solution error

class ExactError:
    """Observer accumulating sup_n ||v^n - u_Delta^n|| against an exact solution.

    ``mode="point"`` compares with cell averages of u(t^n, .); ``mode="cell_time"``
    with the space-time average of u over [t^n, min(t^{n+1}, T)] x cell (the
    last level, where that interval is empty, uses u(T, .)).
    """

    def __init__(self, exact: SpaceTime, grid: PeriodicGrid, mode: str = "point",
                 quad_order: int = 4, time_quad_order: int = 4):
        if mode not in ("point", "cell_time"):
            raise ValueError(f"unknown mode {mode!r}")
        self.exact, self.grid, self.mode = exact, grid, mode
        self.quad_order, self.time_quad_order = quad_order, time_quad_order
        self.sup = 0.0
        self.history = []
        self._pending = None

    def reference(self, t0: float, t1: Optional[float] = None) -> GridFunction:
        if t1 is None or t1 <= t0:
            return cell_average(lambda x: self.exact(t0, x), self.grid, self.quad_order)
        nodes, weights = np.polynomial.legendre.leggauss(self.time_quad_order)
        acc = np.zeros(self.grid.J)
        for xi, w in zip(nodes, weights):
            t = t0 + (t1 - t0) * (xi + 1) / 2
            acc += w / 2 * cell_average(lambda x: self.exact(t, x), self.grid, self.quad_order).values
        return GridFunction(self.grid, acc)

    def _record(self, n, t, err):
        if not math.isfinite(err):
            raise ValueError(f"non-finite exact-solution error at step {n}")
        self.history.append((n, t, err))
        self.sup = max(self.sup, err)

    def __call__(self, n: int, t: float, v: GridFunction):
        if self.mode == "point" or n == 0:
            self._record(n, t, norm_l2_delta(v - self.reference(t)))
            return
        if self._pending is not None:
            pn, pt, pv = self._pending
            self._record(pn, pt, norm_l2_delta(pv - self.reference(pt, t)))
        self._pending = (n, t, v)

    def finish(self) -> float:
        if self._pending is not None:
            pn, pt, pv = self._pending
            self._record(pn, pt, norm_l2_delta(pv - self.reference(pt)))
            self._pending = None
        return self.sup


def exact_error(initial: GridFunction, config: SchemeConfig, exact: SpaceTime,
                mode: str = "point", quad_order: int = 4) -> float:
    obs = ExactError(exact, initial.grid, mode, quad_order)
    obs(0, 0.0, initial)
    run(initial, config, obs)
    return obs.finish()


# refined-grid error

def transfer(fine: np.ndarray, how: str = "restrict") -> np.ndarray:
    """Map a 2J-cell state to J cells: mean of each pair, or the even cell."""
    if how == "restrict":
        return (fine[0::2] + fine[1::2]) / 2
    if how == "sample":
        return fine[0::2].copy()
    raise ValueError(f"unknown transfer {how!r}")


@dataclass
class SelfErrorResult:
    error: float
    scale: float  # sup_n ||v^n|| on the coarse grid
    steps: int
    fine_steps: int
    history: list = field(default_factory=list)


def project(datum: Pointwise, grid: PeriodicGrid, quad_order: int = 4,
            delta: Optional[Callable[[float], float]] = None) -> GridFunction:
    """Cell averages of ``datum``, mollified with delta(dx) when given."""
    v = cell_average(datum, grid, quad_order)
    if delta is not None:
        v = mollify(v, delta(grid.dx))
    return v


def self_error(config: SchemeConfig, datum: Pointwise, grid: PeriodicGrid,
               alignment: str = "synchronized", how: str = "restrict",
               quad_order: int = 4, delta=None) -> SelfErrorResult:
    """sup_n ||v^n - transfer(w)^n|| between runs on J and 2J cells.

    ``alignment="synchronized"``: each grid takes its own CFL steps and the
    fine run is truncated to land on every coarse time level.
    ``alignment="shared"``: every step uses the fine grid's CFL step on both grids.
    """
    fine_grid = grid.refine(2)
    coarse = Stepper(project(datum, grid, quad_order, delta), config)
    fine = Stepper(project(datum, fine_grid, quad_order, delta), config)
    T = config.t_final

    def diff():
        return norm_l2_delta(coarse.state.v - transfer(fine.state.v.values, how))

    sup = diff()
    scale = norm_l2_delta(coarse.state.v)
    history = [(0, 0.0, sup)]
    while coarse.t < T:
        if alignment == "synchronized":
            coarse.step(T)
            fine.advance_to(coarse.t)
        elif alignment == "shared":
            dt = min(fine.cfl_dt(fine.coefficient()), T - fine.t)
            fine.step(T, dt)
            coarse.step(T, dt)
            coarse.state.t = fine.t  # identical step sequences
        else:
            raise ValueError(f"unknown alignment {alignment!r}")
        e = diff()
        history.append((coarse.state.n, coarse.t, e))
        sup = max(sup, e)
        scale = max(scale, norm_l2_delta(coarse.state.v))
    return SelfErrorResult(sup, scale, coarse.state.n, fine.state.n, history)
