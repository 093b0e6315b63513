"""Builds data and scheme settings from an :class:`ExperimentConfig` and runs ladders."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .convergence import (ErrorRow, ExactError, RateTheory, aggregate_rate, project,
                          rate_table, self_error, theory_rates)
from .grid import PeriodicGrid, norm_l2_delta, norm_linf
from .initial_data import (CnoidalParams, cnoidal, cnoidal_mismatch, constant, delta_rule,
                           peak_abs, rough_halfinteger, rough_integer, scaled, sinusoidal)
from .scheme import (AdaptiveMaxAbs, BlowUpError, Experimental, Fixed, SchemeConfig,
                     Theoretical, run)


def fmt(x) -> str:
    """Floats with 17 significant digits; None as empty."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def atomic_write(path, text: str):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Problem:
    """Everything needed to run one configured experiment at any resolution."""

    datum: callable
    L: float
    scheme: SchemeConfig
    nominal_s: Optional[float] = None
    exact: Optional[callable] = None
    notes: dict = field(default_factory=dict)


def build_problem(cfg: ExperimentConfig) -> Problem:
    d, s = cfg.datum, cfg.scheme
    L = cfg.grid.L
    nominal = None
    exact = None
    notes = {}
    if d.name == "sinusoidal":
        f = sinusoidal(L)
    elif d.name == "zero":
        f = constant(0.0)
        exact = lambda t, x: np.zeros(np.shape(x))
    elif d.name == "constant":
        f = constant(d.value)
        exact = lambda t, x: np.full(np.shape(x), float(d.value))
    elif d.name == "cnoidal":
        params = CnoidalParams(m=d.m, mu=d.mu, L=L)
        if d.period == "natural":
            L = params.spatial_period
            params = CnoidalParams(m=d.m, mu=d.mu, L=L)
        exact = lambda t, x, p=params: cnoidal(p, t, x)
        f = lambda x, p=params: cnoidal(p, 0.0, x)
        notes["cnoidal"] = {"K": params.K, "a": params.a, "v": params.v, "crest": params.crest,
                            "L": L, "seam_mismatch_t0": _mismatch(params, 0.0),
                            "seam_mismatch_T": _mismatch(params, s.T)}
    elif d.name == "rough_integer":
        f = rough_integer(d.s, L)
        nominal = float(d.s)
    else:
        f = rough_halfinteger(d.level, L)
        nominal = d.level + 0.5
    normalize = d.normalize or ("peak" if d.name.startswith("rough") else "none")
    if normalize == "peak":
        peak = peak_abs(f, L)
        if peak > 0:
            f = scaled(f, 1.0 / peak)
            notes["peak_scale"] = 1.0 / peak
    rusanov = Fixed(s.c) if s.rusanov == "fixed" else AdaptiveMaxAbs()
    cfl = Theoretical(s.beta0) if s.cfl == "theoretical" else Experimental()
    scheme = SchemeConfig(theta=s.theta, rusanov_policy=rusanov, cfl_policy=cfl,
                          t_final=s.T, dt_cap=s.dt_cap, solver=s.solver)
    return Problem(f, L, scheme, nominal, exact, notes)


def _mismatch(params, t):
    m = cnoidal_mismatch(params, t)
    return {"value": m["value"], "slope": m["slope"]}


def delta_function(cfg: ExperimentConfig, problem: Problem):
    m = cfg.mollifier
    if not m.enabled:
        return None
    if m.delta is not None:
        return lambda dx: m.delta
    s = problem.nominal_s if problem.nominal_s is not None else 6.0
    return lambda dx: delta_rule(dx, s, m.exponent, m.gamma)


@dataclass
class ConvergenceReport:
    rows: list
    aggregate: Optional[float]
    theory: Optional[RateTheory]
    config: dict
    reference: str
    notes: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["J", "dx", "error", "rate", "log_dx", "log_error", "flag"])
        for r in self.rows:
            ok = r.error > 0 and math.isfinite(r.error)
            w.writerow([r.J, fmt(r.dx), fmt(r.error), fmt(r.rate), fmt(math.log(r.dx)),
                        fmt(math.log(r.error)) if ok else "", r.flag or ""])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "reference": self.reference,
            "rows": [asdict(r) for r in self.rows],
            "aggregate_rate": self.aggregate,
            "aggregate_rule": "mean of the finest rates, count = convergence.aggregate",
            "theory": asdict(self.theory) if self.theory else None,
            "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in self.checks],
            "notes": self.notes,
            "config": self.config,
        }
        return json.dumps(payload, indent=2, default=_json_default, allow_nan=False) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def ladder_row(cfg: ExperimentConfig, problem: Problem, J: int):
    """(J, error, scale, dx) for one ladder entry; error None with a message on failure."""
    grid = PeriodicGrid(problem.L, J)
    conv = cfg.convergence
    q = cfg.quadrature.order
    delta = delta_function(cfg, problem)
    try:
        if conv.reference == "exact":
            v0 = project(problem.datum, grid, q, delta)
            obs = ExactError(problem.exact, grid, conv.exact_mode, q, cfg.quadrature.time_order)
            obs(0, 0.0, v0)
            run(v0, problem.scheme, obs)
            return J, obs.finish(), norm_l2_delta(v0), grid.dx, None
        res = self_error(problem.scheme, problem.datum, grid, conv.alignment, conv.transfer,
                         q, delta)
        return J, res.error, res.scale, grid.dx, None
    except (BlowUpError, ValueError, FloatingPointError) as exc:
        return J, None, None, grid.dx, f"failed: {exc}"


def experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ConvergenceReport:
    problem = build_problem(cfg)
    ladder = list(cfg.grid.ladder) or [cfg.grid.J]
    threads = threads or cfg.run.threads
    if threads > 1 and len(ladder) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda J: ladder_row(cfg, problem, J), ladder))
    else:
        results = [ladder_row(cfg, problem, J) for J in ladder]
    rows = rate_table([(J, e, sc, dx) for J, e, sc, dx, _ in results])
    for row, (_, _, _, _, msg) in zip(rows, results):
        if msg:
            row.flag = msg
    conv = cfg.convergence
    agg = aggregate_rate(rows, conv.aggregate)
    theory = theory_rates(problem.nominal_s) if problem.nominal_s is not None else None
    report = ConvergenceReport(rows, agg, theory, cfg.to_dict(), conv.reference, problem.notes)
    rates = [r.rate for r in rows if r.rate is not None]
    if conv.expected_rate is not None:
        ok = agg is not None and abs(agg - conv.expected_rate) <= conv.rate_tolerance
        report.checks.append(("aggregate_rate", ok,
                              f"{fmt(agg)} vs {fmt(conv.expected_rate)} +- {fmt(conv.rate_tolerance)}"))
    if conv.rate_min is not None or conv.rate_max is not None:
        lo = -math.inf if conv.rate_min is None else conv.rate_min
        hi = math.inf if conv.rate_max is None else conv.rate_max
        ok = bool(rates) and len(rates) == len(rows) - 1 and all(lo <= r <= hi for r in rates)
        report.checks.append(("rate_range", ok, f"{[fmt(r) for r in rates]} in [{lo}, {hi}]"))
    if conv.expected_error is not None:
        e0 = rows[0].error
        ok = math.isfinite(e0) and e0 > 0 and (
            conv.expected_error / conv.error_factor <= e0 <= conv.expected_error * conv.error_factor)
        report.checks.append(("coarsest_error", ok,
                              f"{fmt(e0)} vs {fmt(conv.expected_error)} within x{fmt(conv.error_factor)}"))
    if any(r.flag and r.flag.startswith("failed") for r in rows):
        report.checks.append(("rows_completed", False, "; ".join(r.flag for r in rows if r.flag)))
    return report


@dataclass
class SimulationResult:
    grid: PeriodicGrid
    initial: object
    final: object
    steps: int
    t: float
    snapshots: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"J": self.grid.J, "L": self.grid.L, "steps": self.steps, "t": self.t,
                "l2_initial": norm_l2_delta(self.initial), "l2_final": norm_l2_delta(self.final),
                "linf_initial": norm_linf(self.initial), "linf_final": norm_linf(self.final),
                "mean_initial": self.initial.mean(), "mean_final": self.final.mean()}


def simulate(cfg: ExperimentConfig, snapshots: bool = False) -> SimulationResult:
    problem = build_problem(cfg)
    grid = PeriodicGrid(problem.L, cfg.grid.J)
    v0 = project(problem.datum, grid, cfg.quadrature.order, delta_function(cfg, problem))
    snaps = [(0, 0.0, v0)] if snapshots else []
    observer = (lambda n, t, v: snaps.append((n, t, v))) if snapshots else None
    state = run(v0, problem.scheme, observer)
    return SimulationResult(grid, v0, state.v, state.n, state.t, snaps)


def state_csv(grid: PeriodicGrid, v, t: Optional[float] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "v"] if t is None else ["t", "x", "v"])
    for x, val in zip(grid.nodes, np.asarray(v)):
        w.writerow([fmt(float(x)), fmt(float(val))] if t is None
                   else [fmt(t), fmt(float(x)), fmt(float(val))])
    return buf.getvalue()
