"""Experiment configuration: an INI document with one section per concern.

Example::

    [datum]
    name = rough_integer        ; sinusoidal | cnoidal | rough_integer | rough_halfinteger | constant | zero
    s = 1                       ; rough_integer order (nominal regularity s-)
    level = 0                   ; rough_halfinteger level (nominal regularity level + 1/2)
    normalize = peak            ; peak | none (scale to max|u0| = 1); default peak for rough data
    m = 0.9                     ; cnoidal
    mu = 0.001736111111111111   ; cnoidal
    period = domain             ; cnoidal: domain (use grid L) | natural (use the wave period)
    value = 0                   ; constant

    [grid]
    L = 50
    J = 1600
    ladder = 1600 3200 6400     ; converge only, each entry doubling the previous

    [scheme]
    theta = 1
    rusanov = adaptive          ; adaptive | fixed
    c = 2.5                     ; fixed only
    cfl = experimental          ; experimental | theoretical
    beta0 = 0.1                 ; theoretical only
    T = 0.1
    dt_cap =                    ; empty means dx
    solver = spectral           ; spectral | banded

    [mollifier]
    enabled = false
    delta =                     ; fixed delta, or empty to use delta = dx^exponent
    exponent =                  ; empty means 1/6 for s >= 3 and gamma/(6-s) otherwise
    gamma = 0.49

    [convergence]
    reference = self            ; self (2J run) | exact (cnoidal, constant, zero)
    exact_mode = point          ; point | cell_time
    alignment = synchronized    ; synchronized | shared
    transfer = restrict         ; restrict | sample
    aggregate = 2               ; number of finest rates averaged
    expected_rate =             ; optional acceptance: aggregated rate within rate_tolerance
    rate_tolerance = 0.05
    rate_min =                  ; optional acceptance: every rate >= rate_min
    rate_max =                  ; optional acceptance: every rate <= rate_max
    expected_error =            ; optional acceptance: coarsest error within error_factor
    error_factor = 2

    [quadrature]
    order = 4
    time_order = 4

    [output]
    dir = out
    format = csv                ; csv | json
    snapshots = false

    [run]
    seed = 0
    threads = 1
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

DATUMS = ("sinusoidal", "cnoidal", "rough_integer", "rough_halfinteger", "constant", "zero")


class ConfigError(ValueError):
    pass


@dataclass
class DatumConfig:
    name: str = "sinusoidal"
    s: int = 1
    level: int = 0
    normalize: Optional[str] = None
    m: float = 0.9
    mu: float = 1.0 / 576.0
    period: str = "domain"
    value: float = 0.0


@dataclass
class GridConfig:
    L: float = 50.0
    J: int = 1600
    ladder: tuple = ()


@dataclass
class SchemeSection:
    theta: float = 1.0
    rusanov: str = "adaptive"
    c: Optional[float] = None
    cfl: str = "experimental"
    beta0: float = 0.1
    T: float = 0.1
    dt_cap: Optional[float] = None
    solver: str = "spectral"


@dataclass
class MollifierConfig:
    enabled: bool = False
    delta: Optional[float] = None
    exponent: Optional[float] = None
    gamma: float = 0.49


@dataclass
class ConvergenceConfig:
    reference: str = "self"
    exact_mode: str = "point"
    alignment: str = "synchronized"
    transfer: str = "restrict"
    aggregate: int = 2
    expected_rate: Optional[float] = None
    rate_tolerance: float = 0.05
    rate_min: Optional[float] = None
    rate_max: Optional[float] = None
    expected_error: Optional[float] = None
    error_factor: float = 2.0


@dataclass
class QuadratureConfig:
    order: int = 4
    time_order: int = 4


@dataclass
class OutputConfig:
    dir: str = "out"
    format: str = "csv"
    snapshots: bool = False


@dataclass
class RunConfig:
    seed: int = 0
    threads: int = 1


@dataclass
class ExperimentConfig:
    datum: DatumConfig = field(default_factory=DatumConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    mollifier: MollifierConfig = field(default_factory=MollifierConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> "ExperimentConfig":
        d, g, s, c = self.datum, self.grid, self.scheme, self.convergence
        _choice("datum.name", d.name, DATUMS)
        if d.normalize is not None:
            _choice("datum.normalize", d.normalize, ("peak", "none"))
        _choice("datum.period", d.period, ("domain", "natural"))
        if d.name == "rough_integer" and d.s < 1:
            raise ConfigError("datum.s must be >= 1")
        if d.name == "rough_halfinteger" and d.level < 0:
            raise ConfigError("datum.level must be >= 0")
        if d.name == "cnoidal" and not (0 < d.m < 1 and d.mu > 0):
            raise ConfigError("cnoidal needs 0 < m < 1 and mu > 0")
        if not (g.L > 0 and math.isfinite(g.L)):
            raise ConfigError("grid.L must be positive")
        if g.J < 4:
            raise ConfigError("grid.J must be >= 4")
        for a, b in zip(g.ladder, g.ladder[1:]):
            if b != 2 * a:
                raise ConfigError(f"grid.ladder must double: {a} -> {b}")
        if any(J < 4 for J in g.ladder):
            raise ConfigError("ladder entries must be >= 4")
        if not 0 <= s.theta <= 1:
            raise ConfigError("scheme.theta must lie in [0, 1]")
        _choice("scheme.rusanov", s.rusanov, ("adaptive", "fixed"))
        if s.rusanov == "fixed" and not (s.c is not None and s.c > 0):
            raise ConfigError("scheme.c must be positive for the fixed policy")
        _choice("scheme.cfl", s.cfl, ("experimental", "theoretical"))
        if not 0 < s.beta0 < 1:
            raise ConfigError("scheme.beta0 must lie in (0, 1)")
        if not s.T >= 0:
            raise ConfigError("scheme.T must be >= 0")
        if s.dt_cap is not None and not s.dt_cap > 0:
            raise ConfigError("scheme.dt_cap must be positive")
        _choice("scheme.solver", s.solver, ("spectral", "banded"))
        m = self.mollifier
        if m.delta is not None and not m.delta > 0:
            raise ConfigError("mollifier.delta must be positive")
        _choice("convergence.reference", c.reference, ("self", "exact"))
        if c.reference == "exact" and d.name not in ("cnoidal", "constant", "zero"):
            raise ConfigError(f"no exact solution for datum {d.name!r}")
        _choice("convergence.exact_mode", c.exact_mode, ("point", "cell_time"))
        _choice("convergence.alignment", c.alignment, ("synchronized", "shared"))
        _choice("convergence.transfer", c.transfer, ("restrict", "sample"))
        if c.aggregate < 1:
            raise ConfigError("convergence.aggregate must be >= 1")
        if self.quadrature.order < 1 or self.quadrature.time_order < 1:
            raise ConfigError("quadrature orders must be >= 1")
        _choice("output.format", self.output.format, ("csv", "json"))
        if self.run.threads < 1:
            raise ConfigError("run.threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key} = {value!r}; expected one of {', '.join(allowed)}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _parse_value(key, raw: str, default, ftype):
    raw = raw.strip()
    optional = "Optional" in str(ftype)
    if raw == "":
        if optional:
            return None
        if isinstance(default, tuple):
            return ()
        raise ConfigError(f"{key} may not be empty")
    base = str(ftype)
    try:
        if "bool" in base:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if "tuple" in base:
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
        if "int" in base:
            return int(raw)
        if "float" in base:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig()
    sections = {f.name: f for f in fields(ExperimentConfig)}
    for name in cp.sections():
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")
        target = getattr(cfg, name)
        known = {f.name: f for f in fields(target)}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
            f = known[key]
            setattr(target, key, _parse_value(f"{name}.{key}", raw, f.default, f.type))
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def dump_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec in fields(ExperimentConfig):
        obj = getattr(cfg, sec.name)
        cp[sec.name] = {f.name: _fmt(getattr(obj, f.name)) for f in fields(obj)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
