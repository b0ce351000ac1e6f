"""Run configuration: an INI file with fixed sections, overrides and recipes.

Grammar
-------
Sections and keys (all optional except where a default is missing)::

    [grid]        dim, nx, ny, lx, ly, x0, y0
    [scheme]      epsilon, dt, potential (logarithmic | polynomial), theta,
                  theta_c, k, beta
    [newton]      tol_residual, max_iter, damping_max_halvings, fd_jacobian,
                  nonmonotone_window
    [initial]     type (tanh | random); tanh: shape, lambda;
                  random: mean, amplitude, seed
    [run]         t_end, xi0
    [output]      csv_path, snapshot_every, snapshot_dir, snapshot_binary
    [certify]     per_sweep_energy
    [diagnostics] area_window = xmin, xmax, ymin, ymax

A shape is written as ``circle(cx, cy, r)``, ``ellipse(cx, cy, ra, rb[, angle])``,
``rose(cx, cy)``, ``rectangle(cx, cy, w, h)`` or ``interval(a, b)``; several
shapes joined by ``+`` form their union.  Overrides are ``section.key=value``
or a bare ``key=value`` when the key name is unique across sections.
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .core import Grid, MobilitySpec, PotentialSpec, SchemeParams
from .errors import ConfigError, ParameterError, UnknownRecipe
from .initializers import Circle, Ellipse, Interval, Rectangle, Rose, Union, random_field, tanh_profile
from .newton import NewtonParams

_SHAPES = {
    "circle": (Circle, 3, 3),
    "ellipse": (Ellipse, 4, 5),
    "rose": (Rose, 2, 2),
    "rectangle": (Rectangle, 4, 4),
    "interval": (Interval, 2, 2),
}
_TERM = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")


def parse_shape(text: str):
    parts = [p for p in text.split("+")]
    shapes = []
    for part in parts:
        m = _TERM.match(part)
        if not m or m.group(1) not in _SHAPES:
            raise ConfigError(f"cannot parse shape {part.strip()!r}")
        cls, lo, hi = _SHAPES[m.group(1)]
        try:
            args = [float(a) for a in m.group(2).split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad number in shape {part.strip()!r}") from exc
        if not lo <= len(args) <= hi:
            raise ConfigError(f"{m.group(1)} takes {lo}..{hi} numbers, got {len(args)}")
        try:
            shapes.append(cls(*args))
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
    return shapes[0] if len(shapes) == 1 else Union(tuple(shapes))


def format_shape(shape) -> str:
    if isinstance(shape, Union):
        return " + ".join(format_shape(m) for m in shape.members)
    if isinstance(shape, Circle):
        vals = (shape.cx, shape.cy, shape.r)
    elif isinstance(shape, Ellipse):
        vals = (shape.cx, shape.cy, shape.ra, shape.rb, shape.angle)
    elif isinstance(shape, Rose):
        vals = (shape.cx, shape.cy)
    elif isinstance(shape, Rectangle):
        vals = (shape.cx, shape.cy, shape.w, shape.h)
    elif isinstance(shape, Interval):
        vals = (shape.a, shape.b)
    else:
        raise ConfigError(f"unsupported shape {shape!r}")
    name = type(shape).__name__.lower()
    return f"{name}({', '.join(repr(float(v)) for v in vals)})"


@dataclass(frozen=True)
class TanhInit:
    shape: object
    lam: float = 1.0 - 1e-4


@dataclass(frozen=True)
class RandomInit:
    mean: float = 0.2
    amplitude: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class OutputSpec:
    csv_path: str = "diagnostics.csv"
    snapshot_every: int = 1000
    snapshot_dir: str = "snapshots"
    snapshot_binary: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: SchemeParams
    initial: object
    t_end: float
    xi0: float = 1.0
    output: OutputSpec = field(default_factory=OutputSpec)
    per_sweep_energy: bool = True
    area_window: Optional[tuple] = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.output.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")

    @property
    def n_steps(self) -> int:
        n = self.t_end / self.params.dt
        steps = int(round(n))
        if abs(n - steps) > 1e-9 * max(1.0, n):
            raise ConfigError("t_end must be a whole number of time steps")
        return steps

    def initial_field(self):
        if isinstance(self.initial, TanhInit):
            return tanh_profile(self.grid, self.initial.shape, self.params.epsilon, self.initial.lam)
        return random_field(self.grid, self.initial.mean, self.initial.amplitude, self.initial.seed)


# ---------------------------------------------------------------- INI mapping

_DEFAULTS = {
    "grid": {"dim": "2", "nx": "250", "ny": "250", "lx": "1.0", "ly": "1.0", "x0": "0.0", "y0": "0.0"},
    "scheme": {"epsilon": "0.02", "dt": "0.0001", "potential": "logarithmic", "theta": "0.3",
               "theta_c": "1.0", "k": "1", "beta": "1.0"},
    "newton": {"tol_residual": "1e-12", "max_iter": "50", "damping_max_halvings": "30",
               "fd_jacobian": "false", "nonmonotone_window": "5"},
    "initial": {"type": "tanh", "shape": "circle(0.5, 0.5, 0.25)", "lambda": repr(1.0 - 1e-4),
                "mean": "0.2", "amplitude": "0.05", "seed": "0"},
    "run": {"t_end": "0.01", "xi0": "1.0"},
    "output": {"csv_path": "diagnostics.csv", "snapshot_every": "1000", "snapshot_dir": "snapshots",
               "snapshot_binary": "false"},
    "certify": {"per_sweep_energy": "true"},
    "diagnostics": {"area_window": ""},
}


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(_DEFAULTS)
    return cp


def _get(cp, sec, key, conv):
    raw = cp.get(sec, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{sec}] {key} = {raw!r} is not valid") from exc


def _bool(s):
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(s)
    return int(v)


def _window(s):
    s = s.strip()
    if not s:
        return None
    vals = tuple(float(v) for v in s.split(","))
    if len(vals) not in (2, 4):
        raise ValueError(s)
    return vals


def from_parser(cp: configparser.ConfigParser) -> RunConfig:
    unknown = set(cp.sections()) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    for sec in _DEFAULTS:
        extra = set(cp[sec]) - set(_DEFAULTS[sec])
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
    try:
        dim = _get(cp, "grid", "dim", _int)
        nx = _get(cp, "grid", "nx", _int)
        lx = _get(cp, "grid", "lx", float)
        x0 = _get(cp, "grid", "x0", float)
        if dim == 1:
            grid = Grid.line(nx, lx, x0)
        else:
            grid = Grid.rect(nx, _get(cp, "grid", "ny", _int), lx, _get(cp, "grid", "ly", float),
                             (x0, _get(cp, "grid", "y0", float)))
        kind = cp.get("scheme", "potential").strip().lower()
        if kind == "logarithmic":
            pot = PotentialSpec.logarithmic(_get(cp, "scheme", "theta", float),
                                            _get(cp, "scheme", "theta_c", float))
        elif kind == "polynomial":
            pot = PotentialSpec.polynomial()
        else:
            raise ConfigError(f"unknown potential {kind!r}")
        newton = NewtonParams(
            tol_residual=_get(cp, "newton", "tol_residual", float),
            max_iter=_get(cp, "newton", "max_iter", _int),
            damping_max_halvings=_get(cp, "newton", "damping_max_halvings", _int),
            fd_jacobian=_get(cp, "newton", "fd_jacobian", _bool),
            nonmonotone_window=_get(cp, "newton", "nonmonotone_window", _int),
        )
        params = SchemeParams(
            epsilon=_get(cp, "scheme", "epsilon", float),
            dt=_get(cp, "scheme", "dt", float),
            potential=pot,
            mobility=MobilitySpec(_get(cp, "scheme", "k", _int), _get(cp, "scheme", "beta", float)),
            newton=newton,
        )
        itype = cp.get("initial", "type").strip().lower()
        if itype == "tanh":
            initial = TanhInit(parse_shape(cp.get("initial", "shape")), _get(cp, "initial", "lambda", float))
        elif itype == "random":
            initial = RandomInit(_get(cp, "initial", "mean", float), _get(cp, "initial", "amplitude", float),
                                 _get(cp, "initial", "seed", _int))
        else:
            raise ConfigError(f"unknown initial type {itype!r}")
        output = OutputSpec(
            csv_path=cp.get("output", "csv_path"),
            snapshot_every=_get(cp, "output", "snapshot_every", _int),
            snapshot_dir=cp.get("output", "snapshot_dir"),
            snapshot_binary=_get(cp, "output", "snapshot_binary", _bool),
        )
        cfg = RunConfig(
            grid=grid, params=params, initial=initial,
            t_end=_get(cp, "run", "t_end", float), xi0=_get(cp, "run", "xi0", float),
            output=output, per_sweep_energy=_get(cp, "certify", "per_sweep_energy", _bool),
            area_window=_get(cp, "diagnostics", "area_window", _window),
        )
        cfg.n_steps
        return cfg
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def to_parser(cfg: RunConfig) -> configparser.ConfigParser:
    cp = _parser()
    g, p = cfg.grid, cfg.params
    cp["grid"].update(dim=str(g.dim), nx=str(g.nx), ny=str(g.ny), lx=repr(g.extent[0]),
                      ly=repr(g.extent[1]), x0=repr(g.origin[0]), y0=repr(g.origin[1]))
    cp["scheme"].update(epsilon=repr(p.epsilon), dt=repr(p.dt), potential=p.potential.kind.value,
                        theta=repr(p.potential.theta), theta_c=repr(p.potential.theta_c),
                        k=str(p.mobility.k), beta=repr(p.mobility.beta))
    nw = p.newton
    cp["newton"].update(tol_residual=repr(nw.tol_residual), max_iter=str(nw.max_iter),
                        damping_max_halvings=str(nw.damping_max_halvings),
                        fd_jacobian=str(nw.fd_jacobian).lower(),
                        nonmonotone_window=str(nw.nonmonotone_window))
    if isinstance(cfg.initial, TanhInit):
        cp["initial"].update(type="tanh", shape=format_shape(cfg.initial.shape), **{"lambda": repr(cfg.initial.lam)})
    else:
        cp["initial"].update(type="random", mean=repr(cfg.initial.mean),
                             amplitude=repr(cfg.initial.amplitude), seed=str(cfg.initial.seed))
    cp["run"].update(t_end=repr(cfg.t_end), xi0=repr(cfg.xi0))
    o = cfg.output
    cp["output"].update(csv_path=o.csv_path, snapshot_every=str(o.snapshot_every),
                        snapshot_dir=o.snapshot_dir, snapshot_binary=str(o.snapshot_binary).lower())
    cp["certify"]["per_sweep_energy"] = str(cfg.per_sweep_energy).lower()
    cp["diagnostics"]["area_window"] = "" if cfg.area_window is None else \
        ", ".join(repr(float(v)) for v in cfg.area_window)
    return cp


def dumps(cfg: RunConfig) -> str:
    buf = io.StringIO()
    to_parser(cfg).write(buf)
    return buf.getvalue()


def loads(text: str, overrides=()) -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    apply_overrides(cp, overrides)
    return from_parser(cp)


def load(path, overrides=()) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text, overrides)


def _resolve_key(key: str):
    if "." in key:
        sec, name = key.split(".", 1)
        if sec not in _DEFAULTS or name not in _DEFAULTS[sec]:
            raise ConfigError(f"unknown config key {key!r}")
        return sec, name
    hits = [sec for sec, keys in _DEFAULTS.items() if key in keys]
    if len(hits) != 1:
        raise ConfigError(f"key {key!r} is {'ambiguous' if hits else 'unknown'}; use section.key")
    return hits[0], key


def split_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, value = item.split("=", 1)
    return _resolve_key(key.strip()) + (value.strip(),)


def apply_overrides(cp: configparser.ConfigParser, overrides):
    for item in overrides:
        sec, name, value = split_override(item) if isinstance(item, str) else (*_resolve_key(item[0]), str(item[1]))
        cp[sec][name] = value
    return cp


def with_overrides(cfg: RunConfig, overrides) -> RunConfig:
    if not overrides:
        return cfg
    cp = to_parser(cfg)
    apply_overrides(cp, overrides)
    return from_parser(cp)


# -------------------------------------------------------------------- recipes

def _base(nx=250, t_end=1.0, theta=0.3, potential="logarithmic"):
    cp = _parser()
    cp["grid"].update(nx=str(nx), ny=str(nx))
    cp["scheme"].update(theta=repr(theta), potential=potential)
    cp["run"]["t_end"] = repr(t_end)
    return cp


def _recipe_parser(name: str) -> configparser.ConfigParser:
    if name == "random":
        cp = _base(t_end=0.1)
        cp["initial"].update(type="random", mean="0.2", amplitude="0.05", seed="0")
    elif name == "rose":
        cp = _base(t_end=1.0)
        cp["initial"]["shape"] = "rose(0.5, 0.5)"
    elif name == "two-circles":
        cp = _base(t_end=2.0)
        cp["initial"]["shape"] = "circle(0.4, 0.4, 0.2) + circle(0.75, 0.75, 0.1)"
    elif name == "ellipse-circle":
        cp = _base(t_end=3.0)
        ra, rb = math.sqrt(2) / 5, math.sqrt(2) / 10
        cp["initial"]["shape"] = f"ellipse(0.4, 0.4, {ra!r}, {rb!r}, 45.0) + circle(0.75, 0.75, 0.1)"
    elif name == "pinch-off":
        cp = _base(t_end=6.0, theta=0.2)
        cp["initial"]["shape"] = "rectangle(0.5, 0.5, 0.8, 0.04)"
    else:
        raise UnknownRecipe(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    return cp


RECIPES = ("random", "rose", "two-circles", "ellipse-circle", "pinch-off")


def recipe(name: str, overrides=()) -> RunConfig:
    """Configuration of a named experiment with optional overrides.

    Every recipe uses dt = 1e-4, a 250 x 250 grid on the unit square
    (spacing 0.004), epsilon = 0.02, theta_c = 1 and M = 1 - phi^2.
    """
    cp = _recipe_parser(name)
    if isinstance(overrides, dict):
        overrides = list(overrides.items())
    apply_overrides(cp, overrides)
    return from_parser(cp)
