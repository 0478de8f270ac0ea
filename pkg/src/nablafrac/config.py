"""Line-oriented problem and constants files.

Problem file::

    # comments start with '#'
    [timescale]
    interval 0 1
    point 1.5

    [problem]
    w = 1/2
    rhs = exp(-3*theta)*(2+abs(p)+abs(h))/(35*exp(2*theta)*(1+abs(p)+abs(h)))
    phi = (1+e^pa)/5
    phi_anchor = 1          # optional, defaults to the time-scale maximum

    [impulses]
    at = 1/3                # one 'at' line opens an impulse ...
    map = (1+theta*e^p)/10  # ... and the next 'map' line closes it

    [solver]
    mesh = 1e-3
    history_variant = frozen

    [output]
    csv = solution.csv

Numeric values may be constant expressions such as ``1/3``.  A relative
``csv`` path is taken relative to the working directory.  Unknown
sections or keys, duplicates and missing required keys are errors that
carry the offending line number.

Constants file: ``key = value`` lines with keys ``K G A F E mu H`` and the
comma-separated lists ``M`` and ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .conditions import HypothesisConstants
from .errors import ConfigError, ExprError, NablaFracError, TimeScaleError
from .expr import IMPULSE_VARS, PHI_VARS, RHS_VARS, Expr
from .solver import Impulse, ImpulsiveProblem, SolverConfig
from .timescale import Interval, Point, TimeScale

SECTIONS = ("timescale", "problem", "impulses", "solver", "output")
PROBLEM_KEYS = ("w", "rhs", "phi", "phi_anchor")
SOLVER_FLOATS = ("mesh", "tol_h", "tol_picard", "tol_outer")
SOLVER_INTS = ("max_inner", "max_picard", "max_outer")
SOLVER_KEYS = SOLVER_FLOATS + SOLVER_INTS + ("history_variant", "outer_seed")
CONSTANT_SCALARS = ("K", "G", "A", "F", "E", "mu", "H")
CONSTANT_LISTS = ("M", "L")


@dataclass
class LoadedConfig:
    problem: ImpulsiveProblem
    solver: SolverConfig
    csv: str | None = None
    source: str | None = None
    lines: dict[str, int] = field(default_factory=dict)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def number(text: str, lineno: int) -> float:
    """A finite constant expression."""
    try:
        v = Expr.parse(text, frozenset(), "number").eval()
    except ExprError as exc:
        raise ConfigError(f"bad number {text!r}: {exc}", lineno) from None
    if not math.isfinite(v):
        raise ConfigError(f"number {text!r} is not finite", lineno)
    return float(v)


def _integer(text: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", lineno) from None


def _expr(text: str, allowed, role: str, lineno: int) -> Expr:
    try:
        return Expr.parse(text, allowed, role)
    except ExprError as exc:
        raise ConfigError(f"{role}: {exc}", lineno) from None


def _key_value(line: str, lineno: int) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
    key, value = (s.strip() for s in line.split("=", 1))
    if not key or not value:
        raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
    return key, value


def parse_problem(text: str, source: str | None = None) -> LoadedConfig:
    section = None
    seen_sections: set[str] = set()
    ts_lines: list[tuple[int, str]] = []
    problem: dict[str, tuple[int, str]] = {}
    impulses: list[tuple[int, float, int, Expr]] = []
    pending_at: tuple[int, float] | None = None
    solver: dict[str, object] = {}
    solver_lines: dict[str, int] = {}
    csv = None
    csv_line = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in seen_sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            if section == "impulses" and pending_at is not None:
                raise ConfigError("impulse 'at' without a following 'map'", pending_at[0])
            seen_sections.add(name)
            section = name
            continue
        if section is None:
            raise ConfigError("content before the first section header", lineno)

        if section == "timescale":
            ts_lines.append((lineno, line))
            continue

        key, value = _key_value(line, lineno)
        if section == "problem":
            if key not in PROBLEM_KEYS:
                raise ConfigError(f"unknown key {key!r} in [problem]", lineno)
            if key in problem:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            problem[key] = (lineno, value)
        elif section == "impulses":
            if key == "at":
                if pending_at is not None:
                    raise ConfigError("impulse 'at' without a following 'map'", pending_at[0])
                pending_at = (lineno, number(value, lineno))
            elif key == "map":
                if pending_at is None:
                    raise ConfigError("impulse 'map' without a preceding 'at'", lineno)
                impulses.append((pending_at[0], pending_at[1], lineno, _expr(value, IMPULSE_VARS, "impulse", lineno)))
                pending_at = None
            else:
                raise ConfigError(f"unknown key {key!r} in [impulses]", lineno)
        elif section == "solver":
            if key not in SOLVER_KEYS:
                raise ConfigError(f"unknown key {key!r} in [solver]", lineno)
            if key in solver:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            if key in SOLVER_FLOATS or key == "outer_seed":
                solver[key] = number(value, lineno)
            elif key in SOLVER_INTS:
                solver[key] = _integer(value, lineno)
            else:
                solver[key] = value
            solver_lines[key] = lineno
        elif section == "output":
            if key != "csv":
                raise ConfigError(f"unknown key {key!r} in [output]", lineno)
            if csv is not None:
                raise ConfigError("duplicate key 'csv'", lineno)
            csv, csv_line = value, lineno

    if pending_at is not None:
        raise ConfigError("impulse 'at' without a following 'map'", pending_at[0])
    if not ts_lines:
        raise ConfigError("missing [timescale] section or it is empty", None)
    comps = []
    for lineno, line in ts_lines:
        parts = line.split()
        if parts[0] == "interval" and len(parts) == 3:
            comps.append(Interval(number(parts[1], lineno), number(parts[2], lineno)))
        elif parts[0] == "point" and len(parts) == 2:
            comps.append(Point(number(parts[1], lineno)))
        else:
            raise ConfigError(f"expected 'interval lo hi' or 'point x', got {line!r}", lineno)
        try:
            TimeScale(comps)
        except TimeScaleError as exc:
            raise ConfigError(f"time scale: {exc}", lineno) from None
    ts = TimeScale(comps)

    for key in ("w", "rhs", "phi"):
        if key not in problem:
            raise ConfigError(f"missing required key {key!r} in [problem]", None)
    w_line, w_text = problem["w"]
    w = number(w_text, w_line)
    if not 0 < w < 1:
        raise ConfigError(f"w must lie in (0, 1), got {w!r}", w_line)
    rhs = _expr(problem["rhs"][1], RHS_VARS, "rhs", problem["rhs"][0])
    phi = _expr(problem["phi"][1], PHI_VARS, "phi", problem["phi"][0])
    anchor = None
    if "phi_anchor" in problem:
        a_line, a_text = problem["phi_anchor"]
        anchor = number(a_text, a_line)
        if anchor not in ts:
            raise ConfigError(f"phi_anchor {anchor!r} is not in the time scale", a_line)

    if ts.is_degenerate:
        raise ConfigError("time scale has a single point", ts_lines[0][0])
    prev = ts.min
    for at_line, at, _, _ in impulses:
        if at not in ts:
            raise ConfigError(f"impulse time {at!r} is not in the time scale", at_line)
        if not ts.min < at < ts.max:
            raise ConfigError(f"impulse time {at!r} must lie strictly inside ({ts.min!r}, {ts.max!r})", at_line)
        if not at > prev:
            raise ConfigError(f"impulse times must be strictly increasing, got {at!r}", at_line)
        prev = at

    try:
        prob = ImpulsiveProblem(
            ts, w, rhs, phi, tuple(Impulse(at, m) for _, at, _, m in impulses), anchor
        )
    except NablaFracError as exc:
        raise ConfigError(str(exc), None) from None
    try:
        cfg = SolverConfig(**solver)
    except NablaFracError as exc:
        bad = next((solver_lines[k] for k in solver_lines if k in str(exc)), None)
        raise ConfigError(str(exc), bad) from None

    lines = {k: v[0] for k, v in problem.items()}
    lines.update(solver_lines)
    if csv is not None:
        lines["csv"] = csv_line
    return LoadedConfig(prob, cfg, csv, source, lines)


def load_problem(path: str | Path) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", None) from None
    return parse_problem(text, str(path))


def parse_constants(text: str) -> HypothesisConstants:
    values: dict[str, object] = {}
    first_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        first_line = first_line or lineno
        key, value = _key_value(line, lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if key in CONSTANT_SCALARS:
            values[key] = number(value, lineno)
        elif key in CONSTANT_LISTS:
            values[key] = tuple(number(v.strip(), lineno) for v in value.split(","))
        else:
            raise ConfigError(f"unknown constant {key!r}", lineno)
    for key in ("K", "G"):
        if key not in values:
            raise ConfigError(f"missing required constant {key!r}", None)
    try:
        return HypothesisConstants(**values)
    except NablaFracError as exc:
        raise ConfigError(str(exc), first_line) from None


def load_constants(path: str | Path) -> HypothesisConstants:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", None) from None
    return parse_constants(text)
