"""Bounded time scales made of closed intervals and isolated points.

A time scale here is a finite union of closed intervals and isolated
points, stored in increasing order.  Only the backward (nabla) structure is
provided: the backward jump ``alpha``, the graininess ``theta - alpha(theta)``
and the left-dense / left-scattered classification.

>>> ts = TimeScale([Interval(0, 1), Point(2)])
>>> ts.backward_jump(2)
1.0
>>> ts.graininess(0.5)
0.0
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ExtraNodeOutsideTimeScale,
    JumpUndefinedAtMinimum,
    NotANode,
    PointNotInTimeScale,
    TimeScaleError,
)

# absolute tolerance for membership and node matching
EPS = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def inf(self) -> float:
        return self.lo

    @property
    def sup(self) -> float:
        return self.hi


@dataclass(frozen=True)
class Point:
    x: float

    @property
    def inf(self) -> float:
        return self.x

    @property
    def sup(self) -> float:
        return self.x


Component = Interval | Point


class PointKind(enum.Enum):
    LEFT_DENSE = "left-dense"
    LEFT_SCATTERED = "left-scattered"


class TimeScale:
    """Finite, ordered union of disjoint closed intervals and isolated points.

    Intervals of zero length are stored as :class:`Point`.  Components must
    be strictly separated: the supremum of one is below the infimum of the
    next.  Instances are immutable.
    """

    __slots__ = ("_components",)

    def __init__(self, components: Iterable[Component]):
        comps: list[Component] = []
        for c in components:
            if isinstance(c, Interval):
                lo, hi = float(c.lo), float(c.hi)
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    raise TimeScaleError("interval endpoints must be finite")
                if hi < lo:
                    raise TimeScaleError(f"interval [{lo}, {hi}] has lo > hi")
                comps.append(Point(lo) if hi == lo else Interval(lo, hi))
            elif isinstance(c, Point):
                if not math.isfinite(c.x):
                    raise TimeScaleError("points must be finite")
                comps.append(Point(float(c.x)))
            else:
                raise TypeError(f"not a time scale component: {c!r}")
        if not comps:
            raise TimeScaleError("a time scale needs at least one component")
        for left, right in zip(comps, comps[1:]):
            if not left.sup < right.inf:
                raise TimeScaleError(
                    f"components {left} and {right} overlap or are out of order"
                )
        object.__setattr__(self, "_components", tuple(comps))

    def __setattr__(self, name, value):
        raise AttributeError("TimeScale is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def interval(cls, lo: float, hi: float) -> "TimeScale":
        return cls([Interval(lo, hi)])

    @classmethod
    def integers(cls, lo: int, hi: int) -> "TimeScale":
        """The discrete time scale ``{lo, lo+1, ..., hi}``."""
        return cls([Point(float(k)) for k in range(lo, hi + 1)])

    # -- basic structure ---------------------------------------------------

    @property
    def components(self) -> tuple[Component, ...]:
        return self._components

    @property
    def min(self) -> float:
        return self._components[0].inf

    @property
    def max(self) -> float:
        return self._components[-1].sup

    @property
    def is_degenerate(self) -> bool:
        return len(self._components) == 1 and isinstance(self._components[0], Point)

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeScale) and self._components == other._components

    def __hash__(self) -> int:
        return hash(self._components)

    def __repr__(self) -> str:
        return f"TimeScale({list(self._components)!r})"

    def locate(self, theta: float) -> int | None:
        """Index of the component containing ``theta`` or ``None``."""
        for i, c in enumerate(self._components):
            if c.inf - EPS <= theta <= c.sup + EPS:
                return i
            if theta < c.inf:
                break
        return None

    def __contains__(self, theta: float) -> bool:
        return self.locate(theta) is not None

    # -- nabla structure ---------------------------------------------------

    def _checked(self, theta: float) -> int:
        i = self.locate(theta)
        if i is None:
            raise PointNotInTimeScale(theta)
        if abs(theta - self.min) <= EPS:
            raise JumpUndefinedAtMinimum(theta)
        return i

    def backward_jump(self, theta: float) -> float:
        """sup of the time-scale points strictly below ``theta``."""
        i = self._checked(theta)
        c = self._components[i]
        if isinstance(c, Interval) and theta > c.lo + EPS:
            return float(theta)
        return self._components[i - 1].sup

    def graininess(self, theta: float) -> float:
        return float(theta) - self.backward_jump(theta)

    def classify(self, theta: float) -> PointKind:
        if self.backward_jump(theta) == theta:
            return PointKind.LEFT_DENSE
        return PointKind.LEFT_SCATTERED

    # -- discretisation ----------------------------------------------------

    def build_grid(self, mesh: float, extra_nodes: Sequence[float] = ()) -> "Grid":
        return build_grid(self, mesh, extra_nodes)

    # -- text form ---------------------------------------------------------

    def to_lines(self) -> list[str]:
        out = []
        for c in self._components:
            if isinstance(c, Interval):
                out.append(f"interval {c.lo!r} {c.hi!r}")
            else:
                out.append(f"point {c.x!r}")
        return out

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "TimeScale":
        comps: list[Component] = []
        for line in lines:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "interval" and len(parts) == 3:
                comps.append(Interval(float(parts[1]), float(parts[2])))
            elif parts[0] == "point" and len(parts) == 2:
                comps.append(Point(float(parts[1])))
            else:
                raise TimeScaleError(f"cannot parse time scale entry {line!r}")
        return cls(comps)


def _subdivisions(length: float, mesh: float) -> int:
    ratio = length / mesh
    n = round(ratio)
    # snap ratios that are integers up to rounding noise, e.g. 0.3/0.1
    if n >= 1 and abs(ratio - n) <= 1e-9 * ratio:
        return n
    return max(1, math.ceil(ratio))


@dataclass(frozen=True, eq=False)
class Grid:
    """Discretisation of a time scale.

    ``scattered[i]`` is true when node ``i`` is left-scattered in the time
    scale; its predecessor node is then exactly ``alpha(nodes[i])``.  The
    step from node ``i-1`` to node ``i`` is a gap step when ``scattered[i]``
    and a continuous step otherwise.
    """

    ts: TimeScale
    nodes: np.ndarray
    mesh: float
    scattered: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, theta: float) -> int:
        i = int(np.searchsorted(self.nodes, theta - EPS))
        if i < len(self.nodes) and abs(self.nodes[i] - theta) <= EPS:
            return i
        raise NotANode(theta)

    def has_node(self, theta: float) -> bool:
        try:
            self.index(theta)
        except NotANode:
            return False
        return True

    @property
    def steps(self) -> np.ndarray:
        """Step lengths ``nodes[i+1] - nodes[i]``."""
        return np.diff(self.nodes)


def build_grid(ts: TimeScale, mesh: float, extra_nodes: Sequence[float] = ()) -> Grid:
    """Nodes covering ``ts``: every point and interval endpoint, a uniform
    subdivision of each interval into ``ceil(length / mesh)`` pieces, and
    the forced ``extra_nodes``.
    """
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    # (value, priority); lower priority wins when two candidates coincide
    cand: list[tuple[float, int]] = []
    for c in ts.components:
        if isinstance(c, Point):
            cand.append((c.x, 0))
            continue
        cand.append((c.lo, 0))
        cand.append((c.hi, 0))
        n = _subdivisions(c.hi - c.lo, mesh)
        span = c.hi - c.lo
        cand.extend((c.lo + span * i / n, 2) for i in range(1, n))
    for x in extra_nodes:
        if x not in ts:
            raise ExtraNodeOutsideTimeScale(x)
        cand.append((float(x), 1))
    cand.sort()

    nodes: list[float] = []
    prio: list[int] = []
    for x, pr in cand:
        if nodes and x - nodes[-1] <= EPS:
            if pr < prio[-1]:
                nodes[-1], prio[-1] = x, pr
            continue
        nodes.append(x)
        prio.append(pr)

    arr = np.array(nodes, dtype=float)
    scattered = np.zeros(len(arr), dtype=bool)
    for i in range(1, len(arr)):
        scattered[i] = ts.classify(arr[i]) is PointKind.LEFT_SCATTERED
    arr.setflags(write=False)
    scattered.setflags(write=False)
    return Grid(ts=ts, nodes=arr, mesh=float(mesh), scattered=scattered)
