"""First-order nabla calculus for functions sampled on a grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NablaFracError, NodesOutOfOrder, NoPredecessor, NotIncreasing
from .timescale import Grid

# absolute slack for the extension inequality check
EXTENSION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise NablaFracError(
                f"expected {len(self.grid)} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise NablaFracError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, grid: Grid, f: Callable) -> "GridFunction":
        """Sample ``f`` at every node; ``f`` may be vectorised or scalar."""
        try:
            vals = np.asarray(f(grid.nodes), dtype=float)
            if vals.shape != grid.nodes.shape:
                vals = np.broadcast_to(vals, grid.nodes.shape)
        except TypeError:
            vals = np.array([f(t) for t in grid.nodes], dtype=float)
        return cls(grid, vals)

    def at(self, theta: float) -> float:
        return float(self.values[self.grid.index(theta)])

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def __rmul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    def shift(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values - c)


def backward_differences(f: GridFunction) -> np.ndarray:
    """Slope of ``f`` on every step: entry ``i`` belongs to the step ending
    at node ``i + 1``.  At a left-scattered node this is the exact nabla
    derivative, inside an interval the backward difference quotient.
    """
    return np.diff(f.values) / f.grid.steps


def nabla_derivative(f: GridFunction, theta: float) -> float:
    i = f.grid.index(theta)
    if i == 0:
        raise NoPredecessor(theta)
    nodes = f.grid.nodes
    return float((f.values[i] - f.values[i - 1]) / (nodes[i] - nodes[i - 1]))


def nabla_derivative_values(f: GridFunction) -> GridFunction:
    """Nabla derivative at every node.  The first node has no predecessor;
    its entry repeats the first slope so that the result is a GridFunction.
    """
    d = backward_differences(f)
    first = d[:1] if len(d) else np.zeros(1)
    return GridFunction(f.grid, np.concatenate([first, d]))


def step_contributions(f: GridFunction) -> np.ndarray:
    """Nabla-integral contribution of each step.

    Gap steps contribute ``graininess * f(right node)``; steps inside an
    interval use the trapezoid rule.
    """
    g = f.grid
    v = f.values
    h = g.steps
    scat = g.scattered[1:]
    return np.where(scat, h * v[1:], 0.5 * h * (v[:-1] + v[1:]))


def nabla_integral(f: GridFunction, a: float, b: float) -> float:
    """Nabla integral of ``f`` from node ``a`` to node ``b``."""
    if a > b:
        raise NodesOutOfOrder(a, b)
    i, j = f.grid.index(a), f.grid.index(b)
    return float(np.sum(step_contributions(f)[i:j]))


def real_extension_integral(f: GridFunction, a: float, b: float) -> float:
    """Ordinary integral over ``[a, b]`` of the real-line extension of ``f``.

    Inside intervals the extension is ``f`` itself (linear between samples).
    On a gap ``(alpha(t), t)`` it is held at the constant ``f(t)``.
    """
    if a > b:
        raise NodesOutOfOrder(a, b)
    g = f.grid
    i, j = g.index(a), g.index(b)
    total = 0.0
    for k in range(i, j):
        width = g.nodes[k + 1] - g.nodes[k]
        if g.scattered[k + 1]:
            total += width * f.values[k + 1]
        else:
            total += width * 0.5 * (f.values[k] + f.values[k + 1])
    return total


def extension_inequality_check(
    f: GridFunction, a: float, b: float
) -> tuple[float, float, bool]:
    """Compare the nabla integral with the integral of the real extension.

    Returns ``(lhs, rhs, holds)`` with ``holds = lhs <= rhs + 1e-9``.
    ``f`` must be non-decreasing over the nodes in ``[a, b]``.
    """
    if not a < b:
        raise NodesOutOfOrder(a, b)
    i, j = f.grid.index(a), f.grid.index(b)
    if np.any(np.diff(f.values[i : j + 1]) < 0):
        raise NotIncreasing("function decreases between the given nodes")
    lhs = nabla_integral(f, a, b)
    rhs = real_extension_integral(f, a, b)
    return lhs, rhs, lhs <= rhs + EXTENSION_TOL
