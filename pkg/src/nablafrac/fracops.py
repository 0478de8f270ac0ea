"""Fractional nabla operators on a grid.

All three operators share one discretisation of the weakly singular
convolution

    (1/Gamma(w)) * integral_a^theta (theta - alpha(s))**(w-1) * u(s) nabla s

as a sum over grid steps.  A step ending at a left-scattered node ``t``
contributes ``nu(t) * (theta - alpha(t))**(w-1) * u(t)``.  A step
``[t_j, t_{j+1}]`` inside an interval, where ``alpha(s) = s``, integrates the
kernel exactly,

    ((theta - t_j)**w - (theta - t_{j+1})**w) / w,

against a constant value for ``u`` on the step.  The singularity at
``s = theta`` is therefore handled analytically.

The operators differ only in what constant represents ``u`` on a step:

* fractional integral: the midpoint of the linear interpolant of ``f``
  inside intervals, ``f(t)`` on gap steps;
* Caputo derivative: the backward difference quotient of ``f`` over the
  step (the exact nabla derivative on gap steps);
* Riemann-Liouville derivative: the backward difference of the fractional
  integral of order ``1 - w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NablaFracError, NodesOutOfOrder, NoPredecessor
from .nabla import GridFunction, backward_differences
from .timescale import Grid


@dataclass(frozen=True)
class FracOrder:
    w: float

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise NablaFracError(f"fractional order must lie in (0, 1), got {self.w!r}")

    def __float__(self) -> float:
        return float(self.w)


def _order(w: float | FracOrder) -> float:
    return FracOrder(float(w)).w


def kernel_matrix(
    grid: Grid, eval_idx: np.ndarray, lo: int, hi: int, order: float
) -> np.ndarray:
    """Kernel moments of steps ``lo..hi-1`` seen from each evaluation node.

    Row ``r`` holds the weight of step ``k`` (from node ``k`` to ``k+1``)
    for evaluation at ``grid.nodes[eval_idx[r]]``.  Steps that end after the
    evaluation node get weight zero.  The ``1/Gamma`` factor is not applied.
    """
    t = grid.nodes
    theta = t[np.asarray(eval_idx)][:, None]
    left = t[lo:hi][None, :]
    right = t[lo + 1 : hi + 1][None, :]
    active = np.arange(lo + 1, hi + 1)[None, :] <= np.asarray(eval_idx)[:, None]
    gap = grid.scattered[lo + 1 : hi + 1][None, :]

    d_left = np.where(active, theta - left, 1.0)
    d_right = np.where(active, np.maximum(theta - right, 0.0), 0.0)
    cont = (d_left**order - d_right**order) / order
    jump = (right - left) * d_left ** (order - 1.0)
    return np.where(active, np.where(gap, jump, cont), 0.0)


# rows per kernel block in the whole-grid operators
BLOCK = 512


def apply_kernel(grid: Grid, eval_idx: np.ndarray, lo: int, hi: int, order: float, step_vals: np.ndarray) -> np.ndarray:
    """``kernel_matrix(...) @ step_vals`` computed in row blocks."""
    eval_idx = np.asarray(eval_idx)
    out = np.empty(len(eval_idx))
    for s in range(0, len(eval_idx), BLOCK):
        rows = eval_idx[s : s + BLOCK]
        out[s : s + BLOCK] = kernel_matrix(grid, rows, lo, hi, order) @ step_vals
    return out


def step_means(values: np.ndarray, gap: np.ndarray) -> np.ndarray:
    """Constant representing a node function on each step."""
    return np.where(gap, values[1:], 0.5 * (values[:-1] + values[1:]))


def _span(f: GridFunction, a: float, theta: float) -> tuple[int, int]:
    if a > theta:
        raise NodesOutOfOrder(a, theta)
    return f.grid.index(a), f.grid.index(theta)


def _convolve(grid: Grid, step_vals: np.ndarray, i: int, j: int, order: float) -> float:
    if j == i:
        return 0.0
    w = kernel_matrix(grid, np.array([j]), i, j, order)[0]
    return float(w @ step_vals[i:j]) / math.gamma(order)


def frac_integral(f: GridFunction, w: float | FracOrder, a: float, theta: float) -> float:
    """Nabla fractional integral of order ``w`` from ``a`` to ``theta``."""
    w = _order(w)
    i, j = _span(f, a, theta)
    means = step_means(f.values, f.grid.scattered[1:])
    return _convolve(f.grid, means, i, j, w)


def frac_integral_values(f: GridFunction, w: float | FracOrder, a: float) -> GridFunction:
    """Fractional integral based at ``a`` on every node; zero for nodes <= a."""
    w = _order(w)
    g = f.grid
    i = g.index(a)
    out = np.zeros(len(g))
    if i < len(g) - 1:
        means = step_means(f.values, g.scattered[1:])
        idx = np.arange(i + 1, len(g))
        out[i + 1 :] = apply_kernel(g, idx, i, len(g) - 1, w, means[i:]) / math.gamma(w)
    return GridFunction(g, out)


def caputo_nabla(f: GridFunction, w: float | FracOrder, a: float, theta: float) -> float:
    """Caputo nabla derivative: the order ``1 - w`` integral of the nabla
    derivative of ``f``."""
    w = _order(w)
    i, j = _span(f, a, theta)
    if i == j:
        raise NodesOutOfOrder(a, theta)
    return _convolve(f.grid, backward_differences(f), i, j, 1.0 - w)


def caputo_values(f: GridFunction, w: float | FracOrder, a: float) -> GridFunction:
    """Caputo derivative based at ``a`` on every node; zero for nodes <= a."""
    w = _order(w)
    g = f.grid
    i = g.index(a)
    out = np.zeros(len(g))
    if i < len(g) - 1:
        idx = np.arange(i + 1, len(g))
        slopes = backward_differences(f)[i:]
        out[i + 1 :] = apply_kernel(g, idx, i, len(g) - 1, 1.0 - w, slopes) / math.gamma(1.0 - w)
    return GridFunction(g, out)


def rl_nabla(f: GridFunction, w: float | FracOrder, a: float, theta: float) -> float:
    """Riemann-Liouville nabla derivative: nabla derivative of the order
    ``1 - w`` fractional integral."""
    w = _order(w)
    i, j = _span(f, a, theta)
    if i == j:
        raise NoPredecessor(theta)
    g = f.grid
    means = step_means(f.values, g.scattered[1:])
    idx = np.array([j - 1, j])
    mat = kernel_matrix(g, idx, i, j, 1.0 - w)
    prev, cur = mat @ means[i:j] / math.gamma(1.0 - w)
    return float((cur - prev) / (g.nodes[j] - g.nodes[j - 1]))


def rl_values(f: GridFunction, w: float | FracOrder, a: float) -> GridFunction:
    w = _order(w)
    g = f.grid
    i = g.index(a)
    integ = frac_integral_values(f, 1.0 - w, a).values
    out = np.zeros(len(g))
    out[i + 1 :] = np.diff(integ[i:]) / g.steps[i:]
    return GridFunction(g, out)


def caputo_via_rl(f: GridFunction, w: float | FracOrder, rho: float, theta: float) -> float:
    """Caputo derivative computed as the RL derivative of ``f - f(rho)``."""
    if not rho < theta:
        raise NodesOutOfOrder(rho, theta)
    return rl_nabla(f.shift(f.at(rho)), w, rho, theta)
