"""Impulsive fractional dynamic equations with a non-local initial value.

The problem is

    C_D^w p(theta) = L(theta, p(theta), C_D^w p(theta)),   theta != theta_k
    p(theta_k+) - p(theta_k-) = I_k(theta_k, p(theta_k-))
    p(0) = phi(p)

and it is solved through its piecewise integral representation.  Writing
``h = C_D^w p`` and ``J_a^w`` for the fractional integral based at ``a``,
the default ("frozen") representation on the k-th segment
``[theta_k, theta_{k+1}]`` is

    p(theta) = phi + sum_{i<=k} J_{theta_{i-1}}^w h (theta_i)
                   + J_{theta_k}^w h (theta) + sum_{i<=k} I_i,

i.e. the kernel restarts at every impulse time and the history of earlier
segments enters only through their end values.  The "memory" variant keeps
the full kernel ``(theta - alpha(s))**(w-1)`` over ``[0, theta]`` instead.

Three nested fixed-point loops are used:

* inner: ``h = L(theta, p, h)`` at every node;
* Picard: ``p <- offset + J^w h(p)`` on one segment;
* outer: ``c <- phi(p_c(anchor))`` for the initial value ``c = p(0)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InnerDiverged,
    NablaFracError,
    OuterDiverged,
    PicardDiverged,
)
from .expr import IMPULSE_VARS, PHI_VARS, RHS_VARS, Expr
from .fracops import FracOrder, kernel_matrix
from .timescale import EPS, Grid, TimeScale, build_grid

log = logging.getLogger(__name__)

# iterates beyond this magnitude count as divergence
BLOWUP = 1e12

VARIANTS = ("frozen", "memory")


@dataclass(frozen=True)
class Impulse:
    at: float
    map: Expr


@dataclass(frozen=True)
class ImpulsiveProblem:
    ts: TimeScale
    w: float
    rhs: Expr
    phi: Expr
    impulses: tuple[Impulse, ...] = ()
    anchor: float | None = None

    def __post_init__(self):
        FracOrder(self.w)
        object.__setattr__(self, "impulses", tuple(self.impulses))
        if self.ts.is_degenerate:
            raise NablaFracError("the time scale must contain more than one point")
        if not self.rhs.variables <= RHS_VARS:
            raise NablaFracError(f"rhs may only use {sorted(RHS_VARS)}")
        if not self.phi.variables <= PHI_VARS:
            raise NablaFracError(f"phi may only use {sorted(PHI_VARS)}")
        prev = self.ts.min
        for imp in self.impulses:
            if not imp.map.variables <= IMPULSE_VARS:
                raise NablaFracError(f"impulse maps may only use {sorted(IMPULSE_VARS)}")
            if imp.at not in self.ts:
                raise NablaFracError(f"impulse time {imp.at!r} is not in the time scale")
            if not prev + EPS < imp.at < self.ts.max - EPS:
                raise NablaFracError(
                    "impulse times must increase strictly inside (min, T); "
                    f"got {imp.at!r} after {prev!r}"
                )
            prev = imp.at
        if self.anchor is not None and self.anchor not in self.ts:
            raise NablaFracError(f"anchor point {self.anchor!r} is not in the time scale")

    @property
    def T(self) -> float:
        return self.ts.max

    @property
    def m(self) -> int:
        return len(self.impulses)

    @property
    def anchor_point(self) -> float:
        return self.ts.max if self.anchor is None else self.anchor

    def grid(self, mesh: float) -> Grid:
        forced = [imp.at for imp in self.impulses] + [self.anchor_point]
        return build_grid(self.ts, mesh, forced)


@dataclass(frozen=True)
class SolverConfig:
    mesh: float = 1e-3
    tol_h: float = 1e-12
    tol_picard: float = 1e-10
    tol_outer: float = 1e-10
    max_inner: int = 100
    max_picard: int = 200
    max_outer: int = 100
    history_variant: str = "frozen"
    outer_seed: float | None = None

    def __post_init__(self):
        for name in ("mesh", "tol_h", "tol_picard", "tol_outer"):
            if not getattr(self, name) > 0:
                raise NablaFracError(f"{name} must be positive")
        for name in ("max_inner", "max_picard", "max_outer"):
            if getattr(self, name) < 1:
                raise NablaFracError(f"{name} must be at least 1")
        if self.history_variant not in VARIANTS:
            raise NablaFracError(f"history_variant must be one of {VARIANTS}")


@dataclass
class Segment:
    index: int
    lo: int
    hi: int
    p: np.ndarray
    h: np.ndarray
    picard_iterations: int = 0


@dataclass(frozen=True)
class Jump:
    theta: float
    p_minus: float
    p_plus: float
    amount: float


@dataclass
class Solution:
    grid: Grid
    segments: list[Segment]
    jumps: list[Jump]
    variant: str = "frozen"
    outer_iterates: list[float] = field(default_factory=list)
    picard_iterations: int = 0
    inner_iterations: int = 0
    residual: float = math.nan

    @property
    def outer_iterations(self) -> int:
        return max(len(self.outer_iterates) - 1, 0)

    def _nodal(self, attr: str) -> np.ndarray:
        out = np.empty(len(self.grid))
        # later segments first so that impulse nodes keep the left limit
        for seg in reversed(self.segments):
            out[seg.lo : seg.hi + 1] = getattr(seg, attr)
        return out

    @property
    def p(self) -> np.ndarray:
        """p at every node; impulse nodes carry the left limit."""
        return self._nodal("p")

    @property
    def h(self) -> np.ndarray:
        return self._nodal("h")

    def value_at(self, theta: float) -> float:
        return float(self.p[self.grid.index(theta)])

    def outer_ratios(self) -> list[float]:
        """``|c_{j+1} - c_j| / |c_j - c_{j-1}|`` for the outer iterates."""
        d = np.abs(np.diff(self.outer_iterates))
        return [float(d[j] / d[j - 1]) for j in range(1, len(d)) if d[j - 1] > 0]

    def rows(self):
        """(theta, segment, p, h, is_impulse_left, is_impulse_right) per row.

        Each impulse time yields two rows: the left limit closing one segment
        and the right limit opening the next.
        """
        last = len(self.segments) - 1
        for seg in self.segments:
            for r, i in enumerate(range(seg.lo, seg.hi + 1)):
                left = int(i == seg.hi and seg.index < last)
                right = int(i == seg.lo and seg.index > 0)
                yield (float(self.grid.nodes[i]), seg.index, float(seg.p[r]), float(seg.h[r]), left, right)


# -- building blocks -------------------------------------------------------


def _rhs(rhs: Expr, theta: np.ndarray, p: np.ndarray, h: np.ndarray) -> np.ndarray:
    out = rhs.eval(theta=theta, p=p, h=h)
    return np.array(np.broadcast_to(out, theta.shape), dtype=float)


def _inner(theta, p, rhs: Expr, cfg: SolverConfig) -> tuple[np.ndarray, int]:
    theta, p = np.broadcast_arrays(np.asarray(theta, float), np.asarray(p, float))
    h = np.zeros(theta.shape)
    g = _rhs(rhs, theta, p, h)
    for sweep in range(cfg.max_inner):
        if np.all(np.abs(g - h) <= cfg.tol_h):
            return h, sweep
        if not np.all(np.abs(h) < BLOWUP):
            raise InnerDiverged(f"iterate exceeded {BLOWUP:g} after {sweep} sweeps", last=h)
        h1 = g
        g1 = _rhs(rhs, theta, p, h1)
        with np.errstate(all="ignore"):
            denom = g1 - 2.0 * h1 + h
            cand = h - (h1 - h) ** 2 / denom
        ok = np.isfinite(cand) & (denom != 0)
        cand = np.where(ok, cand, h1)
        try:
            gc = _rhs(rhs, theta, p, cand)
        except NablaFracError:
            gc, ok = g1, np.zeros_like(ok)
        use = ok & (np.abs(gc - cand) < np.abs(g1 - h1))
        h = np.where(use, cand, h1)
        g = np.where(use, gc, g1)
    defect = np.abs(g - h)
    if np.all(defect <= cfg.tol_h):
        return h, cfg.max_inner
    worst = int(np.argmax(defect))
    raise InnerDiverged(
        f"no convergence within {cfg.max_inner} sweeps (max defect {defect.max():.3g} "
        f"at theta={float(theta.flat[worst])!r}); the right-hand side may not be "
        "contractive in h",
        last=float(h.flat[worst]),
    )


def solve_inner_h(theta, p, rhs: Expr, cfg: SolverConfig = SolverConfig()):
    """Solve ``h = rhs(theta, p, h)`` by fixed-point iteration from ``h = 0``.

    Works elementwise on arrays.  Every sweep takes the plain step
    ``h <- rhs(h)`` and, where it lowers the defect, the Aitken
    extrapolation of the last three iterates; for an affine map this lands on
    the fixed point in one sweep.  Returns ``h`` with
    ``|h - rhs(theta, p, h)| <= tol_h``.
    """
    h, _ = _inner(theta, p, rhs, cfg)
    if np.ndim(theta) == 0 and np.ndim(p) == 0:
        return float(h)
    return h


def apply_impulse(k: int, p_minus: float, problem: ImpulsiveProblem) -> float:
    """Right limit after the ``k``-th impulse (0-based)."""
    imp = problem.impulses[k]
    return p_minus + imp.map.eval(theta=imp.at, p=p_minus)


def segment_bounds(problem: ImpulsiveProblem, grid: Grid) -> list[tuple[int, int]]:
    cuts = [0] + [grid.index(imp.at) for imp in problem.impulses] + [len(grid) - 1]
    return list(zip(cuts[:-1], cuts[1:]))


def node_weight_matrix(grid: Grid, lo: int, hi: int, w: float) -> np.ndarray:
    """Matrix ``M`` with ``(M @ h)[r] = J_{t_lo}^w h (t_{lo+r})`` for the
    product-integration rule of :mod:`nablafrac.fracops`."""
    idx = np.arange(lo, hi + 1)
    steps = kernel_matrix(grid, idx, lo, hi, w) / math.gamma(w)
    gap = grid.scattered[lo + 1 : hi + 1]
    right = np.where(gap, 1.0, 0.5)
    m = np.zeros((len(idx), len(idx)))
    m[:, 1:] += steps * right
    m[:, :-1] += steps * (1.0 - right)
    return m


def step_means_of(h: np.ndarray, gap: np.ndarray) -> np.ndarray:
    return np.where(gap, h[1:], 0.5 * (h[:-1] + h[1:]))


def picard_segment(
    grid: Grid,
    lo: int,
    hi: int,
    offset,
    problem: ImpulsiveProblem,
    cfg: SolverConfig,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Picard iteration ``p <- offset + J_{t_lo}^w h(p)`` on nodes ``lo..hi``.

    ``offset`` holds everything that does not depend on the current segment:
    the start value and, for the memory variant, the history integrals.  The
    first iterate is the constant start value.  Returns ``(p, h, sweeps)``.
    """
    p, h, sweeps, _ = _picard(grid, lo, hi, offset, problem, cfg, weights)
    return p, h, sweeps


def _picard(grid, lo, hi, offset, problem, cfg, weights=None):
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (hi - lo + 1,))
    theta = grid.nodes[lo : hi + 1]
    m = node_weight_matrix(grid, lo, hi, problem.w) if weights is None else weights
    p = np.full(hi - lo + 1, offset[0])
    prev_change = ratio = change = math.nan
    inner_max = 0
    for sweep in range(1, cfg.max_picard + 1):
        h, n_inner = _inner(theta, p, problem.rhs, cfg)
        inner_max = max(inner_max, n_inner)
        new = offset + m @ h
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > BLOWUP:
            raise PicardDiverged(
                f"segment [{grid.nodes[lo]!r}, {grid.nodes[hi]!r}] blew up at sweep {sweep}",
                last=new,
                ratio=prev_change,
            )
        change = float(np.max(np.abs(new - p)))
        p = new
        if change <= cfg.tol_picard:
            h, _ = _inner(theta, p, problem.rhs, cfg)
            return p, h, sweep, inner_max
        ratio = change / prev_change if prev_change > 0 else math.nan
        prev_change = change
    raise PicardDiverged(
        f"segment [{grid.nodes[lo]!r}, {grid.nodes[hi]!r}] did not converge in "
        f"{cfg.max_picard} sweeps (last change {change:.3g}, empirical ratio {ratio:.3g}); "
        "the contraction condition is likely violated",
        last=p,
        ratio=ratio,
    )



class _Sweeper:
    """Solves all segments for a given initial value; caches weight matrices
    across outer iterations."""

    def __init__(self, problem: ImpulsiveProblem, cfg: SolverConfig, grid: Grid):
        self.problem = problem
        self.cfg = cfg
        self.grid = grid
        self.bounds = segment_bounds(problem, grid)
        self.local = [node_weight_matrix(grid, lo, hi, problem.w) for lo, hi in self.bounds]
        self.history: list[np.ndarray] = []
        if cfg.history_variant == "memory":
            gamma = math.gamma(problem.w)
            for lo, hi in self.bounds:
                idx = np.arange(lo, hi + 1)
                self.history.append(kernel_matrix(grid, idx, 0, lo, problem.w) / gamma)

    def run(self, c: float) -> Solution:
        problem, cfg, grid = self.problem, self.cfg, self.grid
        memory = cfg.history_variant == "memory"
        segments: list[Segment] = []
        jumps: list[Jump] = []
        past_means: list[np.ndarray] = []
        base = c
        p_start = c
        picard = inner = 0
        for k, (lo, hi) in enumerate(self.bounds):
            if memory:
                hist_means = np.concatenate(past_means) if past_means else np.zeros(0)
                offset = base + self.history[k] @ hist_means
            else:
                offset = np.full(hi - lo + 1, p_start)
            p, h, sweeps, n_inner = _picard(grid, lo, hi, offset, problem, cfg, self.local[k])
            picard += sweeps
            inner = max(inner, n_inner)
            segments.append(Segment(k, lo, hi, p, h, sweeps))
            past_means.append(step_means_of(h, grid.scattered[lo + 1 : hi + 1]))
            if k < problem.m:
                p_minus = float(p[-1])
                imp = problem.impulses[k]
                amount = imp.map.eval(theta=imp.at, p=p_minus)
                p_start = p_minus + amount
                base += amount
                jumps.append(Jump(imp.at, p_minus, p_start, amount))
        return Solution(
            grid=grid,
            segments=segments,
            jumps=jumps,
            variant=cfg.history_variant,
            picard_iterations=picard,
            inner_iterations=inner,
        )


def solve(problem: ImpulsiveProblem, cfg: SolverConfig = SolverConfig()) -> Solution:
    """Solve the impulsive problem with its non-local initial condition.

    The initial value is found by the outer iteration
    ``c_{j+1} = phi(p_{c_j}(anchor))`` started from ``phi(0)`` (or
    ``cfg.outer_seed``), stopping once ``|c_{j+1} - c_j| <= tol_outer``.
    """
    grid = problem.grid(cfg.mesh)
    sweeper = _Sweeper(problem, cfg, grid)
    anchor = grid.index(problem.anchor_point)
    c = float(problem.phi.eval(pa=0.0)) if cfg.outer_seed is None else float(cfg.outer_seed)
    iterates = [c]
    picard = 0
    inner = 0
    for j in range(cfg.max_outer):
        sol = sweeper.run(c)
        picard += sol.picard_iterations
        inner = max(inner, sol.inner_iterations)
        c_next = float(problem.phi.eval(pa=float(sol.p[anchor])))
        iterates.append(c_next)
        log.debug("outer %d: c=%r -> %r", j, c, c_next)
        if abs(c_next - c) <= cfg.tol_outer:
            sol.outer_iterates = iterates
            sol.picard_iterations = picard
            sol.inner_iterations = inner
            sol.residual = residual(sol, problem)
            return sol
        if not math.isfinite(c_next) or abs(c_next) > BLOWUP:
            raise OuterDiverged(f"initial value blew up at iteration {j + 1}", last=c_next)
        c = c_next
    d = np.abs(np.diff(iterates))
    ratio = float(d[-1] / d[-2]) if len(d) > 1 and d[-2] > 0 else math.nan
    raise OuterDiverged(
        f"no convergence within {cfg.max_outer} iterations "
        f"(last change {d[-1]:.3g}, empirical ratio {ratio:.3g})",
        last=c,
        ratio=ratio,
    )


def residual(sol: Solution, problem: ImpulsiveProblem) -> float:
    """Largest defect of the integral representation over all rows.

    The right-hand side is rebuilt from the stored ``h`` channel, the stored
    left limits at impulse times and ``phi`` at the stored anchor value.
    """
    grid = sol.grid
    w = problem.w
    gamma = math.gamma(w)
    anchor = grid.index(problem.anchor_point)
    start = problem.phi.eval(pa=float(sol.p[anchor]))
    means = [step_means_of(s.h, grid.scattered[s.lo + 1 : s.hi + 1]) for s in sol.segments]
    worst = 0.0
    jump_sum = 0.0
    frozen_hist = 0.0
    for k, seg in enumerate(sol.segments):
        idx = np.arange(seg.lo, seg.hi + 1)
        current = kernel_matrix(grid, idx, seg.lo, seg.hi, w) @ means[k] / gamma
        if sol.variant == "memory":
            hist = np.zeros(len(idx))
            for i in range(k):
                s = sol.segments[i]
                hist += kernel_matrix(grid, idx, s.lo, s.hi, w) @ means[i] / gamma
        else:
            hist = frozen_hist
        expected = start + hist + current + jump_sum
        worst = max(worst, float(np.max(np.abs(seg.p - expected))))
        if k < problem.m:
            imp = problem.impulses[k]
            jump_sum += imp.map.eval(theta=imp.at, p=float(seg.p[-1]))
            end = kernel_matrix(grid, np.array([seg.hi]), seg.lo, seg.hi, w) @ means[k] / gamma
            frozen_hist = frozen_hist + float(end[0])
    return worst
