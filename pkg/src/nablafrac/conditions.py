"""Checks of the existence and uniqueness hypotheses.

The constants bound the data of the problem:

* ``|L(t, x1, y1) - L(t, x2, y2)| <= K |x1 - x2| + G |y1 - y2|``,  0 < G < 1
* ``|L(t, x, y)| <= A + F |x| + E |y|``,  0 < E < 1
* ``|I_k(t, x)| <= M_k`` and ``|I_k(t, x1) - I_k(t, x2)| <= L_k |x1 - x2|``
* ``|phi(x)| <= mu |x|`` and ``|phi(x1) - phi(x2)| <= H |x1 - x2|``

Uniqueness holds when

    U = sum(L_k) + H + K T^w (m+1) / ((1 - G) Gamma(w+1)) < 1

and existence when some ``beta > 0`` satisfies

    mu beta + sum(M_k) + (m+1) T^w (A + F beta) / (Gamma(w+1) (1 - E)) < beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpressionEvalError, NablaFracError
from .fracops import FracOrder

# relative margin for the strict existence inequality
BETA_MARGIN = 1e-6
# smallest random-pair separation, relative to the sampled range
MIN_SEPARATION = 1e-3


@dataclass(frozen=True)
class HypothesisConstants:
    K: float
    G: float
    A: float = 0.0
    F: float = 0.0
    E: float = 0.0
    M: tuple[float, ...] = ()
    L: tuple[float, ...] = ()
    mu: float = 0.0
    H: float = 0.0
    estimated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "M", tuple(float(x) for x in self.M))
        object.__setattr__(self, "L", tuple(float(x) for x in self.L))
        for name in ("K", "G", "A", "F", "E", "mu", "H"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise NablaFracError(f"constant {name} must be finite and >= 0, got {v!r}")
        if any(x < 0 or not math.isfinite(x) for x in self.M + self.L):
            raise NablaFracError("impulse constants must be finite and >= 0")
        if len(self.M) != len(self.L):
            raise NablaFracError("M and L must have one entry per impulse")
        if not self.G < 1:
            raise NablaFracError(f"G must be below 1, got {self.G!r}")
        if not self.E < 1:
            raise NablaFracError(f"E must be below 1, got {self.E!r}")

    @property
    def m(self) -> int:
        return len(self.L)


@dataclass(frozen=True)
class ContractionReport:
    U: float
    impulse_term: float
    phi_term: float
    rhs_term: float
    satisfied: bool
    sigma: float | None


def contraction_constant(
    c: HypothesisConstants, w: float, T: float, m: int | None = None
) -> ContractionReport:
    """Uniqueness constant ``U`` with its three terms.

    ``sigma`` is the radius of the invariant ball used in the uniqueness
    argument, ``b / (1 - a)`` with the coefficients of
    :func:`existence_coefficients`; ``None`` when ``a >= 1``.
    """
    w = FracOrder(w).w
    m = c.m if m is None else m
    impulse = float(sum(c.L))
    rhs = c.K * T**w * (m + 1) / ((1.0 - c.G) * math.gamma(w + 1.0))
    U = impulse + c.H + rhs
    a, b = existence_coefficients(c, w, T, m)
    sigma = b / (1.0 - a) if a < 1 else None
    return ContractionReport(U, impulse, c.H, rhs, U < 1, sigma)


def check_uniqueness(
    c: HypothesisConstants, w: float, T: float, m: int | None = None
) -> ContractionReport:
    return contraction_constant(c, w, T, m)


def existence_coefficients(
    c: HypothesisConstants, w: float, T: float, m: int | None = None
) -> tuple[float, float]:
    """``(a, b)`` such that the existence condition reads ``a*beta + b < beta``."""
    m = c.m if m is None else m
    scale = (m + 1) * T**w / (math.gamma(w + 1.0) * (1.0 - c.E))
    return c.mu + scale * c.F, float(sum(c.M)) + scale * c.A


def existence_lhs(c: HypothesisConstants, w: float, T: float, beta: float, m: int | None = None) -> float:
    m = c.m if m is None else m
    return c.mu * beta + sum(c.M) + (m + 1) * T**w * (c.A + c.F * beta) / (
        math.gamma(w + 1.0) * (1.0 - c.E)
    )


def existence_beta_search(
    c: HypothesisConstants, w: float, T: float, m: int | None = None
) -> float | None:
    """Smallest admissible ``beta`` (up to a relative margin), or ``None``."""
    w = FracOrder(w).w
    a, b = existence_coefficients(c, w, T, m)
    if a >= 1:
        return None
    beta = b / (1.0 - a) * (1.0 + BETA_MARGIN)
    if beta <= 0:
        # b == 0: any positive beta works
        beta = BETA_MARGIN
    return beta


@dataclass(frozen=True)
class SamplingBox:
    theta: tuple[float, float]
    p: tuple[float, float] = (-1.0, 1.0)
    h: tuple[float, float] = (-1.0, 1.0)
    resolution: int = 21
    pairs: int = 2000
    seed: int = 0


@dataclass(frozen=True)
class EstimateReport:
    constants: HypothesisConstants
    box: SamplingBox
    notes: tuple[str, ...] = field(default_factory=tuple)


def _finite(x, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ExpressionEvalError(f"non-finite samples of {what}")
    return arr


def _max_quotient(f, var: str, ranges: dict, rng, box: SamplingBox) -> float:
    """Largest ``|f(x1) - f(x2)| / |x1 - x2|`` in ``var``.

    Pairs are neighbours along ``var`` on a dense tensor lattice over
    ``ranges`` (which includes the box corners), plus random pairs with the
    other variables drawn uniformly and shared by both points of a pair.
    """
    lo, hi = ranges[var]
    if not hi > lo:
        return 0.0
    names = list(ranges)
    axes = [np.linspace(*ranges[k], box.resolution) for k in names]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = _finite(
        np.broadcast_to(f(**dict(zip(names, mesh))), mesh[0].shape), "expression"
    )
    axis = names.index(var)
    step = (hi - lo) / (box.resolution - 1)
    best = float(np.max(np.abs(np.diff(vals, axis=axis)))) / step
    env = {k: rng.uniform(*ranges[k], box.pairs) for k in names if k != var}
    a = rng.uniform(lo, hi, box.pairs)
    b = rng.uniform(lo, hi, box.pairs)
    # close pairs only amplify rounding noise
    keep = np.abs(a - b) >= MIN_SEPARATION * (hi - lo)
    fa = _finite(np.broadcast_to(f(**env, **{var: a}), a.shape), "expression")
    fb = _finite(np.broadcast_to(f(**env, **{var: b}), b.shape), "expression")
    if np.any(keep):
        best = max(best, float(np.max(np.abs(fa - fb)[keep] / np.abs(a - b)[keep])))
    return best


def estimate_constants(problem, box: SamplingBox) -> EstimateReport:
    """Empirical lower bounds for the hypothesis constants.

    Lipschitz constants are the largest difference quotients seen over the
    box; ``A`` is the largest ``|L(theta, 0, 0)|`` and ``F, E`` default to
    ``K, G`` (Lipschitz bounds imply the affine bound).  ``M_k`` is the
    largest ``|I_k|`` over the ``p`` range and ``mu`` the largest
    ``|phi(x)| / |x|`` over the nonzero lattice points of that range.
    These are estimates, not certificates.
    """
    if box.resolution < 2:
        raise NablaFracError("sampling resolution must be at least 2")
    rng = np.random.default_rng(box.seed)
    t_lo, t_hi = box.theta
    p_lo, p_hi = box.p
    ranges = {"theta": box.theta, "p": box.p, "h": box.h}

    rhs = problem.rhs.eval
    K = _max_quotient(rhs, "p", ranges, rng, box)
    G = _max_quotient(rhs, "h", ranges, rng, box)
    thetas = np.linspace(t_lo, t_hi, box.resolution)
    A = float(np.max(np.abs(_finite(rhs(theta=thetas, p=0 * thetas, h=0 * thetas), "rhs"))))

    Ms, Ls = [], []
    lattice = np.linspace(p_lo, p_hi, box.resolution)
    for imp in problem.impulses:
        f = imp.map.eval
        Ls.append(_max_quotient(f, "p", {"theta": (imp.at, imp.at), "p": box.p}, rng, box))
        Ms.append(float(np.max(np.abs(_finite(f(theta=imp.at, p=lattice), "impulse")))))

    phi = problem.phi.eval
    H = _max_quotient(phi, "pa", {"pa": box.p}, rng, box)
    nz = lattice[lattice != 0]
    mu = float(np.max(np.abs(_finite(phi(pa=nz), "phi")) / np.abs(nz))) if len(nz) else 0.0

    notes = []
    if G >= 1:
        notes.append("estimated G >= 1: the rhs is not contractive in h on this box")
    if K == 0:
        notes.append("rhs does not depend on p on this box")
    if p_lo <= 0 <= p_hi and phi(pa=0.0) != 0:
        notes.append("phi(0) != 0: no linear bound |phi(x)| <= mu |x| exists; mu grows with resolution")
    consts = HypothesisConstants(
        K=K, G=min(G, np.nextafter(1.0, 0.0)), A=A, F=K, E=min(G, np.nextafter(1.0, 0.0)),
        M=tuple(Ms), L=tuple(Ls), mu=mu, H=H, estimated=True,
    )
    return EstimateReport(consts, box, tuple(notes))
