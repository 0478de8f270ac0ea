"""Nabla fractional calculus on time scales and a solver for impulsive
fractional dynamic equations with non-local initial values."""

from .conditions import (
    ContractionReport,
    HypothesisConstants,
    SamplingBox,
    check_uniqueness,
    contraction_constant,
    estimate_constants,
    existence_beta_search,
)
from .errors import (
    ConfigError,
    ExprError,
    ExpressionEvalError,
    InnerDiverged,
    NablaFracError,
    NonFiniteResult,
    OuterDiverged,
    PicardDiverged,
    SolverError,
    TimeScaleError,
)
from .expr import Expr, parse
from .fracops import FracOrder, caputo_nabla, caputo_via_rl, frac_integral, rl_nabla
from .nabla import GridFunction, nabla_derivative, nabla_integral
from .solver import (
    Impulse,
    ImpulsiveProblem,
    Solution,
    SolverConfig,
    apply_impulse,
    residual,
    solve,
    solve_inner_h,
)
from .timescale import Grid, Interval, Point, PointKind, TimeScale, build_grid

__version__ = "0.1.0"
