"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NablaFracError(Exception):
    """Base class for every error raised by this package."""


# -- time scales -----------------------------------------------------------


class TimeScaleError(NablaFracError):
    pass


class PointNotInTimeScale(TimeScaleError):
    def __init__(self, theta: float):
        super().__init__(f"{theta!r} is not a point of the time scale")
        self.theta = theta


class JumpUndefinedAtMinimum(TimeScaleError):
    def __init__(self, theta: float):
        super().__init__(f"backward jump is undefined at the minimum {theta!r}")
        self.theta = theta


class ExtraNodeOutsideTimeScale(TimeScaleError):
    def __init__(self, theta: float):
        super().__init__(f"forced grid node {theta!r} lies outside the time scale")
        self.theta = theta


class DegenerateTimeScale(TimeScaleError):
    """A single-point time scale has no interval of integration."""


# -- grid calculus ---------------------------------------------------------


class NoPredecessor(NablaFracError):
    def __init__(self, theta: float):
        super().__init__(f"node {theta!r} has no predecessor on the grid")
        self.theta = theta


class NodesOutOfOrder(NablaFracError):
    def __init__(self, a: float, b: float):
        super().__init__(f"expected a <= b, got a={a!r}, b={b!r}")
        self.a, self.b = a, b


class NotANode(NablaFracError):
    def __init__(self, theta: float):
        super().__init__(f"{theta!r} is not a grid node")
        self.theta = theta


class NotIncreasing(NablaFracError):
    pass


# -- expressions -----------------------------------------------------------


class ExprError(NablaFracError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, position: int, expected: str, text: str = ""):
        msg = f"syntax error at position {position}: expected {expected}"
        if text:
            msg += f"\n  {text}\n  {' ' * position}^"
        super().__init__(msg)
        self.position = position
        self.expected = expected


class UnknownIdentifier(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name


class VariableNotAllowed(ExprError):
    def __init__(self, name: str, role: str):
        super().__init__(f"variable {name!r} is not allowed in a {role} expression")
        self.name = name
        self.role = role


class ExpressionEvalError(ExprError):
    pass


class NonFiniteResult(ExpressionEvalError):
    pass


# -- solver ----------------------------------------------------------------


class SolverError(NablaFracError):
    """Base for divergence of one of the solver's loops.

    ``loop`` names the failing loop and ``last`` carries the last iterate.
    """

    loop = "solver"

    def __init__(self, message: str, last=None, ratio: float | None = None):
        super().__init__(f"{self.loop} loop: {message}")
        self.last = last
        self.ratio = ratio


class InnerDiverged(SolverError):
    loop = "inner"


class PicardDiverged(SolverError):
    loop = "picard"


class OuterDiverged(SolverError):
    loop = "outer"


class ConfigError(NablaFracError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
