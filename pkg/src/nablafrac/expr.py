"""A small arithmetic expression language for problem configs.

Grammar, lowest precedence first::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

so ``-2^2 == -4``, ``2^3^2 == 2^9`` and ``2^-1 == 0.5``.  Names are the
variables allowed for the expression's role, the constants ``e`` and
``pi``, and the functions ``exp abs sqrt sin cos ln gamma``.

Evaluation works on floats and on numpy arrays alike; a non-finite result
is an error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from .errors import (
    ExprSyntaxError,
    NonFiniteResult,
    UnknownIdentifier,
    VariableNotAllowed,
)

RHS_VARS = frozenset({"theta", "p", "h"})
IMPULSE_VARS = frozenset({"theta", "p"})
PHI_VARS = frozenset({"pa"})
ALL_VARS = RHS_VARS | IMPULSE_VARS | PHI_VARS

CONSTANTS = {"e": math.e, "pi": math.pi}

_gamma_vec = np.vectorize(
    lambda x: math.gamma(x) if not (x <= 0 and x == int(x)) else math.nan, otypes=[float]
)


def _gamma(x):
    try:
        return _gamma_vec(x)
    except OverflowError:
        return math.inf


FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "ln": np.log,
    "gamma": _gamma,
}

# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Const, Var, Neg, BinOp, Call]

# -- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(pos + stripped, "a number, name or operator", text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str], role: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed
        self.role = role

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        raise ExprSyntaxError(self.peek()[2], expected, self.text)

    def expect(self, op: str):
        kind, val, _ = self.peek()
        if kind != "op" or val != op:
            self.fail(repr(op))
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("an operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "num":
            if not math.isfinite(float(val)):
                self.fail("a finite number")
            self.take()
            return Num(float(val))
        if kind == "name":
            self.take()
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in CONSTANTS:
                return Const(val)
            if val in ALL_VARS:
                if val not in self.allowed:
                    raise VariableNotAllowed(val, self.role)
                return Var(val)
            raise UnknownIdentifier(val)
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("a number, name or '('")


# -- compilation -----------------------------------------------------------

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _compile(node: Node) -> Callable[[Mapping], object]:
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda env: v
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        inner = _compile(node.operand)
        return lambda env: np.negative(inner(env))
    if isinstance(node, BinOp):
        fn = _BINARY[node.op]
        left, right = _compile(node.left), _compile(node.right)
        if node.op == "^":
            # float base so integer literals never hit integer power rules
            return lambda env: fn(np.asarray(left(env), dtype=float), right(env))
        return lambda env: fn(left(env), right(env))
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        arg = _compile(node.arg)
        return lambda env: fn(arg(env))
    raise TypeError(f"not an expression node: {node!r}")


def _variables(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Neg):
        return _variables(node.operand)
    if isinstance(node, BinOp):
        return _variables(node.left) | _variables(node.right)
    if isinstance(node, Call):
        return _variables(node.arg)
    return frozenset()


class Expr:
    """Parsed, immutable expression.

    Call :meth:`eval` with keyword bindings; arrays broadcast.

    >>> Expr.parse("(1+e^pa)/5", PHI_VARS).eval(pa=0.0)
    0.4
    """

    __slots__ = ("text", "tree", "variables", "_fn")

    def __init__(self, text: str, tree: Node):
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "variables", _variables(tree))
        object.__setattr__(self, "_fn", _compile(tree))

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    @classmethod
    def parse(cls, text: str, allowed_vars=ALL_VARS, role: str = "expression") -> "Expr":
        if not text or not text.strip():
            raise ExprSyntaxError(0, "a non-empty expression", text)
        tree = _Parser(text, frozenset(allowed_vars), role).parse()
        return cls(text, tree)

    def eval(self, **bindings):
        missing = self.variables - bindings.keys()
        if missing:
            raise KeyError(f"unbound variables: {sorted(missing)}")
        with np.errstate(all="ignore"):
            out = self._fn(bindings)
        arr = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteResult(f"{self.text!r} is not finite at {_describe(bindings)}")
        if arr.ndim == 0:
            return float(arr)
        return arr

    __call__ = eval

    def __eq__(self, other) -> bool:
        return isinstance(other, Expr) and self.tree == other.tree

    def __hash__(self) -> int:
        return hash(self.tree)

    def __repr__(self) -> str:
        return f"Expr({to_text(self.tree)!r})"

    def __str__(self) -> str:
        return to_text(self.tree)


def _describe(bindings: Mapping) -> str:
    parts = []
    for k, v in sorted(bindings.items()):
        arr = np.asarray(v)
        parts.append(f"{k}={float(arr)!r}" if arr.ndim == 0 else f"{k}=<array{arr.shape}>")
    return ", ".join(parts) or "no bindings"


def parse(text: str, allowed_vars=ALL_VARS, role: str = "expression") -> Expr:
    return Expr.parse(text, allowed_vars, role)


def evaluate(e: Expr, bindings: Mapping[str, float]):
    return e.eval(**bindings)


def to_text(node: Node) -> str:
    """Canonical, fully parenthesised text; parsing it gives back ``node``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")
