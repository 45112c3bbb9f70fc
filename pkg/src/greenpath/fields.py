"""Scalar fields for problem data, plus a small safe expression language.

Expressions are ordinary arithmetic over ``x1 .. xn`` and ``t`` with the
functions listed in ``FUNCTIONS`` and the constants ``pi`` and ``e``.  They are
parsed with :mod:`ast` and evaluated with numpy, so a field is vectorised
over arrays of points and safe to call from several threads.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError


def bump(r):
    """C-infinity bump ``exp(1 - 1/(1 - r^2))`` on ``|r| < 1``, zero outside (peak value 1)."""
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        val = np.exp(1.0 - 1.0 / (1.0 - r * r))
    return np.where(inside, val, 0.0)


FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "log": np.log,
    "abs": np.abs,
    "erf": special.erf,
    "erfc": special.erfc,
    "bump": bump,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(DomainError):
    """Malformed or disallowed field expression."""


def _validate(node, names: set[str]):
    if isinstance(node, ast.Expression):
        return _validate(node.body, names)
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in names and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, names)
        _validate(node.right, names)
        return
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        _validate(node.operand, names)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {ast.unparse(node)!r}")
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _validate(node.args[0], names)
        return
    raise ExpressionError(f"unsupported syntax: {ast.unparse(node)!r}")


def _evaluate(node, env):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_evaluate(node.operand, env))
    return FUNCTIONS[node.func.id](_evaluate(node.args[0], env))


def compile_expression(text: str, n: int) -> Callable:
    """Compile ``text`` into ``f(P, t) -> array`` for points ``P`` of shape ``(m, n)``."""
    names = {f"x{i + 1}" for i in range(n)} | {"t"}
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _validate(tree, names)

    def fn(P, t=0.0):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        env = {f"x{i + 1}": P[:, i] for i in range(n)}
        env["t"] = np.broadcast_to(np.asarray(t, dtype=float), (P.shape[0],)) if np.ndim(t) else float(t)
        with np.errstate(all="ignore"):
            out = _evaluate(tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (P.shape[0],)).copy()

    return fn


@dataclass(frozen=True)
class ScalarField:
    """A real field on points (optionally time dependent).

    ``func(P, t)`` takes points of shape ``(m, n)`` and returns ``m`` values.
    ``support`` is ``None`` (unbounded) or ``(center, radius)``: the field
    vanishes outside that closed ball.  ``constant`` is set for constant fields
    so that integrators can take exact shortcuts.
    """

    func: Callable
    n: int
    support: tuple | None = None
    constant: float | None = None
    expr: str | None = None
    time_dependent: bool = True

    def __call__(self, P, t=0.0) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[1] != self.n:
            raise DomainError(f"field expects {self.n}-dimensional points, got {P.shape[1]}")
        vals = np.asarray(self.func(P, t), dtype=float)
        return np.broadcast_to(vals, (P.shape[0],)).copy()

    def at(self, p, t=0.0) -> float:
        return float(self(np.asarray(p, dtype=float)[None, :], t)[0])

    @property
    def is_zero(self) -> bool:
        return self.constant == 0.0

    @classmethod
    def const(cls, value: float, n: int) -> "ScalarField":
        value = float(value)
        return cls(lambda P, t=0.0: np.full(np.atleast_2d(P).shape[0], value), n,
                   constant=value, expr=repr(value), time_dependent=False)

    @classmethod
    def zero(cls, n: int) -> "ScalarField":
        return cls.const(0.0, n)

    @classmethod
    def from_expr(cls, text: str, n: int, support=None) -> "ScalarField":
        fn = compile_expression(text, n)
        sup = None
        if support is not None:
            center, radius = support
            sup = (np.asarray(center, dtype=float), float(radius))
        uses_t = any(isinstance(node, ast.Name) and node.id == "t" for node in ast.walk(ast.parse(text, mode="eval")))
        const = None
        try:
            const = float(ast.literal_eval(text.strip()))
        except (ValueError, SyntaxError, TypeError):
            pass
        return cls(fn, n, sup, const, text, uses_t)

    @classmethod
    def from_callable(cls, fn: Callable, n: int, support=None, time_dependent: bool = True) -> "ScalarField":
        sup = None
        if support is not None:
            sup = (np.asarray(support[0], dtype=float), float(support[1]))
        return cls(fn, n, sup, None, None, time_dependent)

    def scaled(self, c: float) -> "ScalarField":
        c = float(c)
        const = None if self.constant is None else c * self.constant
        return ScalarField(lambda P, t=0.0: c * self.func(P, t), self.n, self.support, const, None, self.time_dependent)

    def plus(self, other: "ScalarField") -> "ScalarField":
        if self.support is None or other.support is None:
            sup = None
        else:
            (c1, r1), (c2, r2) = self.support, other.support
            # bounding ball of the two supports
            d = float(np.linalg.norm(c2 - c1))
            if d + r2 <= r1:
                sup = self.support
            elif d + r1 <= r2:
                sup = other.support
            else:
                r = 0.5 * (d + r1 + r2)
                sup = (c1 + (c2 - c1) * ((r - r1) / d), r)
        const = None
        if self.constant is not None and other.constant is not None:
            const = self.constant + other.constant
        return ScalarField(lambda P, t=0.0: self.func(P, t) + other.func(P, t), self.n, sup, const, None,
                           self.time_dependent or other.time_dependent)
