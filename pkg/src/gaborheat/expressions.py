"""Safe arithmetic expressions for CLI-supplied symbols and data.

Expressions are parsed to an AST and validated against a whitelist of
names, functions and operators before compilation, so configuration files
cannot execute arbitrary code.  Symbol expressions see x, xi (and y, eta in
d=2) plus t; data expressions see x (and y).
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np

from .grid import Grid, GridFunction
from .symbols import Symbol

__all__ = ["compile_symbol_expression", "compile_field_expression", "ExpressionError"]


class ExpressionError(ValueError):
    """Rejected or malformed configuration expression."""


_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


def _validate(tree: ast.AST, variables) -> None:
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(f"disallowed syntax: {type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ExpressionError("only whitelisted functions may be called")
            if node.keywords:
                raise ExpressionError("keyword arguments not allowed")
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _FUNCTIONS and node.id not in _CONSTANTS:
                raise ExpressionError(f"unknown name {node.id!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError("only numeric constants allowed")


def _compile(expr: str, variables) -> Callable:
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression: {exc}") from exc
    _validate(tree, variables)
    code = compile(tree, "<config-expression>", "eval")
    namespace = {**_FUNCTIONS, **_CONSTANTS, "__builtins__": {}}

    def fn(**bindings):
        return eval(code, namespace, bindings)

    return fn


def compile_symbol_expression(expr: str, d: int = 1, time_dependent: bool = None) -> Symbol:
    """Build a Symbol from an expression in x, xi (y, eta for d=2) and t."""
    variables = {"x", "xi", "t"} if d == 1 else {"x", "y", "xi", "eta", "t"}
    fn = _compile(expr, variables)
    if time_dependent is None:
        time_dependent = any(
            isinstance(n, ast.Name) and n.id == "t"
            for n in ast.walk(ast.parse(expr, mode="eval"))
        )

    if d == 1:
        def evaluate(t, x, xi):
            shape = np.broadcast_shapes(x.shape, xi.shape)[:-1]
            out = fn(t=t, x=x[..., 0], xi=xi[..., 0])
            return np.broadcast_to(np.asarray(out), shape)
    else:
        def evaluate(t, x, xi):
            shape = np.broadcast_shapes(x.shape, xi.shape)[:-1]
            out = fn(t=t, x=x[..., 0], y=x[..., 1], xi=xi[..., 0], eta=xi[..., 1])
            return np.broadcast_to(np.asarray(out), shape)

    return Symbol(evaluate, name=expr, time_dependent=time_dependent)


def compile_field_expression(expr: str, grid: Grid, t: float = 0.0) -> GridFunction:
    """Evaluate an expression in x (and y, t) on the grid."""
    variables = {"x", "t"} if grid.d == 1 else {"x", "y", "t"}
    fn = _compile(expr, variables)
    mesh = grid.x_mesh()
    if grid.d == 1:
        vals = fn(t=t, x=mesh[..., 0])
    else:
        vals = fn(t=t, x=mesh[..., 0], y=mesh[..., 1])
    return GridFunction(grid, np.broadcast_to(np.asarray(vals), grid.shape).astype(complex))
