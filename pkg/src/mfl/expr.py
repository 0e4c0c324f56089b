"""A tiny one-variable arithmetic language for maps given in config files.

Grammar: numbers, the variable, ``pi`` and ``e``, the operators ``+ - * /``
(unary minus included) and the functions ``sqrt sin abs min max``.
Expressions are parsed with :mod:`ast` and evaluated by walking the tree, so
nothing outside that grammar can run.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

from .errors import ConfigInvalid

_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "abs": abs, "min": min, "max": max}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


def _compile(node: ast.AST, var: str, src: str) -> Callable[[float], float]:
    where = f"column {getattr(node, 'col_offset', 0) + 1} of {src!r}"
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda x: value
    if isinstance(node, ast.Name):
        if node.id == var:
            return lambda x: x
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda x: value
        raise ConfigInvalid(f"unknown name {node.id!r} at {where}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, var, src), _compile(node.right, var, src)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, var, src)
        if isinstance(node.op, ast.USub):
            return lambda x: -inner(x)
        return inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _FUNCS:
            raise ConfigInvalid(f"unknown function {name!r} at {where}")
        nargs = len(node.args)
        if (name in ("min", "max") and nargs < 2) or (name not in ("min", "max") and nargs != 1):
            raise ConfigInvalid(f"wrong number of arguments to {name} at {where}")
        fn = _FUNCS[name]
        args = [_compile(a, var, src) for a in node.args]
        return lambda x: fn(*(a(x) for a in args))
    raise ConfigInvalid(f"unsupported syntax at {where}")


def compile_expr(text: str, var: str = "x") -> Callable[[float], float]:
    """Turn ``text`` into a function of the single variable ``var``.

    >>> compile_expr("sqrt(3 + 2*m)", var="m")(3.0)
    3.0
    """
    if not isinstance(text, str) or not text.strip():
        raise ConfigInvalid("expression must be a nonempty string")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigInvalid(f"cannot parse {text!r}: {exc.msg} at column {exc.offset}") from None
    body = _compile(tree.body, var, text)

    def evaluate(x: float) -> float:
        return float(body(float(x)))

    return evaluate
