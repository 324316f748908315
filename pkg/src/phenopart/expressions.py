"""Safe arithmetic expression compiler for config-supplied coefficient laws.

Supports numeric literals, the declared variable names, +, -, *, /, **,
unary minus, and a small set of elementwise functions.  Anything else in the
source raises ValueError at compile time; nothing is ever passed to eval().
"""

from __future__ import annotations

import ast
import operator
from typing import Callable, Sequence

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}

_UNARYOPS = {
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
}

_CONSTANTS = {
    "pi": np.pi,
    "e": np.e,
}


def compile_expression(source: str, variables: Sequence[str]) -> Callable:
    """Compile `source` into f(*values) where values follow `variables` order."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {source!r}: {exc}") from exc

    names = tuple(variables)
    index = {name: i for i, name in enumerate(names)}

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                value = float(node.value)
                return lambda args: value
            raise ValueError(f"non-numeric constant {node.value!r}")
        if isinstance(node, ast.Name):
            if node.id in index:
                i = index[node.id]
                return lambda args: args[i]
            if node.id in _CONSTANTS:
                value = _CONSTANTS[node.id]
                return lambda args: value
            raise ValueError(f"unknown name {node.id!r}; variables: {names}")
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValueError(f"operator {type(node.op).__name__} not allowed")
            op = _BINOPS[type(node.op)]
            left = build(node.left)
            right = build(node.right)
            return lambda args: op(left(args), right(args))
        if isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARYOPS:
                raise ValueError(f"operator {type(node.op).__name__} not allowed")
            op = _UNARYOPS[type(node.op)]
            operand = build(node.operand)
            return lambda args: op(operand(args))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ValueError("only the documented elementwise functions are allowed")
            if node.keywords:
                raise ValueError("keyword arguments not allowed in expressions")
            fn = _FUNCTIONS[node.func.id]
            argfns = [build(a) for a in node.args]
            return lambda args: fn(*(f(args) for f in argfns))
        raise ValueError(f"syntax node {type(node).__name__} not allowed")

    body = build(tree)

    def evaluate(*values):
        if len(values) != len(names):
            raise TypeError(f"expression expects {len(names)} values {names}")
        return body(values)

    evaluate.source = source
    evaluate.variables = names
    return evaluate
