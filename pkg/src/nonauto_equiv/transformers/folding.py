"""Constant folding for expression trees.

The smart constructors below build operation nodes while folding literal
operands and the neutral/absorbing elements 0 and 1. There is no algebraic
simplification beyond that; derivative trees may be large.
"""

import math

from ..dsl import Binary, Expr, Num, Unary
from ..dsl.visitor import NodeTransformer

_FOLDABLE = {
    "sin": math.sin,
    "cos": math.cos,
    "atan": math.atan,
    "abs": abs,
}

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(node: Expr, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def neg(a: Expr) -> Expr:
    """Build ``-a``."""
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.operand
    return Unary("neg", a)


def add(a: Expr, b: Expr) -> Expr:
    """Build ``a + b``."""
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    """Build ``a - b``."""
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    """Build ``a * b``."""
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    """Build ``a / b`` (division by a literal zero is left for the evaluator to report)."""
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return Binary("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    """Build ``a ^ b``."""
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        try:
            value = math.pow(a.value, b.value)
        except (OverflowError, ValueError):
            return Binary("^", a, b)
        return Num(value)
    return Binary("^", a, b)


def call(fn: str, a: Expr) -> Expr:
    """Build ``fn(a)``, folding literal arguments where the result is defined."""
    if isinstance(a, Num):
        if fn in _FOLDABLE:
            return Num(float(_FOLDABLE[fn](a.value)))
        if fn == "exp" and a.value < 700.0:
            return Num(math.exp(a.value))
        if fn == "ln" and a.value > 0.0:
            return Num(math.log(a.value))
        if fn == "sqrt" and a.value >= 0.0:
            return Num(math.sqrt(a.value))
    return Unary(fn, a)


class ConstantFolder(NodeTransformer):
    """Transformer that rebuilds a tree bottom-up through the smart constructors."""

    def visit_unary(self, node: Unary) -> Expr:
        """Fold a unary node."""
        operand = self.visit(node.operand)
        if node.op == "neg":
            return neg(operand)
        return call(node.op, operand)

    def visit_binary(self, node: Binary) -> Expr:
        """Fold a binary node."""
        left = self.visit(node.left)
        right = self.visit(node.right)
        builder = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[node.op]
        return builder(left, right)


def fold_constants(expr: Expr) -> Expr:
    """Fold literal subexpressions of ``expr``.

    Example:
        >>> from nonauto_equiv.parsers import parse_expr
        >>> fold_constants(parse_expr("2*3 + 0*x1", 1))
        Num(value=6.0)
    """
    return ConstantFolder().visit(expr)
