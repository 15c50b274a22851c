"""Evaluation of expression trees.

Trees are compiled once into nested closures (``compile_expr``) so that the
integrators can call them thousands of times without visitor dispatch.
Evaluation follows IEEE-754 double semantics except that domain violations
raise ``EvalError`` instead of returning ±inf or NaN.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from ..exceptions import DimensionError, EvalError
from .nodes import Binary, Expr, Num, State, Time, Unary
from .visitor import NodeVisitor

CompiledExpr = Callable[[float, Sequence[float]], float]


@dataclass(frozen=True)
class Env:
    """Evaluation environment.

    Attributes:
        t: Time value
        x: State vector (x1 is ``x[0]``)
    """

    t: float
    x: Sequence[float] = ()


def _describe(node: Expr) -> str:
    from ..renderers.expression import render_expr

    return render_expr(node)


def _fail(message: str, node: Expr, **context: object) -> EvalError:
    return EvalError(message, context={"subexpression": _describe(node), **context})


class Compiler(NodeVisitor[CompiledExpr]):
    """Visitor that turns an expression tree into a Python closure."""

    def visit_num(self, node: Num) -> CompiledExpr:
        """Compile a literal."""
        value = float(node.value)
        return lambda t, x: value

    def visit_time(self, node: Time) -> CompiledExpr:
        """Compile the time variable."""
        return lambda t, x: t

    def visit_state(self, node: State) -> CompiledExpr:
        """Compile a state variable lookup."""
        i = node.index - 1

        def state(t: float, x: Sequence[float]) -> float:
            if i >= len(x):
                raise DimensionError(
                    f"State variable x{node.index} is outside the environment dimension",
                    context={"position": -1, "expected": [], "dimension": len(x)},
                )
            return float(x[i])

        return state

    def visit_unary(self, node: Unary) -> CompiledExpr:
        """Compile negation or an elementary function with its domain checks."""
        arg = self.visit(node.operand)
        op = node.op
        if op == "neg":
            return lambda t, x: -arg(t, x)
        if op == "sin":
            return lambda t, x: math.sin(arg(t, x))
        if op == "cos":
            return lambda t, x: math.cos(arg(t, x))
        if op == "atan":
            return lambda t, x: math.atan(arg(t, x))
        if op == "abs":
            return lambda t, x: abs(arg(t, x))
        if op == "exp":

            def exp(t: float, x: Sequence[float]) -> float:
                u = arg(t, x)
                try:
                    return math.exp(u)
                except OverflowError:
                    raise _fail("exp overflow", node, argument=u) from None

            return exp
        if op == "ln":

            def ln(t: float, x: Sequence[float]) -> float:
                u = arg(t, x)
                if u <= 0.0:
                    raise _fail("ln of a non-positive number", node, argument=u)
                return math.log(u)

            return ln
        if op == "sqrt":

            def sqrt(t: float, x: Sequence[float]) -> float:
                u = arg(t, x)
                if u < 0.0:
                    raise _fail("sqrt of a negative number", node, argument=u)
                return math.sqrt(u)

            return sqrt
        raise _fail(f"Unknown unary operator {op!r}", node)

    def visit_binary(self, node: Binary) -> CompiledExpr:
        """Compile an arithmetic operator with its domain checks."""
        left = self.visit(node.left)
        right = self.visit(node.right)
        op = node.op
        if op == "+":
            return lambda t, x: left(t, x) + right(t, x)
        if op == "-":
            return lambda t, x: left(t, x) - right(t, x)
        if op == "*":
            return lambda t, x: left(t, x) * right(t, x)
        if op == "/":

            def div(t: float, x: Sequence[float]) -> float:
                a, b = left(t, x), right(t, x)
                if b == 0.0:
                    raise _fail("division by zero", node, numerator=a)
                return a / b

            return div
        if op == "^":

            def power(t: float, x: Sequence[float]) -> float:
                a, b = left(t, x), right(t, x)
                if a == 0.0 and b < 0.0:
                    raise _fail("zero raised to a negative power", node, exponent=b)
                if a < 0.0 and not float(b).is_integer():
                    raise _fail("negative base with non-integer exponent", node, base=a)
                try:
                    value = math.pow(a, b)
                except OverflowError:
                    raise _fail("power overflow", node, base=a, exponent=b) from None
                return value

            return power
        raise _fail(f"Unknown binary operator {op!r}", node)


def compile_expr(expr: Expr) -> CompiledExpr:
    """Compile ``expr`` into a callable ``f(t, x) -> float``.

    Example:
        >>> from nonauto_equiv.parsers import parse_expr
        >>> f = compile_expr(parse_expr("sqrt(1+x1^2)", 1))
        >>> round(f(0.0, [3.0]), 7)
        3.1622777
    """
    return Compiler().visit(expr)


def eval_expr(expr: Expr, env: Env) -> float:
    """Evaluate ``expr`` in ``env``.

    Raises:
        EvalError: On a domain violation, naming the offending subexpression
        DimensionError: If the expression references a state beyond ``len(env.x)``
    """
    return compile_expr(expr)(env.t, env.x)
