"""Symbolic differentiation of expression trees.

Derivatives are exact: each rule of calculus maps a node to a new tree, built
through the folding constructors so that derivatives of literals vanish
instead of accumulating ``0 * ...`` chains. Repeated application yields
higher orders. ``abs`` parses and evaluates but is rejected here whenever it
depends on the differentiation variable, since the nonlinearities must be C^r.
"""

from ..dsl import Binary, Expr, Num, State, Time, Unary, depends_on
from ..dsl.visitor import NodeVisitor
from ..exceptions import NonDifferentiable, ValidationError
from .folding import ONE, ZERO, add, call, div, mul, neg, power, sub

Variable = Time | State


def parse_variable(name: str) -> Variable:
    """Turn ``"t"`` or ``"xk"`` into a variable node."""
    if name == "t":
        return Time()
    if name.startswith("x") and name[1:].isdigit() and int(name[1:]) >= 1:
        return State(int(name[1:]))
    raise ValidationError(f"Not a variable name: {name!r}", context={"name": name})


class Differentiator(NodeVisitor[Expr]):
    """Visitor computing d(expr)/d(var)."""

    def __init__(self, var: Variable):
        self.var = var

    def visit_num(self, node: Num) -> Expr:
        """d(c) = 0."""
        return ZERO

    def visit_time(self, node: Time) -> Expr:
        """dt/dvar."""
        return ONE if self.var == node else ZERO

    def visit_state(self, node: State) -> Expr:
        """dxk/dvar."""
        return ONE if self.var == node else ZERO

    def visit_unary(self, node: Unary) -> Expr:
        """Chain rule through negation and the elementary functions."""
        u = node.operand
        if not depends_on(u, self.var):
            return ZERO
        if node.op == "abs":
            from ..renderers.expression import render_expr

            raise NonDifferentiable(
                "abs is not differentiable",
                context={"subexpression": render_expr(node), "variable": self.var},
            )

        du = self.visit(u)
        if node.op == "neg":
            return neg(du)
        if node.op == "sin":
            return mul(call("cos", u), du)
        if node.op == "cos":
            return mul(neg(call("sin", u)), du)
        if node.op == "exp":
            return mul(call("exp", u), du)
        if node.op == "ln":
            return div(du, u)
        if node.op == "sqrt":
            return div(du, mul(Num(2.0), call("sqrt", u)))
        if node.op == "atan":
            return div(du, add(ONE, power(u, Num(2.0))))
        raise NonDifferentiable(f"No derivative rule for {node.op!r}", context={"op": node.op})

    def visit_binary(self, node: Binary) -> Expr:
        """Sum, product, quotient and power rules."""
        a, b = node.left, node.right
        if node.op in ("+", "-"):
            da, db = self.visit(a), self.visit(b)
            return add(da, db) if node.op == "+" else sub(da, db)

        if node.op == "*":
            return add(mul(self.visit(a), b), mul(a, self.visit(b)))

        if node.op == "/":
            da, db = self.visit(a), self.visit(b)
            if db == ZERO:
                return div(da, b)
            return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))

        if node.op == "^":
            if not depends_on(b, self.var):
                # d(a^c) = c * a^(c-1) * a'
                da = self.visit(a)
                if da == ZERO:
                    return ZERO
                return mul(mul(b, power(a, sub(b, ONE))), da)
            # d(a^b) = a^b * (b' ln a + b a'/a)
            da, db = self.visit(a), self.visit(b)
            return mul(node, add(mul(db, call("ln", a)), div(mul(b, da), a)))

        raise NonDifferentiable(f"No derivative rule for {node.op!r}", context={"op": node.op})


def diff_expr(expr: Expr, var: Variable | str) -> Expr:
    """Differentiate ``expr`` with respect to ``var``.

    Args:
        expr: Expression AST
        var: Variable node or its name (``"t"``, ``"x1"``, ...)

    Returns:
        The exact symbolic derivative

    Raises:
        NonDifferentiable: If ``abs`` is reachable from ``var``

    Example:
        >>> from nonauto_equiv.parsers import parse_expr
        >>> from nonauto_equiv.renderers import render_expr
        >>> render_expr(diff_expr(parse_expr("0.25*x1", 1), "x1"))
        '0.25'
    """
    if isinstance(var, str):
        var = parse_variable(var)
    return Differentiator(var).visit(expr)


def gradient_exprs(expr: Expr, n: int) -> list[Expr]:
    """Partial derivatives of ``expr`` with respect to ``x1..xn``."""
    return [diff_expr(expr, State(k)) for k in range(1, n + 1)]
