"""Renderer for expression trees.

Produces the printed normal form: binary operators surrounded by single
spaces, function calls as ``name(arg)``, and parentheses only where the
precedence and associativity of the grammar require them. Parsing the printed
form and printing again yields the same text.
"""

from ..dsl import Binary, Expr, Num, State, Time, Unary
from ..dsl.nodes import ATOM_PRECEDENCE, PRECEDENCE
from ..dsl.visitor import NodeVisitor


def format_number(value: float) -> str:
    """Format a literal so that the tokenizer reads back the same float."""
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"Cannot render non-finite literal {value!r}")
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def _precedence(node: Expr) -> int:
    if isinstance(node, Binary):
        return PRECEDENCE[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return PRECEDENCE["neg"]
    if isinstance(node, Num) and (node.value < 0 or str(node.value).startswith("-")):
        # A negative literal prints with a leading minus, like a negation
        return PRECEDENCE["neg"]
    return ATOM_PRECEDENCE


class ExprRenderer(NodeVisitor[str]):
    """Visitor-based expression printer."""

    def render(self, node: Expr) -> str:
        """Render a node to its printed normal form."""
        return self.visit(node)

    def visit_num(self, node: Num) -> str:
        """Render a literal."""
        return format_number(node.value)

    def visit_time(self, node: Time) -> str:
        """Render the time variable."""
        return "t"

    def visit_state(self, node: State) -> str:
        """Render a state variable."""
        return f"x{node.index}"

    def visit_unary(self, node: Unary) -> str:
        """Render negation (prefix minus) or a function call."""
        if node.op == "neg":
            inner = self.visit(node.operand)
            if _precedence(node.operand) < PRECEDENCE["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({self.visit(node.operand)})"

    def visit_binary(self, node: Binary) -> str:
        """Render an operator with the parentheses its operands need."""
        prec = PRECEDENCE[node.op]
        left = self.visit(node.left)
        right = self.visit(node.right)

        if node.op == "^":
            # Base must be an atom; exponent is parsed as a unary expression
            if _precedence(node.left) < ATOM_PRECEDENCE:
                left = f"({left})"
            if _precedence(node.right) < PRECEDENCE["neg"]:
                right = f"({right})"
            return f"{left}^{right}"

        # Left associative: equal precedence on the right needs parentheses
        if _precedence(node.left) < prec:
            left = f"({left})"
        if _precedence(node.right) <= prec:
            right = f"({right})"
        return f"{left} {node.op} {right}"


def render_expr(node: Expr) -> str:
    """Render an expression to text.

    Args:
        node: Expression AST

    Returns:
        Printed normal form

    Example:
        >>> from nonauto_equiv.parsers import parse_expr
        >>> render_expr(parse_expr("0.2*(sqrt(1+x1^2)+cos(t))", 1))
        '0.2 * (sqrt(1 + x1^2) + cos(t))'
    """
    return ExprRenderer().render(node)
