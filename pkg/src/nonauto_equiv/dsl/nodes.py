"""AST node definitions for the system-definition expression language.

Expressions describe entries of A(t) and components of f(t, x). The tree is
built from numeric literals, the time variable ``t``, state variables
``x1..xn``, unary operations (negation and the elementary functions) and the
binary arithmetic operators.
"""

from dataclasses import dataclass

# Operator tables

UNARY_FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "atan", "abs")
UNARY_OPS = ("neg", *UNARY_FUNCTIONS)
BINARY_OPS = ("+", "-", "*", "/", "^")

# Binding strength used by the parser and the printer: ^ > unary - > * / > + -
PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
ATOM_PRECEDENCE = 5


# Base class


@dataclass(frozen=True)
class Expr:
    """Base class for all expression nodes.

    All nodes are immutable (frozen), so trees can be shared between threads
    and reused as cache keys.
    """

    pass


# Leaves


@dataclass(frozen=True)
class Num(Expr):
    """Numeric literal."""

    value: float


@dataclass(frozen=True)
class Time(Expr):
    """The time variable ``t``."""

    pass


@dataclass(frozen=True)
class State(Expr):
    """State variable ``x{index}`` (1-based).

    Attributes:
        index: Component index, 1 ≤ index ≤ n
    """

    index: int


# Operations


@dataclass(frozen=True)
class Unary(Expr):
    """Negation or elementary function applied to one operand.

    Attributes:
        op: One of ``UNARY_OPS``
        operand: The argument
    """

    op: str
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    """Arithmetic operator applied to two operands.

    Attributes:
        op: One of ``BINARY_OPS``
        left: Left operand
        right: Right operand
    """

    op: str
    left: Expr
    right: Expr


# Helpers


def variable_name(node: Time | State) -> str:
    """Return the source spelling of a variable node."""
    if isinstance(node, Time):
        return "t"
    return f"x{node.index}"


def max_state_index(expr: Expr) -> int:
    """Largest state index referenced by ``expr`` (0 if none)."""
    if isinstance(expr, State):
        return expr.index
    if isinstance(expr, Unary):
        return max_state_index(expr.operand)
    if isinstance(expr, Binary):
        return max(max_state_index(expr.left), max_state_index(expr.right))
    return 0


def depends_on(expr: Expr, var: Time | State) -> bool:
    """Whether ``expr`` references the variable ``var``."""
    if isinstance(expr, Time | State):
        return expr == var
    if isinstance(expr, Unary):
        return depends_on(expr.operand, var)
    if isinstance(expr, Binary):
        return depends_on(expr.left, var) or depends_on(expr.right, var)
    return False


# Type aliases for convenience

AnyLeaf = Num | Time | State
AnyExpr = Expr | Num | Time | State | Unary | Binary
