"""Expression language for system definitions.

This module provides the AST node definitions, the visitor pattern and the
evaluator for the expressions that define A(t) and f(t, x).
"""

from .evaluator import CompiledExpr, Env, compile_expr, eval_expr
from .nodes import (
    BINARY_OPS,
    UNARY_FUNCTIONS,
    UNARY_OPS,
    AnyExpr,
    Binary,
    Expr,
    Num,
    State,
    Time,
    Unary,
    depends_on,
    max_state_index,
    variable_name,
)
from .visitor import NodeTransformer, NodeVisitor, transform_expr

__all__ = [
    # Nodes
    "Expr",
    "Num",
    "Time",
    "State",
    "Unary",
    "Binary",
    "AnyExpr",
    # Operator tables
    "UNARY_FUNCTIONS",
    "UNARY_OPS",
    "BINARY_OPS",
    # Helpers
    "variable_name",
    "max_state_index",
    "depends_on",
    # Visitor pattern
    "NodeVisitor",
    "NodeTransformer",
    "transform_expr",
    # Evaluation
    "Env",
    "CompiledExpr",
    "compile_expr",
    "eval_expr",
]
