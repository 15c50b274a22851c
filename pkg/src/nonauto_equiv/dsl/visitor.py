"""Visitor pattern implementation for expression traversal and transformation."""

from dataclasses import replace
from typing import Generic, TypeVar

from .nodes import Binary, Expr, Num, State, Time, Unary

R = TypeVar("R")


class NodeVisitor(Generic[R]):
    """Base class for expression visitors.

    Subclass this and override ``visit_*`` methods for specific node types.
    ``visit`` dispatches on the lower-cased class name; nodes without a
    specific method go to ``generic_visit``.

    Example:
        class VariableCounter(NodeVisitor[int]):
            def visit_num(self, node: Num) -> int:
                return 0

            def visit_time(self, node: Time) -> int:
                return 1

            def visit_state(self, node: State) -> int:
                return 1

            def visit_unary(self, node: Unary) -> int:
                return self.visit(node.operand)

            def visit_binary(self, node: Binary) -> int:
                return self.visit(node.left) + self.visit(node.right)
    """

    def visit(self, node: Expr) -> R:
        """Visit a node and dispatch to the appropriate visit_* method."""
        method_name = f"visit_{node.__class__.__name__.lower()}"
        visitor = getattr(self, method_name, self.generic_visit)
        result: R = visitor(node)
        return result

    def generic_visit(self, node: Expr) -> R:
        """Called for nodes without a specific visit_* method."""
        raise NotImplementedError(
            f"{self.__class__.__name__} has no visitor for {node.__class__.__name__}"
        )


class NodeTransformer(NodeVisitor[Expr]):
    """Visitor that maps a tree to a new tree.

    The default behaviour rebuilds operation nodes from their visited operands
    and returns leaves unchanged. Since nodes are frozen, a new node is only
    created when an operand actually changed.
    """

    def visit_num(self, node: Num) -> Expr:
        """Visit a Num node."""
        return node

    def visit_time(self, node: Time) -> Expr:
        """Visit a Time node."""
        return node

    def visit_state(self, node: State) -> Expr:
        """Visit a State node."""
        return node

    def visit_unary(self, node: Unary) -> Expr:
        """Visit a Unary node."""
        operand = self.visit(node.operand)
        if operand is node.operand:
            return node
        return replace(node, operand=operand)

    def visit_binary(self, node: Binary) -> Expr:
        """Visit a Binary node."""
        left = self.visit(node.left)
        right = self.visit(node.right)
        if left is node.left and right is node.right:
            return node
        return replace(node, left=left, right=right)


def transform_expr(root: Expr, visitor: NodeTransformer) -> Expr:
    """Transform an expression tree using the given visitor.

    Args:
        root: Root node of the expression
        visitor: Transformer instance to apply

    Returns:
        Transformed expression root

    Example:
        >>> from nonauto_equiv.dsl import Num, State, Binary, NodeTransformer, transform_expr
        >>>
        >>> class DoubleLiterals(NodeTransformer):
        ...     def visit_num(self, node):
        ...         return Num(2 * node.value)
        >>>
        >>> transform_expr(Binary("*", Num(0.25), State(1)), DoubleLiterals())
        Binary(op='*', left=Num(value=0.5), right=State(index=1))
    """
    return visitor.visit(root)
