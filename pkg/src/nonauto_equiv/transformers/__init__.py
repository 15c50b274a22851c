"""Tree-to-tree transformations: constant folding and symbolic differentiation."""

from .derivative import Differentiator, diff_expr, gradient_exprs, parse_variable
from .folding import ConstantFolder, fold_constants

__all__ = [
    "Differentiator",
    "diff_expr",
    "gradient_exprs",
    "parse_variable",
    "ConstantFolder",
    "fold_constants",
]
