"""nonauto-equiv: Equivalence maps between a linear nonautonomous ODE and its perturbation.

For ``x' = A(t)x`` with a uniformly contracting flow and the perturbed
system ``y' = A(t)y + f(t, y)`` with ``f`` globally Lipschitz, this library
constructs the maps H and G that send solutions of one system to solutions
of the other, checks the construction numerically and records every
inequality it relies on as a certificate.

It provides:
- A small expression language for A(t) and f(t, x), with symbolic derivatives
- Dense-output integration of the linear, perturbed and variational systems
- H and G by augmented integration or by the Picard recursion
- Jacobians and second derivatives of H and G
- Audits of the standing hypotheses and certificates of the quantitative bounds
"""

from typing import Any

from .dsl import NodeVisitor, compile_expr, eval_expr
from .dynamics import (
    AuditReport,
    Certificate,
    ConjugacyTolerances,
    CoupledSystem,
    IntegratorOptions,
    LinearSystem,
    Perturbation,
    SystemConstants,
    audit_hypotheses,
    jacobian_G,
    jacobian_H,
    load_gallery,
    map_G,
    map_H,
    verify_conjugacy,
    verify_inverse,
)
from .exceptions import (
    EquivError,
    IntegrationError,
    ParseError,
    SmallnessViolation,
    ValidationError,
)
from .parsers import parse_expr
from .renderers import render_expr
from .transformers import diff_expr, fold_constants

__version__ = "0.1.0"

__all__ = [
    # Version
    "__version__",
    # Convenience functions
    "gallery_maps",
    # Expression language
    "parse_expr",
    "render_expr",
    "diff_expr",
    "fold_constants",
    "compile_expr",
    "eval_expr",
    "NodeVisitor",
    # Systems
    "IntegratorOptions",
    "LinearSystem",
    "Perturbation",
    "SystemConstants",
    "ConjugacyTolerances",
    "CoupledSystem",
    "load_gallery",
    # Maps and checks
    "map_H",
    "map_G",
    "jacobian_G",
    "jacobian_H",
    "verify_conjugacy",
    "verify_inverse",
    "audit_hypotheses",
    "AuditReport",
    "Certificate",
    # Exceptions
    "EquivError",
    "ParseError",
    "IntegrationError",
    "SmallnessViolation",
    "ValidationError",
]


def gallery_maps(system_id: str, t: float, point: Any, unsafe: bool = False) -> tuple[Any, Any]:
    """Evaluate H(t, point) and G(t, point) for a built-in system.

    This is the shortest path from a gallery id to both maps.

    Args:
        system_id: Gallery id (``"G1"``, ``"G2"``, ``"G3"``, ``"X1"``)
        t: Time in ``[0, T]``
        point: State of the system's dimension
        unsafe: Allow systems outside the contraction regime (X1)

    Returns:
        The pair ``(H(t, point), G(t, point))`` as numpy arrays

    Example:
        >>> H, G = gallery_maps("G1", 1.0, [2.0])
        >>> round(float(H[0]), 7)
        2.5680508
    """
    cs = load_gallery(system_id).coupled(unsafe=unsafe)
    return map_H(cs, t, point).value, map_G(cs, t, point).value
