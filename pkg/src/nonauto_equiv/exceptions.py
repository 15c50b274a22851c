"""Exception classes for nonauto-equiv.

This module defines the exception hierarchy for the library, providing
detailed error information with context for debugging. Numerical findings
(failed inequalities, inconclusive probes) are never raised: they are recorded
in certificates and audit reports. Exceptions are reserved for malformed input
and for numerical machinery that cannot produce a value at all.
"""

from typing import Any


class EquivError(Exception):
    """Base exception for all nonauto-equiv errors.

    All exceptions raised by this library inherit from this base class,
    making it easy to catch all library-specific errors.

    Attributes:
        message: Human-readable error message
        context: Additional context information for debugging (optional)
    """

    def __init__(self, message: str, context: dict[str, Any] | None = None) -> None:
        """Initialize the exception.

        Args:
            message: Human-readable error message
            context: Additional context information (position, time, state, etc.)
        """
        self.message = message
        self.context = context or {}
        super().__init__(message)

    def __str__(self) -> str:
        """Return string representation with context if available."""
        if self.context:
            context_str = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
            return f"{self.message} (context: {context_str})"
        return self.message

    def __repr__(self) -> str:
        """Return detailed representation."""
        return f"{self.__class__.__name__}({self.message!r}, context={self.context!r})"


# Expression language


class ParseError(EquivError):
    """Error parsing a system-definition expression.

    The context always carries ``position`` (0-based character offset) and
    ``expected`` (sorted list of token kinds that would have been accepted).

    Example:
        >>> try:
        ...     parse_expr("x1 +", 1)
        ... except ParseError as e:
        ...     print(e.position, e.expected)
        4 ['(', '-', 'identifier', 'number']
    """

    @property
    def position(self) -> int:
        """Character offset where parsing failed."""
        return int(self.context.get("position", -1))

    @property
    def expected(self) -> list[str]:
        """Token kinds the parser would have accepted at ``position``."""
        return list(self.context.get("expected", []))


class UnknownIdentifier(ParseError):
    """An identifier that is neither a variable, a constant nor a function."""


class DimensionError(ParseError):
    """A state variable ``xk`` whose index lies outside ``1..n``."""


class EvalError(EquivError):
    """Domain violation while evaluating an expression.

    Division by zero, logarithms or square roots of out-of-domain arguments and
    overflow are reported here instead of producing ±inf or NaN. The context
    names the offending subexpression.
    """


class NonDifferentiable(EquivError):
    """Symbolic differentiation reached a primitive that is not differentiable (abs)."""


# Integration


class IntegrationError(EquivError):
    """Base class for failures of the initial-value-problem integrator."""


class StepLimitExceeded(IntegrationError):
    """The integrator used ``max_steps`` steps without reaching the final time."""


class NonFiniteState(IntegrationError):
    """The vector field returned NaN or infinity."""


class OutOfSpan(IntegrationError):
    """A trajectory was queried outside the time span it covers."""


# Dynamics


class NotContractive(EquivError):
    """The fitted decay rate of the transition matrix is not negative."""


class NoConvergence(EquivError):
    """The Picard recursion did not reach its tolerance within ``j_max`` iterations."""


class SmallnessViolation(EquivError):
    """K·γ ≥ α: the coupled system lies outside the contraction regime."""


class DerivativeMismatch(EquivError):
    """Two independent derivative formulas disagree beyond tolerance."""


class SingularJacobian(EquivError):
    """The Jacobian determinant of G fell to or below the singularity floor."""


class UnknownGalleryId(EquivError):
    """The requested gallery system does not exist."""


class OracleUnavailable(EquivError):
    """No closed-form oracle is known for the requested quantity."""


# Configuration and reporting


class ValidationError(EquivError):
    """Invalid arguments or option values.

    Common scenarios:
    - Non-positive tolerances or step limits
    - Probe radii or finite-difference steps in the wrong order
    - Times outside the system horizon
    """


class ConfigError(ValidationError):
    """Invalid run configuration file."""


class ReportIOError(EquivError):
    """A report or table could not be written."""


__all__ = [
    "EquivError",
    "ParseError",
    "UnknownIdentifier",
    "DimensionError",
    "EvalError",
    "NonDifferentiable",
    "IntegrationError",
    "StepLimitExceeded",
    "NonFiniteState",
    "OutOfSpan",
    "NotContractive",
    "NoConvergence",
    "SmallnessViolation",
    "DerivativeMismatch",
    "SingularJacobian",
    "UnknownGalleryId",
    "OracleUnavailable",
    "ValidationError",
    "ConfigError",
    "ReportIOError",
]
