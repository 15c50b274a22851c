"""Tests for exception classes."""

import pytest

from nonauto_equiv import EquivError, IntegrationError, ParseError, ValidationError
from nonauto_equiv.exceptions import (
    ConfigError,
    DimensionError,
    NonFiniteState,
    OutOfSpan,
    SmallnessViolation,
    StepLimitExceeded,
    UnknownIdentifier,
)
from nonauto_equiv.parsers import parse_expr


class TestEquivError:
    """Test the base exception class."""

    def test_basic_exception(self) -> None:
        """Test exception with just a message."""
        exc = EquivError("Something went wrong")

        assert exc.message == "Something went wrong"
        assert exc.context == {}
        assert str(exc) == "Something went wrong"

    def test_exception_with_context(self) -> None:
        """Test exception with context information."""
        context = {"time": 1.5, "state": [2.0]}
        exc = EquivError("Integration failed", context=context)

        assert exc.message == "Integration failed"
        assert exc.context == context
        assert "time=1.5" in str(exc)
        assert "state=[2.0]" in str(exc)

    def test_exception_repr(self) -> None:
        """Test exception representation."""
        exc = EquivError("Error", context={"foo": "bar"})
        repr_str = repr(exc)

        assert "EquivError" in repr_str
        assert "'Error'" in repr_str
        assert "'foo': 'bar'" in repr_str

    def test_exception_is_catchable(self) -> None:
        """Test that exception can be caught."""
        with pytest.raises(EquivError) as exc_info:
            raise EquivError("test error")

        assert exc_info.value.message == "test error"


class TestParseError:
    """Test ParseError and its position information."""

    def test_position_and_expected(self) -> None:
        """A truncated expression reports where it stopped and what could follow."""
        with pytest.raises(ParseError) as exc_info:
            parse_expr("x1 +", 1)

        assert exc_info.value.position == 4
        assert exc_info.value.expected == ["(", "-", "identifier", "number"]

    def test_defaults_without_context(self) -> None:
        """Missing context gives position -1 and no expectations."""
        exc = ParseError("bad")

        assert exc.position == -1
        assert exc.expected == []

    def test_subclasses(self) -> None:
        """Identifier and dimension errors are parse errors."""
        assert issubclass(UnknownIdentifier, ParseError)
        assert issubclass(DimensionError, ParseError)
        assert isinstance(ParseError("x"), EquivError)


class TestHierarchy:
    """Test the grouping of the remaining exceptions."""

    def test_integration_errors(self) -> None:
        """Integrator failures share one base class."""
        for cls in (StepLimitExceeded, NonFiniteState, OutOfSpan):
            assert issubclass(cls, IntegrationError)
            assert issubclass(cls, EquivError)

    def test_config_error_is_validation_error(self) -> None:
        """Configuration errors are caught as validation errors."""
        with pytest.raises(ValidationError):
            raise ConfigError("bad key", context={"section": "task"})

    def test_smallness_violation_context(self) -> None:
        """The smallness violation carries the offending constants."""
        exc = SmallnessViolation("outside", context={"K": 1.0, "gamma": 2.0, "alpha": 1.0})

        assert exc.context["gamma"] == 2.0
        assert "gamma=2.0" in str(exc)
