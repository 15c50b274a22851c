"""Machine-checkable inequality records.

A certificate collects ``(lhs, rhs, witness)`` samples of one inequality
``lhs ≤ rhs`` and summarises them by the worst margin ``min(rhs - lhs)``.
It passes when that margin is at least ``-tolerance · scale`` with
``scale = max(1, max |rhs|)``.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9


class ProbeStatus(StrEnum):
    """Verdict of a hypothesis check or growth probe.

    Limit statements (growth as ``|x| → ∞``) cannot be certified on a grid,
    so probes only ever report ``probe-passed``, ``probe-inconclusive`` or
    ``violated``.
    """

    CERTIFIED = "certified-on-grid"
    VIOLATED = "violated"
    PROBE_PASSED = "probe-passed"
    PROBE_INCONCLUSIVE = "probe-inconclusive"


def growth_status(values: Sequence[float]) -> ProbeStatus:
    """Classify a sequence of magnitudes sampled at increasing radii.

    Strictly increasing values pass; a last value below the first is a
    violation; anything else (plateaus, dips) is inconclusive.
    """
    if len(values) < 2:
        return ProbeStatus.PROBE_INCONCLUSIVE
    if all(b > a for a, b in zip(values[:-1], values[1:], strict=True)):
        return ProbeStatus.PROBE_PASSED
    if values[-1] < values[0]:
        return ProbeStatus.VIOLATED
    return ProbeStatus.PROBE_INCONCLUSIVE


@dataclass(frozen=True)
class Certificate:
    """Outcome of checking one inequality on a sample grid.

    Attributes:
        bound_id: Stable identifier of the inequality (``"Cor-2.4"``, ``"Eq-400"``, ...)
        description: One-line statement of what was checked
        samples: Number of grid points checked
        worst_margin: Minimum of ``rhs - lhs`` over the grid
        witness: Grid point attaining the worst margin, with its ``lhs`` and ``rhs``
        scale: ``max(1, max |rhs|)``
        tolerance: Relative slack applied to the scale
        passed: ``worst_margin >= -tolerance * scale``
        horizon: Truncation horizon the claim is restricted to, when relevant
        outside_theorem: The system violates the smallness hypothesis
        parameters: Constants used to evaluate the right-hand sides
    """

    bound_id: str
    description: str
    samples: int
    worst_margin: float
    witness: dict[str, Any]
    scale: float
    tolerance: float
    passed: bool
    horizon: float | None = None
    outside_theorem: bool = False
    parameters: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form with a stable key order."""
        return {
            "bound_id": self.bound_id,
            "description": self.description,
            "passed": self.passed,
            "outside_theorem": self.outside_theorem,
            "samples": self.samples,
            "worst_margin": self.worst_margin,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "horizon": self.horizon,
            "witness": self.witness,
            "parameters": self.parameters,
        }


class CertificateBuilder:
    """Accumulates samples of one inequality.

    Example:
        >>> builder = CertificateBuilder("demo", "x <= 1")
        >>> builder.add(0.5, 1.0, x=0.5)
        >>> builder.build().passed
        True
    """

    def __init__(
        self,
        bound_id: str,
        description: str,
        *,
        tolerance: float = DEFAULT_TOLERANCE,
        horizon: float | None = None,
        outside_theorem: bool = False,
        parameters: dict[str, Any] | None = None,
    ):
        self.bound_id = bound_id
        self.description = description
        self.tolerance = tolerance
        self.horizon = horizon
        self.outside_theorem = outside_theorem
        self.parameters = dict(parameters or {})
        self._count = 0
        self._worst = math.inf
        self._witness: dict[str, Any] = {}
        self._max_rhs = 0.0

    def add(self, lhs: float, rhs: float, **witness: Any) -> None:
        """Record one sample of ``lhs ≤ rhs``."""
        lhs = float(lhs)
        rhs = float(rhs)
        margin = rhs - lhs
        self._count += 1
        if math.isfinite(rhs):
            self._max_rhs = max(self._max_rhs, abs(rhs))
        # NaN margins always become the witness
        if not margin >= self._worst:
            self._worst = margin if not math.isnan(margin) else -math.inf
            self._witness = {**witness, "lhs": lhs, "rhs": rhs}

    def add_lower(self, lower: float, value: float, **witness: Any) -> None:
        """Record one sample of ``lower ≤ value``."""
        self.add(lower, value, **witness)

    def build(self) -> Certificate:
        """Summarise the recorded samples (an empty grid passes vacuously)."""
        scale = max(1.0, self._max_rhs)
        worst = self._worst if self._count else 0.0
        passed = worst >= -self.tolerance * scale
        if not passed:
            logger.warning(
                "certificate %s failed: worst margin %.3g at %s",
                self.bound_id,
                worst,
                self._witness,
            )
        return Certificate(
            bound_id=self.bound_id,
            description=self.description,
            samples=self._count,
            worst_margin=worst,
            witness=self._witness,
            scale=scale,
            tolerance=self.tolerance,
            passed=passed,
            horizon=self.horizon,
            outside_theorem=self.outside_theorem,
            parameters=self.parameters,
        )


def residual_certificate(
    bound_id: str,
    description: str,
    residuals: list[tuple[float, dict[str, Any]]],
    tolerance: float,
    *,
    horizon: float | None = None,
    outside_theorem: bool = False,
) -> Certificate:
    """Certificate of ``residual ≤ tolerance`` for each sample, with zero slack."""
    builder = CertificateBuilder(
        bound_id,
        description,
        tolerance=0.0,
        horizon=horizon,
        outside_theorem=outside_theorem,
        parameters={"tolerance": tolerance},
    )
    for value, witness in residuals:
        builder.add(value, tolerance, **witness)
    return builder.build()
