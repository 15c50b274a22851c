"""Initial-value-problem integration with dense output.

Two explicit schemes are provided: classical fixed-step RK4 and the adaptive
Dormand-Prince 5(4) pair with first-same-as-last reuse. Every accepted step
stores the node state and the field value there, so the trajectory can be
queried anywhere in its span by cubic Hermite interpolation without further
field evaluations.

Backward problems (``t1 < t0``) are integrated as forward problems of the
time-reversed field ``g(σ, u) = -f(t0 - σ, u)``; callers never special-case
direction. Matrix and tensor states are flattened in row-major (C) order.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicHermiteSpline

from ..exceptions import NonFiniteState, OutOfSpan, StepLimitExceeded, ValidationError

logger = logging.getLogger(__name__)

Vector = NDArray[np.float64]
Field = Callable[[float, Vector], Vector]
Method = Literal["rk4", "rk45"]

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# Difference between the 5th order weights (last row of _A) and the embedded 4th order ones
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40],
    dtype=np.float64,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class IntegratorOptions:
    """Integrator configuration.

    Attributes:
        method: ``"rk45"`` (adaptive Dormand-Prince) or ``"rk4"`` (fixed step)
        abs_tol: Absolute local error tolerance (adaptive only)
        rel_tol: Relative local error tolerance (adaptive only)
        max_steps: Maximum number of attempted steps
        initial_step: First trial step (adaptive) or the step bound (fixed)
    """

    method: Method = "rk45"
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_steps: int = 100_000
    initial_step: float = 1e-2

    def __post_init__(self) -> None:
        if self.method not in ("rk4", "rk45"):
            raise ValidationError(
                f"Unknown integration method {self.method!r}", context={"method": self.method}
            )
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError(
                "Tolerances must be strictly positive",
                context={"abs_tol": self.abs_tol, "rel_tol": self.rel_tol},
            )
        if self.max_steps < 1:
            raise ValidationError(
                "max_steps must be at least 1", context={"max_steps": self.max_steps}
            )
        if not self.initial_step > 0:
            raise ValidationError(
                "initial_step must be positive", context={"initial_step": self.initial_step}
            )

    def with_changes(self, **changes: object) -> "IntegratorOptions":
        """Return a copy with some fields replaced (validated again)."""
        return replace(self, **changes)  # type: ignore[arg-type]

    @classmethod
    def fixed(cls, step: float, max_steps: int = 1_000_000) -> "IntegratorOptions":
        """Fixed-step RK4 options with the given step bound."""
        return cls(method="rk4", initial_step=step, max_steps=max_steps)


@dataclass(frozen=True)
class IvpProblem:
    """An initial value problem ``u' = field(t, u)``, ``u(t0) = state0`` on ``[t0, t1]``.

    ``t1`` may lie before ``t0``.
    """

    field: Field
    t0: float
    state0: Vector
    t1: float

    @classmethod
    def build(cls, field: Field, t0: float, state0: ArrayLike, t1: float) -> "IvpProblem":
        """Build a problem, converting the initial state to a float vector."""
        return cls(field, float(t0), np.array(state0, dtype=np.float64).reshape(-1), float(t1))


@dataclass(frozen=True)
class StepStats:
    """Integrator diagnostics.

    Attributes:
        steps: Accepted steps
        rejected: Rejected trial steps (adaptive only)
        max_error: Largest accepted local error estimate (0 for fixed-step RK4)
    """

    steps: int = 0
    rejected: int = 0
    max_error: float = 0.0


class Trajectory:
    """Dense-output numerical solution.

    Nodes are stored in strictly increasing time order whatever the direction
    of integration. Querying a node time returns the stored node state itself;
    other times are interpolated by a cubic Hermite spline through the
    ``(state, derivative)`` node pairs. Instances are not modified after
    construction and may be shared between threads.
    """

    def __init__(
        self,
        times: Vector,
        states: NDArray[np.float64],
        derivs: NDArray[np.float64],
        stats: StepStats,
        t0: float,
        t1: float,
    ):
        self.times = times
        self.states = states
        self.derivs = derivs
        self.stats = stats
        self.t0 = t0
        self.t1 = t1
        self._spline = (
            CubicHermiteSpline(times, states, derivs, axis=0) if len(times) > 1 else None
        )

    @property
    def span(self) -> tuple[float, float]:
        """Closed interval covered by the trajectory."""
        return float(self.times[0]), float(self.times[-1])

    @property
    def dimension(self) -> int:
        """Length of the state vector."""
        return int(self.states.shape[1])

    @property
    def final_state(self) -> Vector:
        """State at ``t1`` (the end of the integration, not the end of the span)."""
        index = -1 if self.t1 >= self.t0 else 0
        return np.array(self.states[index], dtype=np.float64)

    def __call__(self, s: float) -> Vector:
        return self.evaluate(s)

    def evaluate(self, s: float) -> Vector:
        """Evaluate the solution at time ``s``.

        Raises:
            OutOfSpan: If ``s`` lies outside the span
        """
        lo, hi = self.span
        if not lo <= s <= hi:
            raise OutOfSpan(
                f"Time {s!r} is outside the trajectory span [{lo!r}, {hi!r}]",
                context={"time": s, "span": (lo, hi)},
            )
        index = int(np.searchsorted(self.times, s))
        if index < len(self.times) and self.times[index] == s:
            return np.array(self.states[index], dtype=np.float64)
        assert self._spline is not None
        return np.asarray(self._spline(s), dtype=np.float64)

    def evaluate_many(self, times: ArrayLike) -> NDArray[np.float64]:
        """Evaluate at several times; returns an array of shape ``(len(times), dimension)``."""
        return np.stack([self.evaluate(float(s)) for s in np.asarray(times, dtype=np.float64)])

    def sample_times(self) -> Vector:
        """Node times plus the midpoints between consecutive nodes."""
        if len(self.times) == 1:
            return self.times.copy()
        mids = 0.5 * (self.times[:-1] + self.times[1:])
        return np.sort(np.concatenate([self.times, mids]))

    def sup_norm(
        self,
        transform: Callable[[float, Vector], Vector] | None = None,
    ) -> float:
        """Grid sup of the Euclidean norm over nodes and midpoints.

        Args:
            transform: Optional map applied to ``(time, state)`` before taking the norm,
                e.g. to select a block of an augmented state
        """
        best = 0.0
        for s in self.sample_times():
            value = self.evaluate(float(s))
            if transform is not None:
                value = transform(float(s), value)
            best = max(best, float(np.linalg.norm(value)))
        return best


def _check_finite(values: Vector, t: float, state: Vector) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteState(
            "Vector field returned a non-finite value",
            context={"time": t, "state": state.tolist()},
        )


def _evaluate_field(field: Field, t: float, u: Vector) -> Vector:
    value = np.asarray(field(t, u), dtype=np.float64).reshape(-1)
    _check_finite(value, t, u)
    return value


def _integrate_rk4(
    field: Field, span: float, u0: Vector, opts: IntegratorOptions
) -> tuple[list[float], list[Vector], list[Vector], StepStats]:
    count = max(1, math.ceil(span / opts.initial_step - 1e-9))
    if count > opts.max_steps:
        raise StepLimitExceeded(
            f"Fixed-step integration needs {count} steps, more than max_steps",
            context={"steps": count, "max_steps": opts.max_steps},
        )
    h = span / count
    times = [0.0]
    states = [u0]
    k1 = _evaluate_field(field, 0.0, u0)
    derivs = [k1]
    u = u0
    for i in range(count):
        s = i * h
        k2 = _evaluate_field(field, s + h / 2, u + (h / 2) * k1)
        k3 = _evaluate_field(field, s + h / 2, u + (h / 2) * k2)
        k4 = _evaluate_field(field, s + h, u + h * k3)
        u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s_next = span if i == count - 1 else (i + 1) * h
        k1 = _evaluate_field(field, s_next, u)
        times.append(s_next)
        states.append(u)
        derivs.append(k1)
    return times, states, derivs, StepStats(steps=count)


def _integrate_rk45(
    field: Field, span: float, u0: Vector, opts: IntegratorOptions
) -> tuple[list[float], list[Vector], list[Vector], StepStats]:
    times = [0.0]
    states = [u0]
    k1 = _evaluate_field(field, 0.0, u0)
    derivs = [k1]

    s = 0.0
    u = u0
    h = min(opts.initial_step, span)
    accepted = rejected = 0
    max_error = 0.0
    h_min = 1e-14 * max(1.0, span)

    while s < span:
        if accepted + rejected >= opts.max_steps:
            raise StepLimitExceeded(
                f"Step limit reached at time {s!r} before the end of the span {span!r}",
                context={"time": s, "max_steps": opts.max_steps},
            )
        last = s + h >= span
        if last:
            h = span - s

        stages = [k1]
        for i in range(1, 7):
            increment = sum(a * k for a, k in zip(_A[i], stages, strict=False) if a != 0.0)
            stages.append(_evaluate_field(field, s + _C[i] * h, u + h * increment))
        u_new = u + h * sum(
            a * k for a, k in zip(_A[6], stages, strict=False) if a != 0.0
        )
        error_vec = h * np.tensordot(_E, np.stack(stages), axes=1)
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(u), np.abs(u_new))
        error = float(np.max(np.abs(error_vec) / scale)) if error_vec.size else 0.0

        if error <= 1.0:
            s = span if last else s + h
            u = u_new
            k1 = stages[6]
            times.append(s)
            states.append(u)
            derivs.append(k1)
            accepted += 1
            max_error = max(max_error, float(np.max(np.abs(error_vec))) if error_vec.size else 0.0)
            factor = _MAX_FACTOR if error == 0.0 else _SAFETY * error ** (-0.2)
            h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        else:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * error ** (-0.2))
            if h < h_min:
                raise StepLimitExceeded(
                    f"Step size underflow at time {s!r}",
                    context={"time": s, "step": h},
                )

    return times, states, derivs, StepStats(accepted, rejected, max_error)


def integrate_ivp(problem: IvpProblem, opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate an initial value problem over ``[t0, t1]`` (either direction).

    Args:
        problem: The problem to solve
        opts: Integrator options (defaults: adaptive RK45, tolerances 1e-9)

    Returns:
        Trajectory covering the full span; a single node when ``t0 == t1``

    Raises:
        StepLimitExceeded: The step budget ran out before reaching ``t1``
        NonFiniteState: The field returned NaN or infinity

    Example:
        >>> traj = integrate_ivp(IvpProblem.build(lambda t, u: -u, 0.0, [1.0], 1.0))
        >>> round(float(traj(1.0)[0]), 7)
        0.3678794
    """
    opts = opts or IntegratorOptions()
    t0, t1 = problem.t0, problem.t1
    u0 = np.array(problem.state0, dtype=np.float64).reshape(-1)

    if t0 == t1:
        d0 = _evaluate_field(problem.field, t0, u0)
        return Trajectory(
            np.array([t0]), u0[np.newaxis, :], d0[np.newaxis, :], StepStats(), t0, t1
        )

    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    lo, hi = min(t0, t1), max(t0, t1)

    def reparametrized(sigma: float, u: Vector) -> Vector:
        # Stage times may overshoot the span by roundoff
        t = min(hi, max(lo, t0 + direction * sigma))
        return direction * np.asarray(problem.field(t, u), dtype=np.float64)

    runner = _integrate_rk4 if opts.method == "rk4" else _integrate_rk45
    sigmas, states, derivs, stats = runner(reparametrized, span, u0, opts)

    times = np.array([t0 + direction * sigma for sigma in sigmas], dtype=np.float64)
    times[-1] = t1
    state_arr = np.stack(states)
    # Derivatives with respect to t, not σ
    deriv_arr = direction * np.stack(derivs)
    if direction < 0:
        times = times[::-1].copy()
        state_arr = state_arr[::-1].copy()
        deriv_arr = deriv_arr[::-1].copy()

    logger.debug(
        "integrated %s over [%r, %r]: %d steps, %d rejected, max error %.3g",
        opts.method,
        t0,
        t1,
        stats.steps,
        stats.rejected,
        stats.max_error,
    )
    return Trajectory(times, state_arr, deriv_arr, stats, t0, t1)


def eval_trajectory(traj: Trajectory, s: float) -> Vector:
    """Evaluate a trajectory at ``s`` (see ``Trajectory.evaluate``)."""
    return traj.evaluate(s)
