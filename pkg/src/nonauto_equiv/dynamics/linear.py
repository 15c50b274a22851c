"""Linear flow: transition matrices, linear solutions and dichotomy constants.

``LinearSystem`` wraps ``x' = A(t)x`` on ``[0, T]``. Transition matrices are
obtained by integrating the matrix problem ``X' = A(r)X, X(s) = I`` and are
memoized per ``(t, s)``; the memo accepts concurrent readers and serialises
insertions.
"""

import logging
import math
import threading
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..dsl import compile_expr
from ..exceptions import NotContractive, ValidationError
from ..parsers.expression import parse_expr
from .ode import IntegratorOptions, IvpProblem, Trajectory, Vector, integrate_ivp

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
MatrixFunction = Callable[[float], Matrix]

# Times within this distance of the horizon ends are accepted
_TIME_SLACK = 1e-12
# Digits kept when quantizing memo keys
_KEY_DIGITS = 12


def _as_entries(entries: str | Sequence[str] | Sequence[Sequence[str]], n: int) -> list[list[str]]:
    if isinstance(entries, str):
        rows: list[list[str]] = [[entries]]
    else:
        rows = [[row] if isinstance(row, str) else list(row) for row in entries]
    if n == 1 and len(rows) == 1 and len(rows[0]) == 1:
        return rows
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValidationError(
            f"A must be an {n}x{n} array of expressions",
            context={"rows": [len(row) for row in rows], "n": n},
        )
    return rows


class LinearSystem:
    """The linear system ``x' = A(t)x`` on the horizon ``[0, T]``.

    Attributes:
        n: Dimension
        horizon: Truncation horizon T
        options: Integrator options used for every flow computation
        expressions: Source text of the entries of A, when built from the DSL
    """

    def __init__(
        self,
        n: int,
        A: MatrixFunction,
        horizon: float,
        options: IntegratorOptions | None = None,
        expressions: tuple[tuple[str, ...], ...] | None = None,
    ):
        if n < 1:
            raise ValidationError("Dimension must be at least 1", context={"n": n})
        if not horizon > 0:
            raise ValidationError("Horizon must be positive", context={"horizon": horizon})
        self.n = n
        self._A = A
        self.horizon = float(horizon)
        self.options = options or IntegratorOptions()
        self.expressions = expressions
        self._memo: dict[tuple[float, float], Matrix] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_expressions(
        cls,
        entries: str | Sequence[str] | Sequence[Sequence[str]],
        n: int,
        horizon: float,
        options: IntegratorOptions | None = None,
    ) -> "LinearSystem":
        """Build a system from DSL strings for the entries of A(t).

        The entries may only depend on ``t``.

        Example:
            >>> sys = LinearSystem.from_expressions([["-1"]], 1, horizon=5.0)
            >>> sys.matrix(0.0)
            array([[-1.]])
        """
        rows = _as_entries(entries, n)
        compiled = []
        for row in rows:
            compiled_row = []
            for text in row:
                expr = parse_expr(text, 0)
                compiled_row.append(compile_expr(expr))
            compiled.append(compiled_row)

        def A(t: float) -> Matrix:
            return np.array([[entry(t, ()) for entry in row] for row in compiled], dtype=np.float64)

        return cls(n, A, horizon, options, tuple(tuple(row) for row in rows))

    def matrix(self, t: float) -> Matrix:
        """Evaluate A(t)."""
        return np.asarray(self._A(t), dtype=np.float64).reshape(self.n, self.n)

    def field(self, t: float, x: Vector) -> Vector:
        """Right-hand side ``A(t)x``."""
        return self.matrix(t) @ x

    def scaled(self, factor: float) -> "LinearSystem":
        """The system with A replaced by ``factor * A``."""
        A = self._A
        return LinearSystem(
            self.n, lambda t: factor * np.asarray(A(t)), self.horizon, self.options, None
        )

    def with_horizon(self, horizon: float) -> "LinearSystem":
        """Same matrix function on another horizon (fresh memo)."""
        return LinearSystem(self.n, self._A, horizon, self.options, self.expressions)

    def with_options(self, options: IntegratorOptions) -> "LinearSystem":
        """Same system integrated with other options (fresh memo)."""
        return LinearSystem(self.n, self._A, self.horizon, options, self.expressions)

    def check_time(self, *times: float) -> None:
        """Raise ValidationError unless every time lies in ``[0, T]``."""
        for t in times:
            if not -_TIME_SLACK <= t <= self.horizon + _TIME_SLACK:
                raise ValidationError(
                    f"Time {t!r} is outside the horizon [0, {self.horizon!r}]",
                    context={"time": t, "horizon": self.horizon},
                )

    # Flows

    def _matrix_field(self, r: float, u: Vector) -> Vector:
        n = self.n
        return (self.matrix(r) @ u.reshape(n, n)).reshape(-1)

    def transition_matrix(self, t: float, s: float) -> Matrix:
        """Φ(t, s), memoized."""
        self.check_time(t, s)
        if t == s:
            return np.eye(self.n)
        key = (round(t, _KEY_DIGITS), round(s, _KEY_DIGITS))
        cached = self._memo.get(key)
        if cached is not None:
            return cached.copy()
        traj = integrate_ivp(
            IvpProblem.build(self._matrix_field, s, np.eye(self.n).reshape(-1), t), self.options
        )
        value = traj.final_state.reshape(self.n, self.n)
        with self._lock:
            self._memo.setdefault(key, value)
        return value.copy()

    def transition_trajectory(self, s: float, t_end: float) -> Trajectory:
        """Dense ``r ↦ Φ(r, s)`` (flattened) between ``s`` and ``t_end``."""
        self.check_time(s, t_end)
        return integrate_ivp(
            IvpProblem.build(self._matrix_field, s, np.eye(self.n).reshape(-1), t_end),
            self.options,
        )

    def adjoint_trajectory(self, t: float, opts: IntegratorOptions | None = None) -> Trajectory:
        """Dense ``r ↦ Φ(t, r)`` (flattened) on ``[0, t]``.

        Solves ``d/dr Φ(t, r) = -Φ(t, r)A(r)`` backward from ``Φ(t, t) = I``.
        """
        self.check_time(t)
        n = self.n

        def adjoint_field(r: float, u: Vector) -> Vector:
            return -(u.reshape(n, n) @ self.matrix(r)).reshape(-1)

        return integrate_ivp(
            IvpProblem.build(adjoint_field, t, np.eye(n).reshape(-1), 0.0), opts or self.options
        )

    def linear_trajectory(
        self, t: float, xi: ArrayLike, s_end: float = 0.0, opts: IntegratorOptions | None = None
    ) -> Trajectory:
        """Dense ``s ↦ x(s, t, ξ)`` between ``t`` and ``s_end``."""
        self.check_time(t, s_end)
        return integrate_ivp(IvpProblem.build(self.field, t, xi, s_end), opts or self.options)

    def linear_solution(self, s: float, t: float, xi: ArrayLike) -> Vector:
        """x(s, t, ξ) = Φ(s, t)ξ."""
        vector = np.asarray(xi, dtype=np.float64).reshape(self.n)
        if s == t:
            return vector.copy()
        return self.transition_matrix(s, t) @ vector


@dataclass(frozen=True)
class DichotomyEstimate:
    """Fitted constants of ``‖Φ(t,s)‖ ≤ K e^{-α(t-s)}`` on a grid.

    Attributes:
        K_hat: Envelope constant, at least 1
        alpha_hat: Decay rate in ``(0, M_hat]``
        M_hat: Sampled bound on ``‖A(t)‖₂``
        grid: The ``(t, s)`` pairs used
        residual: ``max ‖Φ(t,s)‖ e^{α(t-s)} / K`` over the grid (at most 1)
        slope: The raw least-squares slope of ``ln ‖Φ‖`` against ``t - s``
    """

    K_hat: float
    alpha_hat: float
    M_hat: float
    grid: tuple[tuple[float, float], ...] = field(repr=False)
    residual: float
    slope: float

    def bound(self, separation: float) -> float:
        """Right-hand side ``K e^{-α(t-s)}``."""
        return self.K_hat * math.exp(-self.alpha_hat * separation)


def transition_matrix(sys: LinearSystem, t: float, s: float) -> Matrix:
    """Transition matrix Φ(t, s) of ``sys``.

    Example:
        >>> sys = LinearSystem.from_expressions("-1", 1, horizon=5.0)
        >>> round(float(transition_matrix(sys, 2.0, 0.5)[0, 0]), 7)
        0.2231302
    """
    return sys.transition_matrix(t, s)


def cocycle_check(sys: LinearSystem, t: float, u: float, s: float) -> float:
    """Return ``‖Φ(t,u)Φ(u,s) - Φ(t,s)‖₂`` (solver health metric)."""
    defect = sys.transition_matrix(t, u) @ sys.transition_matrix(u, s) - sys.transition_matrix(t, s)
    return float(np.linalg.norm(defect, 2))


def linear_solution(sys: LinearSystem, s: float, t: float, xi: ArrayLike) -> Vector:
    """Solution ``x(s, t, ξ)`` of the linear system through ``(t, ξ)``."""
    return sys.linear_solution(s, t, xi)


def estimate_bound_M(sys: LinearSystem, t_samples: Iterable[float]) -> float:
    """Max over ``t_samples`` of the operator 2-norm of A(t)."""
    samples = [float(t) for t in t_samples]
    if not samples:
        raise ValidationError("t_samples must not be empty")
    sys.check_time(*samples)
    return max(float(np.linalg.norm(sys.matrix(t), 2)) for t in samples)


def default_pair_grid(
    horizon: float, starts: int = 5, separations: int = 11
) -> list[tuple[float, float]]:
    """Pairs ``(t, s)`` with ``s`` in ``[0, T/2]`` and separations from 0 to ``T/2``."""
    half = horizon / 2
    pairs = []
    for s in np.linspace(0.0, half, starts):
        for u in np.linspace(0.0, half, separations):
            pairs.append((float(min(s + u, horizon)), float(s)))
    return pairs


def estimate_dichotomy(
    sys: LinearSystem, pair_grid: Iterable[tuple[float, float]] | None = None
) -> DichotomyEstimate:
    """Estimate K and α of the uniform contraction from a grid of ``(t, s)`` pairs.

    α is the negated least-squares slope of ``ln ‖Φ(t,s)‖₂`` against ``t - s``,
    clamped to ``(0, M]``; K is the smallest envelope constant ≥ 1 for that α.

    Raises:
        NotContractive: If the fitted slope is not negative
        ValidationError: If a pair has ``t < s`` or the grid is empty

    Example:
        >>> sys = LinearSystem.from_expressions("-1", 1, horizon=5.0)
        >>> est = estimate_dichotomy(sys)
        >>> round(est.K_hat, 6), round(est.alpha_hat, 6)
        (1.0, 1.0)
    """
    grid = tuple(pair_grid if pair_grid is not None else default_pair_grid(sys.horizon))
    if not grid:
        raise ValidationError("pair_grid must not be empty")
    for t, s in grid:
        if t < s:
            raise ValidationError("Dichotomy pairs need t >= s", context={"t": t, "s": s})

    separations = np.array([t - s for t, s in grid], dtype=np.float64)
    norms = np.array([np.linalg.norm(sys.transition_matrix(t, s), 2) for t, s in grid])
    times = sorted({t for pair in grid for t in pair})
    M_hat = estimate_bound_M(sys, times)

    if np.ptp(separations) == 0.0:
        raise ValidationError("pair_grid needs at least two distinct separations")
    slope = float(np.polyfit(separations, np.log(norms), 1)[0])
    if slope >= 0.0:
        raise NotContractive(
            "Transition matrix norms do not decay",
            context={"slope": slope, "max_norm": float(norms.max())},
        )

    alpha = min(-slope, M_hat) if M_hat > 0 else -slope
    envelope = norms * np.exp(alpha * separations)
    K = max(1.0, float(envelope.max()))
    residual = float((envelope / K).max())
    logger.debug("dichotomy fit: slope %.6g, K %.6g, alpha %.6g, M %.6g", slope, K, alpha, M_hat)
    return DichotomyEstimate(K, alpha, M_hat, grid, residual, slope)
