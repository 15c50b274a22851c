"""The nonlinear perturbation f(t, x) with derivative access and constant estimators.

A ``Perturbation`` built from DSL strings carries exact symbolic first and
second derivatives; one built from Python callables falls back to central
finite differences for whatever derivatives it is not given.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..dsl import Expr, Num, compile_expr
from ..exceptions import ValidationError
from ..parsers.expression import parse_expr
from ..renderers.expression import render_expr
from ..transformers import diff_expr
from ..transformers.folding import mul
from .ode import Vector

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Tensor = NDArray[np.float64]
VectorFunction = Callable[[float, Vector], Vector]
MatrixFunction = Callable[[float, Vector], Matrix]


@dataclass(frozen=True)
class SampleDomain:
    """Sampling box ``[-radius, radius]^n × [0, horizon]`` for the estimators.

    Attributes:
        radius: Half-width of the state box
        horizon: Upper end of the time interval
        samples: Number of sampled ``(t, x)`` points
        seed: Seed of the numpy generator
    """

    radius: float = 5.0
    horizon: float = 5.0
    samples: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.radius > 0 and self.horizon > 0):
            raise ValidationError(
                "Sample domain needs positive radius and horizon",
                context={"radius": self.radius, "horizon": self.horizon},
            )
        if self.samples < 2:
            raise ValidationError(
                "At least two samples are needed", context={"samples": self.samples}
            )

    def draw(self, n: int, samples: int | None = None) -> NDArray[np.float64]:
        """Draw ``(samples, 1 + n)`` rows ``(t, x1..xn)``.

        Smaller sample counts give prefixes of larger ones (nested sample sets).
        """
        count = self.samples if samples is None else samples
        rng = np.random.default_rng(self.seed)
        unit = rng.random((count, 1 + n))
        block = np.empty_like(unit)
        block[:, 0] = unit[:, 0] * self.horizon
        block[:, 1:] = (2.0 * unit[:, 1:] - 1.0) * self.radius
        return block


class Perturbation:
    """The map f(t, x) with Jacobian Df and second derivative D²f.

    Attributes:
        n: Dimension
        gamma: Declared Lipschitz constant, if any
        mu: Declared bound on ``sup_t |f(t, 0)|``, if any
        expressions: Component trees, when built from the DSL
        fd_step: Step of the finite-difference fallbacks
    """

    def __init__(
        self,
        n: int,
        f: VectorFunction,
        Df: MatrixFunction | None = None,
        D2f: Callable[[float, Vector], Tensor] | None = None,
        *,
        gamma: float | None = None,
        mu: float | None = None,
        expressions: tuple[Expr, ...] | None = None,
        fd_step: float = 1e-5,
    ):
        if gamma is not None and gamma < 0:
            raise ValidationError("gamma must be nonnegative", context={"gamma": gamma})
        if mu is not None and mu < 0:
            raise ValidationError("mu must be nonnegative", context={"mu": mu})
        self.n = n
        self._f = f
        self._Df = Df
        self._D2f = D2f
        self.gamma = gamma
        self.mu = mu
        self.expressions = expressions
        self.fd_step = fd_step

    @classmethod
    def from_trees(
        cls,
        trees: Sequence[Expr],
        n: int,
        *,
        gamma: float | None = None,
        mu: float | None = None,
    ) -> "Perturbation":
        """Build from expression trees, differentiating symbolically."""
        if len(trees) != n:
            raise ValidationError(
                f"f needs {n} components, got {len(trees)}", context={"components": len(trees)}
            )
        first = [[diff_expr(e, f"x{j}") for j in range(1, n + 1)] for e in trees]
        second = [
            [[diff_expr(d, f"x{k}") for k in range(1, n + 1)] for d in row] for row in first
        ]
        f_c = [compile_expr(e) for e in trees]
        Df_c = [[compile_expr(d) for d in row] for row in first]
        D2f_c = [[[compile_expr(d) for d in col] for col in row] for row in second]

        def f(t: float, x: Vector) -> Vector:
            return np.array([c(t, x) for c in f_c], dtype=np.float64)

        def Df(t: float, x: Vector) -> Matrix:
            return np.array([[c(t, x) for c in row] for row in Df_c], dtype=np.float64)

        def D2f(t: float, x: Vector) -> Tensor:
            return np.array(
                [[[c(t, x) for c in col] for col in row] for row in D2f_c], dtype=np.float64
            )

        return cls(n, f, Df, D2f, gamma=gamma, mu=mu, expressions=tuple(trees))

    @classmethod
    def from_expressions(
        cls,
        components: str | Sequence[str],
        n: int,
        *,
        gamma: float | None = None,
        mu: float | None = None,
    ) -> "Perturbation":
        """Build from DSL strings, one per component.

        Example:
            >>> p = Perturbation.from_expressions(["0.25*x1"], 1)
            >>> p.jacobian(0.0, np.array([3.0]))
            array([[0.25]])
        """
        texts = [components] if isinstance(components, str) else list(components)
        return cls.from_trees([parse_expr(text, n) for text in texts], n, gamma=gamma, mu=mu)

    @classmethod
    def zero(cls, n: int) -> "Perturbation":
        """The perturbation f ≡ 0."""
        return cls.from_trees([Num(0.0)] * n, n, gamma=0.0, mu=0.0)

    @property
    def symbolic(self) -> bool:
        """True when derivatives come from symbolic differentiation."""
        return self.expressions is not None

    @property
    def has_jacobian(self) -> bool:
        """True when Df was supplied (symbolically or as a callable)."""
        return self._Df is not None

    def describe(self) -> list[str]:
        """Printed components, or a placeholder for callables."""
        if self.expressions is None:
            return ["<callable>"] * self.n
        return [render_expr(e) for e in self.expressions]

    def scaled(self, factor: float) -> "Perturbation":
        """The perturbation ``factor * f`` (declared constants scale too)."""
        gamma = None if self.gamma is None else abs(factor) * self.gamma
        mu = None if self.mu is None else abs(factor) * self.mu
        if self.expressions is not None:
            trees = [mul(Num(float(factor)), e) for e in self.expressions]
            return Perturbation.from_trees(trees, self.n, gamma=gamma, mu=mu)
        f, Df, D2f = self._f, self._Df, self._D2f
        return Perturbation(
            self.n,
            lambda t, x: factor * np.asarray(f(t, x)),
            None if Df is None else (lambda t, x: factor * np.asarray(Df(t, x))),
            None if D2f is None else (lambda t, x: factor * np.asarray(D2f(t, x))),
            gamma=gamma,
            mu=mu,
            fd_step=self.fd_step,
        )

    def with_constants(self, gamma: float | None, mu: float | None) -> "Perturbation":
        """Same map with other declared constants."""
        return Perturbation(
            self.n,
            self._f,
            self._Df,
            self._D2f,
            gamma=gamma,
            mu=mu,
            expressions=self.expressions,
            fd_step=self.fd_step,
        )

    # Evaluation

    def value(self, t: float, x: ArrayLike) -> Vector:
        """f(t, x)."""
        return np.asarray(self._f(t, np.asarray(x, dtype=np.float64)), dtype=np.float64).reshape(
            self.n
        )

    def __call__(self, t: float, x: ArrayLike) -> Vector:
        return self.value(t, x)

    def jacobian(self, t: float, x: ArrayLike) -> Matrix:
        """Df(t, x), entry ``(i, j) = ∂f_i/∂x_j``."""
        point = np.asarray(x, dtype=np.float64)
        if self._Df is None:
            return self.fd_jacobian(t, point)
        return np.asarray(self._Df(t, point), dtype=np.float64).reshape(self.n, self.n)

    def hessian(self, t: float, x: ArrayLike) -> Tensor:
        """D²f(t, x), entry ``(i, j, k) = ∂²f_i/∂x_j∂x_k``."""
        point = np.asarray(x, dtype=np.float64)
        if self._D2f is None:
            return self.fd_hessian(t, point)
        return np.asarray(self._D2f(t, point), dtype=np.float64).reshape(self.n, self.n, self.n)

    def fd_jacobian(self, t: float, x: ArrayLike, step: float | None = None) -> Matrix:
        """Central finite-difference Jacobian of f."""
        h = step or self.fd_step
        point = np.asarray(x, dtype=np.float64)
        columns = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = h
            columns.append((self.value(t, point + e) - self.value(t, point - e)) / (2 * h))
        return np.stack(columns, axis=1)

    def fd_hessian(self, t: float, x: ArrayLike, step: float | None = None) -> Tensor:
        """Central finite differences of the Jacobian (symbolic or finite-difference)."""
        h = step or (self.fd_step if self._Df is not None else 1e-4)
        point = np.asarray(x, dtype=np.float64)
        out = np.empty((self.n, self.n, self.n))
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = h
            out[:, :, k] = (self.jacobian(t, point + e) - self.jacobian(t, point - e)) / (2 * h)
        return out


def estimate_lipschitz(p: Perturbation, domain: SampleDomain, samples: int | None = None) -> float:
    """Sampled Lipschitz constant γ of f on the domain.

    Takes the larger of the derivative-based estimate ``max ‖Df(t,x)‖₂`` and
    the pair-based estimate ``max |f(t,x) - f(t,x̄)| / |x - x̄|`` over
    consecutive sample pairs (both sampled at the first point's time). Sample
    sets are nested in ``samples``, so the estimate never decreases when more
    samples are drawn.

    Example:
        >>> p = Perturbation.from_expressions("0.25*x1", 1)
        >>> round(estimate_lipschitz(p, SampleDomain()), 12)
        0.25
    """
    count = domain.samples if samples is None else samples
    if count < 2:
        raise ValidationError("At least two samples are needed", context={"samples": count})
    block = domain.draw(p.n, count)

    derivative_based = 0.0
    for row in block:
        norm = float(np.linalg.norm(p.jacobian(row[0], row[1:]), 2))
        derivative_based = max(derivative_based, norm)

    pair_based = 0.0
    for first, second in zip(block[:-1], block[1:], strict=True):
        gap = float(np.linalg.norm(first[1:] - second[1:]))
        if gap == 0.0:
            continue
        change = float(np.linalg.norm(p.value(first[0], first[1:]) - p.value(first[0], second[1:])))
        pair_based = max(pair_based, change / gap)

    logger.debug(
        "lipschitz estimate over %d samples: derivative %.6g, pairs %.6g",
        count,
        derivative_based,
        pair_based,
    )
    return max(derivative_based, pair_based)


def estimate_mu(p: Perturbation, t_samples: Iterable[float]) -> float:
    """Max over ``t_samples`` of ``|f(t, 0)|``.

    Example:
        >>> p = Perturbation.from_expressions("0.2*(sqrt(1+x1^2)+cos(t))", 1)
        >>> estimate_mu(p, [0.0, 1.0])
        0.4
    """
    origin = np.zeros(p.n)
    values = [float(np.linalg.norm(p.value(float(t), origin))) for t in t_samples]
    if not values:
        raise ValidationError("t_samples must not be empty")
    return max(values)


def sup_in_time(p: Perturbation, x: ArrayLike, t_samples: Iterable[float]) -> float:
    """Max over ``t_samples`` of ``|f(t, x)|`` for one fixed state."""
    return max(float(np.linalg.norm(p.value(float(t), x))) for t in t_samples)
