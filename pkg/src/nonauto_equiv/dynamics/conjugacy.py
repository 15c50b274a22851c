"""Construction and verification of the equivalence maps H and G.

For the linear system ``x' = A(t)x`` and its perturbation
``y' = A(t)y + f(t, y)`` the maps are

    H(t, ξ) = ξ + z*(t; (t, ξ)),    G(t, η) = η + w*(t; (t, η)),

where ``z*(·; (τ, ξ))`` solves ``z' = A(s)z + f(s, x(s, τ, ξ) + z)``,
``z(0) = 0`` and ``w*(·; (τ, η))`` solves ``w' = A(s)w - f(s, y(s, τ, η))``,
``w(0) = 0``. Both are obtained by one integration of an augmented system:
the solution through ``(τ, ξ)`` is first carried back to ``s = 0`` and then
integrated forward together with ``z`` (or ``w``).

The Picard recursion is kept as an independent route to ``z*``: iterate
``l`` solves ``z_l' = A(s)z_l + f(s, x(s) + z_{l-1}(s))``, ``z_l(0) = 0``
with ``z_{-1} = 0``, on a uniform fixed-step grid, and its endpoint can be
recomputed from the integral form by adaptive quadrature.

Everything is restricted to the truncation horizon ``[0, T]``.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad_vec

from ..exceptions import NoConvergence, SmallnessViolation, ValidationError
from ._batch import map_ordered
from .certificates import Certificate, ProbeStatus, growth_status, residual_certificate
from .linear import LinearSystem, estimate_dichotomy
from .ode import IntegratorOptions, IvpProblem, Trajectory, Vector, integrate_ivp
from .perturbation import Perturbation, SampleDomain, estimate_lipschitz, estimate_mu

logger = logging.getLogger(__name__)

MapName = Literal["H", "G"]
MapMethod = Literal["ivp", "picard"]

# Fixed-step options that make ξ ↦ H(t, ξ) and η ↦ G(t, η) smooth discrete maps
FD_OPTIONS = IntegratorOptions.fixed(2e-3)


@dataclass(frozen=True)
class ConjugacyTolerances:
    """Tolerances of the construction and its certificates.

    Attributes:
        conj: Bound on the conjugacy residuals
        inv: Bound on the inverse residuals
        picard: Stopping tolerance on the sup-norm Picard increment
        j_max: Maximum Picard iteration index
        picard_step: Upper bound on the fixed step of the Picard iterates
    """

    conj: float = 1e-5
    inv: float = 1e-6
    picard: float = 1e-8
    j_max: int = 60
    picard_step: float = 1e-2

    def __post_init__(self) -> None:
        if min(self.conj, self.inv, self.picard, self.picard_step) <= 0:
            raise ValidationError(
                "Tolerances must be strictly positive",
                context={"conj": self.conj, "inv": self.inv, "picard": self.picard},
            )
        if self.j_max < 0:
            raise ValidationError("j_max must be nonnegative", context={"j_max": self.j_max})


@dataclass(frozen=True)
class SystemConstants:
    """The constants K, α, M, γ, μ of a coupled system.

    Attributes:
        source: ``"declared"``, ``"estimated"`` or ``"mixed"``
    """

    K: float
    alpha: float
    M: float
    gamma: float
    mu: float
    source: str = "declared"

    @property
    def contraction(self) -> float:
        """Kγ/α."""
        return self.K * self.gamma / self.alpha

    @property
    def smallness_margin(self) -> float:
        """α - Kγ (positive inside the contraction regime)."""
        return self.alpha - self.K * self.gamma

    @property
    def satisfies_smallness(self) -> bool:
        """Strict comparison Kγ < α."""
        return self.K * self.gamma < self.alpha

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form."""
        return {
            "K": self.K,
            "alpha": self.alpha,
            "M": self.M,
            "gamma": self.gamma,
            "mu": self.mu,
            "source": self.source,
            "K_gamma_over_alpha": self.contraction,
            "smallness_margin": self.smallness_margin,
        }


def estimate_constants(
    lin: LinearSystem, pert: Perturbation, domain: SampleDomain | None = None
) -> SystemConstants:
    """Estimate K, α, M from the flow and γ, μ from f (declared γ, μ take precedence)."""
    domain = domain or SampleDomain(horizon=lin.horizon)
    dichotomy = estimate_dichotomy(lin)
    gamma = pert.gamma if pert.gamma is not None else estimate_lipschitz(pert, domain)
    mu = (
        pert.mu
        if pert.mu is not None
        else estimate_mu(pert, np.linspace(0.0, lin.horizon, 101))
    )
    declared = (pert.gamma is not None) + (pert.mu is not None)
    source = "estimated" if declared == 0 else "mixed"
    return SystemConstants(
        dichotomy.K_hat, dichotomy.alpha_hat, dichotomy.M_hat, gamma, mu, source
    )


class CoupledSystem:
    """The pair (linear system, perturbation) with its constants.

    Construction enforces the smallness condition ``Kγ < α``. With
    ``unsafe=True`` the gate is skipped and every result derived from the
    system is marked outside the theorem.
    """

    def __init__(
        self,
        lin: LinearSystem,
        pert: Perturbation,
        constants: SystemConstants,
        *,
        unsafe: bool = False,
        tolerances: ConjugacyTolerances | None = None,
    ):
        if lin.n != pert.n:
            raise ValidationError(
                "Linear system and perturbation dimensions differ",
                context={"linear": lin.n, "perturbation": pert.n},
            )
        if not constants.satisfies_smallness:
            if not unsafe:
                raise SmallnessViolation(
                    "K*gamma >= alpha: outside the contraction regime",
                    context={"K": constants.K, "gamma": constants.gamma, "alpha": constants.alpha},
                )
            logger.warning(
                "smallness gate overridden: K*gamma = %.6g >= alpha = %.6g",
                constants.K * constants.gamma,
                constants.alpha,
            )
        self.lin = lin
        self.pert = pert
        self.constants = constants
        self.unsafe = unsafe
        self.tolerances = tolerances or ConjugacyTolerances()

    @classmethod
    def from_estimates(
        cls,
        lin: LinearSystem,
        pert: Perturbation,
        *,
        unsafe: bool = False,
        tolerances: ConjugacyTolerances | None = None,
        domain: SampleDomain | None = None,
    ) -> "CoupledSystem":
        """Build with constants estimated from the system."""
        constants = estimate_constants(lin, pert, domain)
        return cls(lin, pert, constants, unsafe=unsafe, tolerances=tolerances)

    @property
    def n(self) -> int:
        return self.lin.n

    @property
    def horizon(self) -> float:
        return self.lin.horizon

    @property
    def options(self) -> IntegratorOptions:
        return self.lin.options

    @property
    def outside_theorem(self) -> bool:
        """True when the smallness condition fails."""
        return not self.constants.satisfies_smallness

    def field(self, t: float, y: Vector) -> Vector:
        """Right-hand side ``A(t)y + f(t, y)``."""
        return self.lin.matrix(t) @ y + self.pert.value(t, y)

    def with_tolerances(self, tolerances: ConjugacyTolerances) -> "CoupledSystem":
        """Same system with other tolerances."""
        return CoupledSystem(
            self.lin, self.pert, self.constants, unsafe=self.unsafe, tolerances=tolerances
        )

    def with_options(self, options: IntegratorOptions) -> "CoupledSystem":
        """Same system integrated with other options."""
        return CoupledSystem(
            self.lin.with_options(options),
            self.pert,
            self.constants,
            unsafe=self.unsafe,
            tolerances=self.tolerances,
        )

    def with_constants(self, constants: SystemConstants) -> "CoupledSystem":
        """Same system with other constants (the smallness gate applies again)."""
        return CoupledSystem(
            self.lin, self.pert, constants, unsafe=self.unsafe, tolerances=self.tolerances
        )


@dataclass(frozen=True)
class ConjugacyResult:
    """Value of H, G, z* or w* with solver diagnostics.

    Attributes:
        value: The computed vector
        method: ``"ivp"``, ``"picard"`` or ``"variation"``
        iterations: Picard iterations performed (0 for other methods)
        residual: Last sup-norm increment (Picard) or largest local error estimate (IVP)
        steps: Integrator steps used by the final integration
        outside_theorem: The system violates the smallness condition
    """

    value: Vector
    method: str
    iterations: int = 0
    residual: float = 0.0
    steps: int = 0
    outside_theorem: bool = False


def _vector(point: ArrayLike, n: int) -> Vector:
    vector = np.array(point, dtype=np.float64).reshape(-1)
    if vector.shape != (n,):
        raise ValidationError(
            f"Expected a point of dimension {n}", context={"shape": list(vector.shape)}
        )
    return vector


# Solutions


def nonlinear_trajectory(
    cs: CoupledSystem,
    t: float,
    eta: ArrayLike,
    s_end: float = 0.0,
    opts: IntegratorOptions | None = None,
) -> Trajectory:
    """Dense ``s ↦ y(s, t, η)`` between ``t`` and ``s_end``."""
    cs.lin.check_time(t, s_end)
    return integrate_ivp(
        IvpProblem.build(cs.field, t, _vector(eta, cs.n), s_end), opts or cs.options
    )


def nonlinear_solution(
    cs: CoupledSystem,
    s: float,
    t: float,
    eta: ArrayLike,
    opts: IntegratorOptions | None = None,
) -> Vector:
    """y(s, t, η): the perturbed solution through ``(t, η)`` evaluated at ``s``.

    Example:
        >>> from nonauto_equiv.dynamics.gallery import load_gallery
        >>> cs = load_gallery("G1").coupled()
        >>> round(float(nonlinear_solution(cs, 2.0, 0.0, [1.0])[0]), 6)
        0.22313
    """
    if s == t:
        cs.lin.check_time(t)
        return _vector(eta, cs.n)
    return nonlinear_trajectory(cs, t, eta, s, opts).final_state


def z_star_trajectory(
    cs: CoupledSystem, tau: float, xi: ArrayLike, opts: IntegratorOptions | None = None
) -> Trajectory:
    """Dense augmented solution ``s ↦ (x(s, τ, ξ), z*(s; (τ, ξ)))`` on ``[0, τ]``."""
    n = cs.n
    opts = opts or cs.options
    x0 = cs.lin.linear_trajectory(tau, _vector(xi, n), 0.0, opts).final_state

    def augmented(r: float, u: Vector) -> Vector:
        A = cs.lin.matrix(r)
        x, z = u[:n], u[n:]
        return np.concatenate([A @ x, A @ z + cs.pert.value(r, x + z)])

    start = np.concatenate([x0, np.zeros(n)])
    return integrate_ivp(IvpProblem.build(augmented, 0.0, start, tau), opts)


def z_star_ivp(
    cs: CoupledSystem, tau: float, xi: ArrayLike, opts: IntegratorOptions | None = None
) -> ConjugacyResult:
    """z*(τ; (τ, ξ)) by one augmented integration.

    Example:
        >>> from nonauto_equiv.dynamics.gallery import load_gallery
        >>> cs = load_gallery("G1").coupled()
        >>> round(float(z_star_ivp(cs, 1.0, [2.0]).value[0]), 6)
        0.568051
    """
    traj = z_star_trajectory(cs, tau, xi, opts)
    return ConjugacyResult(
        value=traj.final_state[cs.n :],
        method="ivp",
        residual=traj.stats.max_error,
        steps=traj.stats.steps,
        outside_theorem=cs.outside_theorem,
    )


def w_star_trajectory(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> Trajectory:
    """Dense augmented solution ``s ↦ (y(s, t, η), w*(s; (t, η)))`` on ``[0, t]``."""
    n = cs.n
    opts = opts or cs.options
    y0 = nonlinear_trajectory(cs, t, eta, 0.0, opts).final_state

    def augmented(r: float, u: Vector) -> Vector:
        A = cs.lin.matrix(r)
        y, w = u[:n], u[n:]
        fy = cs.pert.value(r, y)
        return np.concatenate([A @ y + fy, A @ w - fy])

    start = np.concatenate([y0, np.zeros(n)])
    return integrate_ivp(IvpProblem.build(augmented, 0.0, start, t), opts)


def w_star(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> ConjugacyResult:
    """w*(t; (t, η)) by one augmented integration."""
    traj = w_star_trajectory(cs, t, eta, opts)
    return ConjugacyResult(
        value=traj.final_state[cs.n :],
        method="ivp",
        residual=traj.stats.max_error,
        steps=traj.stats.steps,
        outside_theorem=cs.outside_theorem,
    )


def map_H(
    cs: CoupledSystem,
    t: float,
    xi: ArrayLike,
    method: MapMethod = "ivp",
    opts: IntegratorOptions | None = None,
) -> ConjugacyResult:
    """H(t, ξ) = ξ + z*(t; (t, ξ)).

    Args:
        method: ``"ivp"`` (one augmented integration) or ``"picard"`` (recursion)
    """
    point = _vector(xi, cs.n)
    if method == "ivp":
        inner = z_star_ivp(cs, t, point, opts)
    elif method == "picard":
        inner = z_star_picard(cs, t, point).result
    else:
        raise ValidationError(f"Unknown method {method!r}", context={"method": method})
    return ConjugacyResult(
        point + inner.value,
        inner.method,
        inner.iterations,
        inner.residual,
        inner.steps,
        inner.outside_theorem,
    )


def map_G(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> ConjugacyResult:
    """G(t, η) = η + w*(t; (t, η))."""
    point = _vector(eta, cs.n)
    inner = w_star(cs, t, point, opts)
    return ConjugacyResult(
        point + inner.value, "ivp", 0, inner.residual, inner.steps, inner.outside_theorem
    )


def map_G_variation(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> ConjugacyResult:
    """G(t, η) through the closed form ``Φ(t, 0) y(0, t, η)``.

    Variation of constants turns ``η - ∫₀ᵗ Φ(t,s) f(s, y(s,t,η)) ds`` into this
    product; it serves as a cross-check of the augmented route.
    """
    traj = nonlinear_trajectory(cs, t, eta, 0.0, opts)
    value = cs.lin.transition_matrix(t, 0.0) @ traj.final_state
    return ConjugacyResult(
        value, "variation", 0, traj.stats.max_error, traj.stats.steps, cs.outside_theorem
    )


def evaluate_map(
    which: MapName,
    cs: CoupledSystem,
    t: float,
    point: ArrayLike,
    opts: IntegratorOptions | None = None,
) -> Vector:
    """Value of H or G at ``(t, point)`` by the IVP route."""
    if which == "H":
        return map_H(cs, t, point, opts=opts).value
    if which == "G":
        return map_G(cs, t, point, opts).value
    raise ValidationError(f"Unknown map {which!r}", context={"map": which})


# Picard recursion


@dataclass(frozen=True)
class PicardRun:
    """Iterates of the Picard recursion for ``z*(·; (τ, ξ))``.

    Attributes:
        tau: Parameter time τ (iterates live on ``[0, τ]``)
        xi: Parameter point ξ
        iterates: Augmented fixed-step trajectories ``(x, z_j)`` for ``j = 0..J``
        endpoints: ``z_j(τ)`` from the iterate integrations
        quadrature_endpoints: ``z_j(τ)`` recomputed from the integral form (empty if skipped)
        increments: ``sup |z_j - z_{j-1}|`` over the grid, for ``j = 1..J``
        ratios: ``increments[j] / increments[j-1]``, for ``j = 2..J``
        converged: Whether the last increment is within tolerance
        result: The final endpoint as a ConjugacyResult
    """

    tau: float
    xi: Vector
    iterates: tuple[Trajectory, ...] = field(repr=False)
    endpoints: tuple[Vector, ...]
    quadrature_endpoints: tuple[Vector, ...]
    increments: tuple[float, ...]
    ratios: tuple[float, ...]
    converged: bool
    result: ConjugacyResult

    @property
    def n(self) -> int:
        return int(self.xi.shape[0])

    def z(self, j: int, s: float) -> Vector:
        """Iterate ``z_j(s)``."""
        return self.iterates[j](s)[self.n :]

    def x(self, s: float) -> Vector:
        """Linear solution ``x(s, τ, ξ)``."""
        return self.iterates[0](s)[: self.n]

    def sup_norm(self, j: int, with_x: bool = False) -> float:
        """Grid sup of ``|z_j|`` (or ``|x + z_j|``) over nodes and midpoints."""
        n = self.n

        def select(s: float, u: Vector) -> Vector:
            return u[:n] + u[n:] if with_x else u[n:]

        return self.iterates[j].sup_norm(select)


def _picard_quadrature(
    cs: CoupledSystem,
    adjoint: Trajectory,
    current: Trajectory,
    previous: Trajectory | None,
    tau: float,
    tol: float,
) -> Vector:
    n = cs.n

    def integrand(s: float) -> Vector:
        phi = adjoint(s).reshape(n, n)
        shift = previous(s)[n:] if previous is not None else 0.0
        return phi @ cs.pert.value(s, current(s)[:n] + shift)

    points = current.times[1:-1] if len(current.times) > 2 else None
    value, _ = quad_vec(integrand, 0.0, tau, epsabs=tol / 4, epsrel=1e-12, points=points)
    return np.asarray(value, dtype=np.float64)


def z_star_picard(
    cs: CoupledSystem,
    tau: float,
    xi: ArrayLike,
    j_max: int | None = None,
    tol: float | None = None,
    *,
    strict: bool = True,
    quadrature: bool = False,
) -> PicardRun:
    """z*(τ; (τ, ξ)) by the Picard recursion.

    Iterates are integrated with fixed-step RK4 on a uniform grid (step at
    most ``tolerances.picard_step``) and stop once the sup-norm increment is
    within ``tol``.

    Args:
        j_max: Maximum iteration index (default ``tolerances.j_max``)
        tol: Stopping tolerance (default ``tolerances.picard``)
        strict: Raise NoConvergence when ``j_max`` is reached first
        quadrature: Also recompute every endpoint from the integral form

    Raises:
        NoConvergence: The increment is above ``tol`` at ``j_max`` (strict only)
    """
    tolerances = cs.tolerances
    j_max = tolerances.j_max if j_max is None else j_max
    tol = tolerances.picard if tol is None else tol
    cs.lin.check_time(tau)
    n = cs.n
    point = _vector(xi, n)

    count = max(1, math.ceil(tau / tolerances.picard_step - 1e-9))
    opts = IntegratorOptions.fixed(tau / count if tau > 0 else tolerances.picard_step)
    x0 = cs.lin.linear_trajectory(tau, point, 0.0).final_state
    adjoint = cs.lin.adjoint_trajectory(tau) if quadrature else None

    iterates: list[Trajectory] = []
    endpoints: list[Vector] = []
    quadrature_endpoints: list[Vector] = []
    increments: list[float] = []
    ratios: list[float] = []
    previous: Trajectory | None = None
    converged = False

    for j in range(j_max + 1):

        def iterate_field(r: float, u: Vector, prev: Trajectory | None = previous) -> Vector:
            A = cs.lin.matrix(r)
            x, z = u[:n], u[n:]
            shift = prev(r)[n:] if prev is not None else 0.0
            return np.concatenate([A @ x, A @ z + cs.pert.value(r, x + shift)])

        current = integrate_ivp(
            IvpProblem.build(iterate_field, 0.0, np.concatenate([x0, np.zeros(n)]), tau), opts
        )
        iterates.append(current)
        endpoints.append(current.final_state[n:])
        if adjoint is not None and tau > 0:
            quadrature_endpoints.append(
                _picard_quadrature(cs, adjoint, current, previous, tau, tol)
            )
        elif adjoint is not None:
            quadrature_endpoints.append(np.zeros(n))

        if previous is not None:
            gaps = np.linalg.norm(current.states[:, n:] - previous.states[:, n:], axis=1)
            increment = float(gaps.max())
            if increments:
                ratios.append(increment / increments[-1] if increments[-1] > 0 else 0.0)
            increments.append(increment)
            logger.debug("picard j=%d increment %.3g", j, increment)
            if increment <= tol:
                converged = True
                break
        previous = current

    if not converged:
        if strict:
            raise NoConvergence(
                f"Picard increment above {tol!r} after {j_max} iterations",
                context={
                    "tau": tau,
                    "increment": increments[-1] if increments else None,
                    "j_max": j_max,
                },
            )
        logger.debug("picard stopped at j_max=%d without reaching %.3g", j_max, tol)

    result = ConjugacyResult(
        value=endpoints[-1],
        method="picard",
        iterations=len(endpoints) - 1,
        residual=increments[-1] if increments else 0.0,
        steps=iterates[-1].stats.steps,
        outside_theorem=cs.outside_theorem,
    )
    return PicardRun(
        tau=float(tau),
        xi=point,
        iterates=tuple(iterates),
        endpoints=tuple(endpoints),
        quadrature_endpoints=tuple(quadrature_endpoints),
        increments=tuple(increments),
        ratios=tuple(ratios),
        converged=converged,
        result=result,
    )


def fixed_point_residual(cs: CoupledSystem, tau: float, xi: ArrayLike) -> float:
    """``|z*(τ) - ∫₀^τ Φ(τ,s) f(s, x(s,τ,ξ) + z*(s)) ds|`` for the IVP solution z*."""
    n = cs.n
    traj = z_star_trajectory(cs, tau, xi)
    if tau == 0:
        return float(np.linalg.norm(traj.final_state[n:]))
    adjoint = cs.lin.adjoint_trajectory(tau)

    def integrand(s: float) -> Vector:
        state = traj(s)
        return adjoint(s).reshape(n, n) @ cs.pert.value(s, state[:n] + state[n:])

    points = traj.times[1:-1] if len(traj.times) > 2 else None
    integral, _ = quad_vec(integrand, 0.0, tau, epsabs=1e-12, epsrel=1e-12, points=points)
    return float(np.linalg.norm(traj.final_state[n:] - integral))


# Certificates and probes


def verify_conjugacy(
    cs: CoupledSystem,
    tau: float,
    xi: ArrayLike,
    t_grid: Iterable[float],
    tol: float | None = None,
    workers: int | None = None,
) -> Certificate:
    """Check both solution relations on ``t_grid``.

    The H-relation ``H(t, x(t,τ,ξ)) = y(t, τ, H(τ,ξ))`` and the G-relation
    ``G(t, y(t,τ,η)) = Φ(t,τ) G(τ,η)`` (with ``η = ξ``) are evaluated at
    every grid time; the certificate passes iff every residual is within
    ``tol`` (default ``tolerances.conj``).
    """
    tol = cs.tolerances.conj if tol is None else tol
    point = _vector(xi, cs.n)
    grid = [float(t) for t in t_grid]
    cs.lin.check_time(tau, *grid)
    H_tau = map_H(cs, tau, point).value
    G_tau = map_G(cs, tau, point).value

    def residuals(t: float) -> list[tuple[float, dict[str, Any]]]:
        x_t = cs.lin.linear_solution(t, tau, point)
        h_side = map_H(cs, t, x_t).value
        y_side = nonlinear_solution(cs, t, tau, H_tau)
        y_t = nonlinear_solution(cs, t, tau, point)
        g_side = map_G(cs, t, y_t).value
        phi_side = cs.lin.linear_solution(t, tau, G_tau)
        return [
            (float(np.linalg.norm(h_side - y_side)), {"relation": "H", "t": t}),
            (float(np.linalg.norm(g_side - phi_side)), {"relation": "G", "t": t}),
        ]

    samples = [item for chunk in map_ordered(residuals, grid, workers) for item in chunk]
    certificate = residual_certificate(
        "Conjugacy",
        "H[t, x(t,tau,xi)] = y(t,tau,H(tau,xi)) and G[t, y(t,tau,eta)] = Phi(t,tau)G(tau,eta)",
        samples,
        tol,
        horizon=cs.horizon,
        outside_theorem=cs.outside_theorem,
    )
    return _with_parameters(certificate, tau=tau, xi=point.tolist())


def verify_inverse(
    cs: CoupledSystem,
    t: float,
    points: Iterable[ArrayLike],
    tol: float | None = None,
    workers: int | None = None,
) -> Certificate:
    """Check ``G(t, H(t, ξ)) = ξ`` and ``H(t, G(t, η)) = η`` at every point."""
    tol = cs.tolerances.inv if tol is None else tol
    cs.lin.check_time(t)
    batch = [_vector(p, cs.n) for p in points]

    def residuals(point: Vector) -> list[tuple[float, dict[str, Any]]]:
        there = map_G(cs, t, map_H(cs, t, point).value).value
        back = map_H(cs, t, map_G(cs, t, point).value).value
        return [
            (float(np.linalg.norm(there - point)), {"relation": "G(H)", "point": point.tolist()}),
            (float(np.linalg.norm(back - point)), {"relation": "H(G)", "point": point.tolist()}),
        ]

    samples = [item for chunk in map_ordered(residuals, batch, workers) for item in chunk]
    certificate = residual_certificate(
        "Inverse",
        "G(t,H(t,xi)) = xi and H(t,G(t,eta)) = eta",
        samples,
        tol,
        horizon=cs.horizon,
        outside_theorem=cs.outside_theorem,
    )
    return _with_parameters(certificate, t=t)


def _with_parameters(certificate: Certificate, **parameters: Any) -> Certificate:
    return replace(certificate, parameters={**certificate.parameters, **parameters})


@dataclass(frozen=True)
class GrowthRow:
    """Magnitudes at one probe radius."""

    radius: float
    H: float
    G: float
    z_star: float


@dataclass(frozen=True)
class GrowthProbe:
    """Growth of H, G and z* along a ray ``r ↦ r·u``.

    Attributes:
        statuses: Verdict per quantity (``"H"``, ``"G"``, ``"z_star"``)
    """

    t: float
    direction: Vector
    rows: tuple[GrowthRow, ...]
    statuses: dict[str, ProbeStatus]


def unit_direction(direction: ArrayLike, n: int) -> Vector:
    """Normalise a direction vector."""
    vector = _vector(direction, n)
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValidationError("Direction must be nonzero")
    return vector / norm


def check_radii(radii: Sequence[float]) -> list[float]:
    """Validate a strictly increasing list of positive radii."""
    values = [float(r) for r in radii]
    if not values or any(r <= 0 for r in values):
        raise ValidationError("Radii must be positive and nonempty", context={"radii": values})
    if any(b <= a for a, b in zip(values[:-1], values[1:], strict=True)):
        raise ValidationError("Radii must be strictly increasing", context={"radii": values})
    return values


def growth_probe(
    cs: CoupledSystem,
    t: float,
    direction: ArrayLike,
    radii: Sequence[float],
    workers: int | None = None,
) -> GrowthProbe:
    """Probe ``|H(t, r·u)|``, ``|G(t, r·u)|`` and ``|z*(t; (t, r·u))|`` for growing r."""
    u = unit_direction(direction, cs.n)
    values = check_radii(radii)
    cs.lin.check_time(t)

    def row(radius: float) -> GrowthRow:
        point = radius * u
        z = z_star_ivp(cs, t, point).value
        return GrowthRow(
            radius,
            float(np.linalg.norm(point + z)),
            float(np.linalg.norm(map_G(cs, t, point).value)),
            float(np.linalg.norm(z)),
        )

    rows = tuple(map_ordered(row, values, workers))
    statuses = {
        "H": growth_status([r.H for r in rows]),
        "G": growth_status([r.G for r in rows]),
        "z_star": growth_status([r.z_star for r in rows]),
    }
    return GrowthProbe(float(t), u, rows, statuses)


@dataclass(frozen=True)
class ContinuityRow:
    """One joint perturbation of the base point."""

    delta: float
    t: float
    difference: float


@dataclass(frozen=True)
class ContinuityProbe:
    """Observed joint continuity of H or G at a base point.

    Attributes:
        which: The probed map
        rows: Differences ``|F(t, p) - F(t₀, p₀)|`` per perturbation size
        slope: Least-squares slope of ``log difference`` against ``log delta``
        modulus: Largest observed ``difference / delta``
        rho: ``sup |f(s, x(s,t₀,ξ₀) + z*(s; (t₀,ξ₀)))|`` over ``[0, t₀]`` for H, and
            ``sup |f(s, y(s,t₀,η₀))|`` for G
        C: ``max ‖Φ(u, s)‖`` over ``0 ≤ s ≤ u`` in the probed interval
    """

    which: MapName
    t0: float
    point0: Vector
    rows: tuple[ContinuityRow, ...]
    slope: float
    modulus: float
    rho: float
    C: float

    @property
    def monotone(self) -> bool:
        """Differences never increase as delta decreases."""
        ordered = sorted(self.rows, key=lambda r: -r.delta)
        pairs = zip(ordered[:-1], ordered[1:], strict=True)
        return all(b.difference <= a.difference for a, b in pairs)


def continuity_probe(
    cs: CoupledSystem,
    base: tuple[float, ArrayLike],
    deltas: Sequence[float],
    opts: IntegratorOptions | None = None,
    which: MapName = "H",
) -> ContinuityProbe:
    """Probe ``|F(t, p) - F(t₀, p₀)|`` for F = H or G as ``|t - t₀| + |p - p₀| = δ → 0``.

    Each δ is split evenly: ``t = t₀ + δ/2`` (or ``t₀ - δ/2`` near the horizon)
    and ``p = p₀ + (δ/2)·u`` with ``u`` the normalised all-ones direction.
    Values are computed with fixed-step integration so that nearby inputs are
    integrated on nearby grids.
    """
    opts = opts or FD_OPTIONS
    t0 = float(base[0])
    point0 = _vector(base[1], cs.n)
    cs.lin.check_time(t0)
    u = np.ones(cs.n) / math.sqrt(cs.n)
    value0 = evaluate_map(which, cs, t0, point0, opts)

    rows = []
    for delta in deltas:
        delta = float(delta)
        if delta < 0:
            raise ValidationError("Deltas must be nonnegative", context={"delta": delta})
        t = t0 + delta / 2 if t0 + delta / 2 <= cs.horizon else t0 - delta / 2
        if delta == 0.0:
            t = t0
        value = evaluate_map(which, cs, t, point0 + (delta / 2) * u, opts)
        rows.append(ContinuityRow(delta, t, float(np.linalg.norm(value - value0))))

    usable = [r for r in rows if r.delta > 0 and r.difference > 0]
    if len(usable) >= 2:
        log_delta = np.log([r.delta for r in usable])
        log_difference = np.log([r.difference for r in usable])
        slope = float(np.polyfit(log_delta, log_difference, 1)[0])
    else:
        slope = math.nan
    modulus = max((r.difference / r.delta for r in rows if r.delta > 0), default=0.0)

    n = cs.n
    if which == "H":
        traj = z_star_trajectory(cs, t0, point0)
        rho = traj.sup_norm(lambda s, state: cs.pert.value(s, state[:n] + state[n:]))
    elif t0 > 0.0:
        traj = nonlinear_trajectory(cs, t0, point0)
        rho = traj.sup_norm(cs.pert.value)
    else:
        rho = float(np.linalg.norm(cs.pert.value(0.0, point0)))

    t_max = max([t0, *(r.t for r in rows)])
    grid = np.linspace(0.0, t_max, 5)
    C = max(
        float(np.linalg.norm(cs.lin.transition_matrix(float(u_), float(s_)), 2))
        for u_ in grid
        for s_ in grid
        if s_ <= u_
    )
    return ContinuityProbe(which, t0, point0, tuple(rows), slope, modulus, rho, C)
