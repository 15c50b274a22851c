"""Explicit constants of the existence proof and grid certificates of its inequalities.

Auxiliary functions (``d = M - α`` and ``e = M + γ - α``):

    θ₀(t) = Kγt                 if α = M      θ(t) = 1 + Kγt                 if e = 0
    θ₀(t) = Kγ(e^{dt} - 1)/d    otherwise     θ(t) = 1 + Kγ(e^{et} - 1)/e    otherwise

Critical times for a tolerance ε > 0:

    L*(ε) = (1/α) ln(2γωK/(αε)),   Θ₀* = θ₀(L*)
    L(ε)  = (1/α) ln(2γβK/(αε)),   θ*  = θ(L)

with the critical time set to 0 when the logarithm's argument is at most 1.
Both θ₀ and θ are nondecreasing, so their maxima over ``[0, L]`` sit at ``L``.

Certificate ids: ``Prop-2.3``, ``Cor-2.4``, ``Eq-400`` (solution sandwiches),
``Lemma-3.4`` (iterate bounds), ``Lemma-3.5`` (iterate continuity),
``Eq-300`` and ``Thm-3.6`` (modulus of G), ``Picard-ratio``, and the
auxiliary-function checks ``theta0-monotone``, ``theta-monotone``,
``Theta0star-endpoint``, ``thetastar-endpoint``.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import ValidationError
from ._batch import map_ordered
from .certificates import Certificate, CertificateBuilder
from .conjugacy import CoupledSystem, PicardRun, map_G, nonlinear_trajectory, z_star_picard
from .ode import IntegratorOptions, Vector
from .perturbation import SampleDomain

logger = logging.getLogger(__name__)

# Branch threshold for the degenerate exponents
BRANCH_TOLERANCE = 1e-9
RATIO_SLACK = 0.05

# Sandwich inequalities can be saturated (G1), so they are checked at tight tolerances
PRECISE_OPTIONS = IntegratorOptions(abs_tol=1e-12, rel_tol=1e-12, max_steps=1_000_000)

Pair = tuple[Vector, Vector]


def eval_theta0(t: float, K: float, gamma: float, alpha: float, M: float) -> float:
    """θ₀(t).

    Raises:
        ValidationError: If ``α > M`` (the rate cannot exceed the bound on A)

    Example:
        >>> eval_theta0(2.0, 1.0, 0.25, 1.0, 1.0)
        0.5
    """
    d = M - alpha
    if d < -BRANCH_TOLERANCE:
        raise ValidationError("alpha must not exceed M", context={"alpha": alpha, "M": M})
    if abs(d) <= BRANCH_TOLERANCE:
        return K * gamma * t
    return K * gamma * math.expm1(d * t) / d


def eval_theta(t: float, K: float, gamma: float, alpha: float, M: float) -> float:
    """θ(t).

    Example:
        >>> round(eval_theta(2.0, 1.0, 0.25, 1.0, 1.0), 7)
        1.6487213
    """
    e = M + gamma - alpha
    if abs(e) <= BRANCH_TOLERANCE:
        return 1.0 + K * gamma * t
    return 1.0 + K * gamma * math.expm1(e * t) / e


def critical_time(eps: float, K: float, gamma: float, alpha: float, scale: float) -> float:
    """``(1/α) ln(2γ·scale·K/(αε))``, or 0 when the argument is at most 1."""
    if not eps > 0:
        raise ValidationError("epsilon must be positive", context={"epsilon": eps})
    argument = 2 * gamma * scale * K / (alpha * eps)
    if argument <= 1:
        return 0.0
    return math.log(argument) / alpha


def critical_times(
    eps: float,
    K: float,
    gamma: float,
    alpha: float,
    M: float,
    omega_or_beta: float,
    kind: str = "theta",
) -> tuple[float, float]:
    """Critical time and the maximum of θ (``kind="theta"``) or θ₀ (``"theta0"``) up to it.

    Example:
        >>> L, theta_star = critical_times(0.1, 1.0, 0.25, 1.0, 1.0, 2.0)
        >>> round(L, 7), round(theta_star, 7)
        (2.3025851, 1.7782794)
    """
    time = critical_time(eps, K, gamma, alpha, omega_or_beta)
    if kind == "theta":
        return time, eval_theta(time, K, gamma, alpha, M)
    if kind == "theta0":
        return time, eval_theta0(time, K, gamma, alpha, M)
    raise ValidationError(f"Unknown auxiliary function {kind!r}", context={"kind": kind})


def delta_floor(eps: float, Theta0star: float, contraction: float) -> float:
    """Second term ``ε(1 - Kγ/α)/(2Θ₀*)`` of the δ recursion."""
    if Theta0star == 0:
        return math.inf
    return eps * (1 - contraction) / (2 * Theta0star)


def delta_recursion(eps: float, j: int, Theta0star: float, contraction: float) -> float:
    """δ_j(ε) with ``δ₀(ε) = ε/(2Θ₀*)``.

    ``δ_{j+1}(ε) = min(δ_j(ε/2), ε(1-c)/(2Θ₀*))`` with ``c = Kγ/α``.

    Example:
        >>> delta_recursion(0.1, 1, 0.5, 0.25)
        0.05
    """
    if contraction >= 1:
        raise ValidationError(
            "The recursion needs K*gamma/alpha < 1", context={"contraction": contraction}
        )
    if j < 0:
        raise ValidationError("j must be nonnegative", context={"j": j})
    if j == 0:
        return math.inf if Theta0star == 0 else eps / (2 * Theta0star)
    return min(
        delta_recursion(eps / 2, j - 1, Theta0star, contraction),
        delta_floor(eps, Theta0star, contraction),
    )


@dataclass(frozen=True)
class ConstantSheet:
    """Constants of the proof for one system and tolerance ε.

    ``omega`` and ``beta`` are the trajectory sup norms entering L* and L.
    """

    K: float
    alpha: float
    M: float
    gamma: float
    mu: float
    epsilon: float
    omega: float
    beta: float

    @classmethod
    def from_system(
        cls, cs: CoupledSystem, epsilon: float, omega: float = 0.0, beta: float = 0.0
    ) -> "ConstantSheet":
        c = cs.constants
        return cls(c.K, c.alpha, c.M, c.gamma, c.mu, epsilon, omega, beta)

    @property
    def contraction(self) -> float:
        return self.K * self.gamma / self.alpha

    def theta0(self, t: float) -> float:
        return eval_theta0(t, self.K, self.gamma, self.alpha, self.M)

    def theta(self, t: float) -> float:
        return eval_theta(t, self.K, self.gamma, self.alpha, self.M)

    @property
    def Lstar(self) -> float:
        return critical_time(self.epsilon, self.K, self.gamma, self.alpha, self.omega)

    @property
    def L(self) -> float:
        return critical_time(self.epsilon, self.K, self.gamma, self.alpha, self.beta)

    @property
    def Theta0star(self) -> float:
        return self.theta0(self.Lstar)

    @property
    def thetastar(self) -> float:
        return self.theta(self.L)

    def delta(self, j: int) -> float:
        return delta_recursion(self.epsilon, j, self.Theta0star, self.contraction)

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "alpha": self.alpha,
            "M": self.M,
            "gamma": self.gamma,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "omega": self.omega,
            "beta": self.beta,
            "Lstar": self.Lstar,
            "Theta0star": self.Theta0star,
            "L": self.L,
            "thetastar": self.thetastar,
        }


def _precise(cs: CoupledSystem) -> CoupledSystem:
    return cs.with_options(PRECISE_OPTIONS)


def default_point_pairs(n: int, count: int = 4, radius: float = 2.0, seed: int = 0) -> list[Pair]:
    """Seeded pairs of distinct points in ``[-radius, radius]^n``, plus one coincident pair."""
    block = SampleDomain(radius=radius, samples=max(2, 2 * count), seed=seed).draw(n)[:, 1:]
    pairs = [(block[2 * i], block[2 * i + 1]) for i in range(count)]
    pairs.append((block[0], block[0].copy()))
    return pairs


def _pairs(point_pairs: Iterable[tuple[ArrayLike, ArrayLike]] | None, n: int) -> list[Pair]:
    if point_pairs is None:
        return default_point_pairs(n)
    return [
        (np.asarray(a, dtype=np.float64).reshape(n), np.asarray(b, dtype=np.float64).reshape(n))
        for a, b in point_pairs
    ]


def _builder(
    cs: CoupledSystem, bound_id: str, description: str, **parameters: Any
) -> CertificateBuilder:
    return CertificateBuilder(
        bound_id,
        description,
        horizon=cs.horizon,
        outside_theorem=cs.outside_theorem,
        parameters=parameters,
    )


def check_gronwall(
    cs: CoupledSystem,
    sample_pairs: Iterable[tuple[float, float]],
    point_pairs: Iterable[tuple[ArrayLike, ArrayLike]] | None = None,
    workers: int | None = None,
) -> list[Certificate]:
    """Certify the three solution sandwiches on ``(t, s)`` pairs with ``t ≥ s``.

    * ``Prop-2.3``: ``(1/K)|Δ|e^{(Kγ-α)(t-s)} ≤ |y(t,s,η) - y(t,s,η̄)|``
      and ``|y(t,s,η) - y(t,s,η̄)| ≤ K|Δ|e^{(α-Kγ)(t-s)}``
      (forward solutions from ``(s, η)``).
    * ``Cor-2.4``: ``e^{-M|t-s|}|Δ| ≤ |x(t,s,ξ) - x(t,s,ξ̄)| ≤ e^{M|t-s|}|Δ|``,
      both time orders.
    * ``Eq-400``: ``|y(s,t,η) - y(s,t,η̄)| ≤ |Δ|e^{(M+γ)(t-s)}``
      (backward solutions from ``(t, η)``).

    Raises:
        ValidationError: A pair has ``t < s``
    """
    precise = _precise(cs)
    c = cs.constants
    times = [(float(t), float(s)) for t, s in sample_pairs]
    for t, s in times:
        if t < s:
            raise ValidationError("Sandwich pairs need t >= s", context={"t": t, "s": s})
    cs.lin.check_time(*(v for pair in times for v in pair))
    points = _pairs(point_pairs, cs.n)

    def evaluate(pair: tuple[float, float]) -> list[tuple[str, float, float, dict[str, Any]]]:
        t, s = pair
        out = []
        for eta, eta_bar in points:
            gap = float(np.linalg.norm(eta - eta_bar))
            witness = {"t": t, "s": s, "eta": eta.tolist(), "eta_bar": eta_bar.tolist()}
            sep = t - s

            forward = _solution(precise, t, s, eta) - _solution(precise, t, s, eta_bar)
            d = float(np.linalg.norm(forward))
            rate = c.alpha - c.K * c.gamma
            out.append(("Prop-2.3", gap * math.exp(-rate * sep) / c.K, d, witness))
            out.append(("Prop-2.3", d, c.K * gap * math.exp(rate * sep), witness))

            for a, b in ((t, s), (s, t)):
                diff = precise.lin.linear_solution(a, b, eta) - precise.lin.linear_solution(
                    a, b, eta_bar
                )
                dx = float(np.linalg.norm(diff))
                w = {**witness, "order": [a, b]}
                out.append(("Cor-2.4", gap * math.exp(-c.M * abs(a - b)), dx, w))
                out.append(("Cor-2.4", dx, gap * math.exp(c.M * abs(a - b)), w))

            backward = _solution(precise, s, t, eta) - _solution(precise, s, t, eta_bar)
            growth = gap * math.exp((c.M + c.gamma) * sep)
            out.append(("Eq-400", float(np.linalg.norm(backward)), growth, witness))
        return out

    builders = {
        "Prop-2.3": _builder(
            cs,
            "Prop-2.3",
            "Lipschitz sandwich of the perturbed flow, t >= s",
            K=c.K,
            alpha=c.alpha,
            gamma=c.gamma,
        ),
        "Cor-2.4": _builder(cs, "Cor-2.4", "exp(+-M|t-s|) sandwich of the linear flow", M=c.M),
        "Eq-400": _builder(
            cs, "Eq-400", "Gronwall bound of the backward perturbed flow", M=c.M, gamma=c.gamma
        ),
    }
    for chunk in map_ordered(evaluate, times, workers):
        for bound_id, lhs, rhs, witness in chunk:
            builders[bound_id].add(lhs, rhs, **witness)
    return [builders[key].build() for key in ("Prop-2.3", "Cor-2.4", "Eq-400")]


def _solution(cs: CoupledSystem, s: float, t: float, eta: Vector) -> Vector:
    if s == t:
        return eta.copy()
    return nonlinear_trajectory(cs, t, eta, s).final_state


def _x_sup(run: PicardRun) -> float:
    n = run.n
    return run.iterates[0].sup_norm(lambda s, u: u[:n])


def check_zj_bounds(cs: CoupledSystem, tau: float, xi: ArrayLike, j_max: int = 5) -> Certificate:
    """Certify the iterate bounds for ``j = 0..j_max`` on ``[0, τ]``.

    ``|z₀(s)| ≤ (K/α)(γ|x|∞ + μ)`` and ``|z_j(s)| ≤ (K/α)(γ|x + z_{j-1}|∞ + μ)``.
    """
    c = cs.constants
    run = z_star_picard(_precise(cs), tau, xi, j_max=j_max, tol=0.0, strict=False)
    builder = _builder(cs, "Lemma-3.4", "sup bounds of the Picard iterates", tau=tau, j_max=j_max)
    factor = c.K / c.alpha
    previous = _x_sup(run)
    per_j = []
    for j in range(len(run.iterates)):
        lhs = run.sup_norm(j)
        rhs = factor * (c.gamma * previous + c.mu)
        builder.add(lhs, rhs, j=j)
        per_j.append(rhs - lhs)
        previous = run.sup_norm(j, with_x=True)
    builder.parameters["margins"] = per_j
    return builder.build()


def check_zj_continuity(
    cs: CoupledSystem,
    t_grid: Sequence[float],
    xi: ArrayLike,
    xi_bar: ArrayLike,
    eps: float,
    j_max: int = 3,
    workers: int | None = None,
) -> Certificate:
    """Certify the uniform-continuity estimates of the iterates in ``ξ``.

    With ``Δ_j(t) = z_j(t; (t, ξ)) - z_j(t; (t, ξ̄))``:

    * ``|Δ₀(t)| ≤ Θ₀*|ξ - ξ̄|``
    * ``|Δ_{j+1}(t)| ≤ Θ₀*|ξ - ξ̄| + (Kγ/α) D_j``

    plus ε/2 when ``t > L*``. ``D_j`` is the largest gap between the iterates
    ``s ↦ z_j(s; (t, ξ))`` and ``s ↦ z_j(s; (t, ξ̄))`` over all grid times, and
    ``ω`` is the largest sup of ``|x + z_j|`` (including ``|x|``) over ``j`` and
    the grid, summed over ξ and ξ̄.
    """
    c = cs.constants
    precise = _precise(cs)
    n = cs.n
    a = np.asarray(xi, dtype=np.float64).reshape(n)
    b = np.asarray(xi_bar, dtype=np.float64).reshape(n)
    gap = float(np.linalg.norm(a - b))
    grid = [float(t) for t in t_grid]
    cs.lin.check_time(*grid)

    def runs(t: float) -> tuple[PicardRun, PicardRun]:
        return (
            z_star_picard(precise, t, a, j_max=j_max, tol=0.0, strict=False),
            z_star_picard(precise, t, b, j_max=j_max, tol=0.0, strict=False),
        )

    pairs = map_ordered(runs, grid, workers)

    def omega_of(run: PicardRun) -> float:
        return max([_x_sup(run), *(run.sup_norm(j, with_x=True) for j in range(len(run.iterates)))])

    omega = max(omega_of(ra) for ra, _ in pairs) + max(omega_of(rb) for _, rb in pairs)
    sheet = ConstantSheet.from_system(cs, eps, omega=omega)
    Lstar, Theta0star = sheet.Lstar, sheet.Theta0star

    depth = min(len(ra.iterates) for ra, _ in pairs)
    D = [
        max(
            float(
                np.max(
                    np.linalg.norm(
                        ra.iterates[j].states[:, n:] - rb.iterates[j].states[:, n:], axis=1
                    )
                )
            )
            for ra, rb in pairs
        )
        for j in range(depth)
    ]

    builder = _builder(
        cs,
        "Lemma-3.5",
        "uniform continuity of the Picard iterates in xi",
        epsilon=eps,
        omega=omega,
        Lstar=Lstar,
        Theta0star=Theta0star,
        sup_gaps=D,
    )
    for t, (ra, rb) in zip(grid, pairs, strict=True):
        extra = eps / 2 if t > Lstar else 0.0
        for j in range(depth):
            lhs = float(np.linalg.norm(ra.endpoints[j] - rb.endpoints[j]))
            rhs = Theta0star * gap + extra
            if j > 0:
                rhs += sheet.contraction * D[j - 1]
            builder.add(lhs, rhs, t=t, j=j)
    return builder.build()


def modulus_check(
    cs: CoupledSystem,
    t_grid: Sequence[float],
    pairs: Iterable[tuple[ArrayLike, ArrayLike]],
    eps: float,
    workers: int | None = None,
) -> list[Certificate]:
    """Certify the moduli of ``η ↦ G(t, η)``.

    * ``Eq-300``: ``|G(t,η) - G(t,η̄)| ≤ θ(t)|η - η̄|``
    * ``Thm-3.6``: ``|G(t,η) - G(t,η̄)| ≤ θ*|η - η̄|``, plus ε/2 for ``t > L(ε)``

    β is the largest ``sup_{s ≤ t}|y(s,t,η)| + sup_{s ≤ t}|y(s,t,η̄)|`` over the grid.
    """
    precise = _precise(cs)
    points = _pairs(pairs, cs.n)
    grid = [float(t) for t in t_grid]
    cs.lin.check_time(*grid)

    def evaluate(t: float) -> list[tuple[float, float, float, Pair]]:
        rows = []
        for eta, eta_bar in points:
            image = map_G(precise, t, eta).value
            lhs = float(np.linalg.norm(image - map_G(precise, t, eta_bar).value))
            beta = (
                nonlinear_trajectory(precise, t, eta, 0.0).sup_norm()
                + nonlinear_trajectory(precise, t, eta_bar, 0.0).sup_norm()
            )
            rows.append((lhs, float(np.linalg.norm(eta - eta_bar)), beta, (eta, eta_bar)))
        return rows

    results = map_ordered(evaluate, grid, workers)
    beta = max((row[2] for rows in results for row in rows), default=0.0)
    sheet = ConstantSheet.from_system(cs, eps, beta=beta)
    L, thetastar = sheet.L, sheet.thetastar

    eq300 = _builder(cs, "Eq-300", "|G(t,eta)-G(t,eta_bar)| <= theta(t)|eta-eta_bar|")
    thm = _builder(
        cs,
        "Thm-3.6",
        "|G(t,eta)-G(t,eta_bar)| <= thetastar|eta-eta_bar| (+ eps/2 for t > L)",
        epsilon=eps,
        beta=beta,
        L=L,
        thetastar=thetastar,
    )
    for t, rows in zip(grid, results, strict=True):
        for lhs, gap, _, (eta, eta_bar) in rows:
            witness = {"t": t, "eta": eta.tolist(), "eta_bar": eta_bar.tolist()}
            eq300.add(lhs, sheet.theta(t) * gap, **witness)
            thm.add(lhs, thetastar * gap + (eps / 2 if t > L else 0.0), **witness)
    return [eq300.build(), thm.build()]


def check_auxiliary_functions(sheet: ConstantSheet, samples: int = 201) -> list[Certificate]:
    """Monotonicity of θ₀ and θ on ``[0, T_max]`` and the right-endpoint maxima."""
    span = max(sheet.Lstar, sheet.L, 1.0)
    grid = np.linspace(0.0, span, samples)
    certificates = []
    for name, fn in (("theta0", sheet.theta0), ("theta", sheet.theta)):
        builder = CertificateBuilder(f"{name}-monotone", f"{name} nondecreasing on a grid")
        values = [fn(float(t)) for t in grid]
        for t, (lo, hi) in zip(grid[1:], zip(values[:-1], values[1:], strict=True), strict=True):
            builder.add(lo, hi, t=float(t))
        certificates.append(builder.build())

    for name, fn, end, value in (
        ("Theta0star", sheet.theta0, sheet.Lstar, sheet.Theta0star),
        ("thetastar", sheet.theta, sheet.L, sheet.thetastar),
    ):
        builder = CertificateBuilder(
            f"{name}-endpoint", f"{name} equals the grid maximum on [0, critical time]"
        )
        best = max(fn(float(t)) for t in np.linspace(0.0, end, samples))
        builder.add(best, value, critical_time=end)
        builder.add(value, best, critical_time=end)
        certificates.append(builder.build())
    return certificates


def picard_ratio_certificate(cs: CoupledSystem, run: PicardRun) -> Certificate:
    """Increment ratios of a Picard run against ``Kγ/α + 0.05``."""
    bound = cs.constants.contraction + RATIO_SLACK
    builder = _builder(
        cs, "Picard-ratio", "Picard increment ratios bounded by the contraction", bound=bound
    )
    for k, ratio in enumerate(run.ratios):
        builder.add(ratio, bound, j=k + 2)
    return builder.build()
