"""First and second derivatives of the equivalence maps.

Derivatives of ``G`` come from the variational equations of the perturbed
flow along ``s ↦ y(s, t, η)``:

    Y' = (A + Df)Y,                               Y(t) = I
    W_{i;jk}' = (A + Df)_{ia}W_{a;jk} + D²f_{a;bc}Y_{bj}Y_{ck},   W(t) = 0

integrated backward from ``s = t`` in one augmented pass with ``y`` itself.
Then ``DG(t, η) = Φ(t, 0)Y(0)`` and ``D²G(t, η) = Φ(t, 0)W(0)``. Derivatives of
``H`` follow from ``H(t, ·) = G(t, ·)⁻¹``:

    DH(t, ξ) = DG(t, H(t, ξ))⁻¹
    D²H_{i;jk} = -DH_{ia} D²G_{a;bc} DH_{bj} DH_{ck}   (D²G at the image point)

Tensors use the index convention ``(component; ∂_j, ∂_k)``.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad_vec

from ..exceptions import DerivativeMismatch, SingularJacobian, ValidationError
from .certificates import ProbeStatus, growth_status
from .conjugacy import (
    FD_OPTIONS,
    CoupledSystem,
    MapName,
    check_radii,
    evaluate_map,
    map_G,
    map_H,
    unit_direction,
)
from .ode import IntegratorOptions, IvpProblem, Trajectory, Vector, integrate_ivp

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Tensor = NDArray[np.float64]

DET_FLOOR = 1e-12
JACOBIAN_MISMATCH = 1e-5
HESSIAN_MISMATCH = 1e-3
JACOBIAN_FD_STEP = 1e-5
HESSIAN_FD_STEP = 1e-3
# Denominator floors of the relative finite-difference errors
_JACOBIAN_FLOOR = 1e-6
_HESSIAN_FLOOR = 1e-2


@dataclass(frozen=True)
class Variation:
    """Dense solution of the augmented variational system on ``[0, t]``.

    The state at ``s`` is ``(y, Y, W)`` flattened row-major; ``W`` is present
    for order 2 only.
    """

    t: float
    point: Vector
    order: int
    trajectory: Trajectory = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.point.shape[0])

    def y(self, s: float) -> Vector:
        return self.trajectory(s)[: self.n]

    def Y(self, s: float) -> Matrix:
        n = self.n
        return self.trajectory(s)[n : n + n * n].reshape(n, n)

    def W(self, s: float) -> Tensor:
        n = self.n
        if self.order < 2:
            raise ValidationError("Second variation not computed", context={"order": self.order})
        return self.trajectory(s)[n + n * n :].reshape(n, n, n)


def _variation(
    cs: CoupledSystem, t: float, eta: ArrayLike, order: int, opts: IntegratorOptions | None
) -> Variation:
    n = cs.n
    point = np.array(eta, dtype=np.float64).reshape(n)
    cs.lin.check_time(t)

    def augmented(r: float, u: Vector) -> Vector:
        y = u[:n]
        Y = u[n : n + n * n].reshape(n, n)
        J = cs.lin.matrix(r) + cs.pert.jacobian(r, y)
        parts = [cs.field(r, y), (J @ Y).reshape(-1)]
        if order == 2:
            W = u[n + n * n :].reshape(n, n, n)
            D2 = cs.pert.hessian(r, y)
            dW = np.einsum("ia,ajk->ijk", J, W) + np.einsum("ibc,bj,ck->ijk", D2, Y, Y)
            parts.append(dW.reshape(-1))
        return np.concatenate(parts)

    state0 = [point, np.eye(n).reshape(-1)]
    if order == 2:
        state0.append(np.zeros(n * n * n))
    traj = integrate_ivp(
        IvpProblem.build(augmented, t, np.concatenate(state0), 0.0), opts or cs.options
    )
    return Variation(float(t), point, order, traj)


def variational_first(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> Variation:
    """Integrate ``(y, Y)`` backward from ``(t, η, I)`` to ``s = 0``."""
    return _variation(cs, t, eta, 1, opts)


def variational_second(
    cs: CoupledSystem, t: float, eta: ArrayLike, opts: IntegratorOptions | None = None
) -> Variation:
    """Integrate ``(y, Y, W)`` backward from ``(t, η, I, 0)`` to ``s = 0``."""
    return _variation(cs, t, eta, 2, opts)


@dataclass(frozen=True)
class DerivativeBundle:
    """Derivatives of H or G at one point with their cross-checks.

    Attributes:
        map: ``"H"`` or ``"G"``
        order: 1 or 2
        jacobian: n×n matrix
        hessian: n×n×n tensor (order 2 only)
        cross_check: Diagnostics such as ``direct_error``, ``fd_error``,
            ``det``, ``condition``, ``identity_error``, ``symmetry_error``
        image: ``H(t, ξ)`` for derivatives of H
    """

    map: str
    t: float
    point: Vector
    order: int
    jacobian: Matrix
    hessian: Tensor | None = None
    cross_check: dict[str, float] = field(default_factory=dict)
    outside_theorem: bool = False
    image: Vector | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "map": self.map,
            "t": self.t,
            "point": self.point.tolist(),
            "order": self.order,
            "jacobian": self.jacobian.tolist(),
            "hessian": None if self.hessian is None else self.hessian.tolist(),
            "cross_check": dict(self.cross_check),
            "outside_theorem": self.outside_theorem,
            "image": None if self.image is None else self.image.tolist(),
        }


def _relative(analytic: NDArray[np.float64], approx: NDArray[np.float64], floor: float) -> float:
    return float(np.max(np.abs(analytic - approx))) / max(float(np.max(np.abs(analytic))), floor)


# Finite-difference oracles


def fd_jacobian(
    fn: Callable[[Vector], Vector], point: ArrayLike, step: float = JACOBIAN_FD_STEP
) -> Matrix:
    """Central-difference Jacobian of ``fn`` at ``point``."""
    base = np.array(point, dtype=np.float64).reshape(-1)
    columns = []
    for j in range(base.shape[0]):
        e = np.zeros_like(base)
        e[j] = step
        columns.append((fn(base + e) - fn(base - e)) / (2 * step))
    return np.stack(columns, axis=1)


def fd_hessian(
    fn: Callable[[Vector], Vector], point: ArrayLike, step: float = HESSIAN_FD_STEP
) -> Tensor:
    """Second central differences of ``fn`` at ``point``.

    Diagonal entries use the 5-point stencil, mixed entries the 4-point one.
    """
    base = np.array(point, dtype=np.float64).reshape(-1)
    n = base.shape[0]
    center = fn(base)
    out = np.empty((center.shape[0], n, n))

    def at(*shifts: tuple[int, float]) -> Vector:
        p = base.copy()
        for index, amount in shifts:
            p[index] += amount
        return fn(p)

    h = step
    for j in range(n):
        out[:, j, j] = (
            -at((j, 2 * h)) + 16 * at((j, h)) - 30 * center + 16 * at((j, -h)) - at((j, -2 * h))
        ) / (12 * h * h)
        for k in range(j + 1, n):
            mixed = (
                at((j, h), (k, h))
                - at((j, h), (k, -h))
                - at((j, -h), (k, h))
                + at((j, -h), (k, -h))
            ) / (4 * h * h)
            out[:, j, k] = mixed
            out[:, k, j] = mixed
    return out


def _map_fn(which: MapName, cs: CoupledSystem, t: float) -> Callable[[Vector], Vector]:
    def fn(point: Vector) -> Vector:
        return evaluate_map(which, cs, t, point, FD_OPTIONS)

    return fn


# Jacobians


def _direct_jacobian(cs: CoupledSystem, var: Variation) -> Matrix:
    """``I - ∫₀ᵗ Φ(t,s) Df(s, y(s)) Y(s) ds``."""
    n = cs.n
    t = var.t
    if t == 0:
        return np.eye(n)
    adjoint = cs.lin.adjoint_trajectory(t)

    def integrand(s: float) -> Matrix:
        phi = adjoint(s).reshape(n, n)
        return phi @ cs.pert.jacobian(s, var.y(s)) @ var.Y(s)

    nodes = var.trajectory.times
    points = nodes[1:-1] if len(nodes) > 2 else None
    integral, _ = quad_vec(integrand, 0.0, t, epsabs=1e-12, epsrel=1e-10, points=points)
    return np.eye(n) - np.asarray(integral, dtype=np.float64)


def jacobian_G(
    cs: CoupledSystem, t: float, eta: ArrayLike, validate: bool = True
) -> DerivativeBundle:
    """DG(t, η) = Φ(t, 0)·∂y(0, t, η)/∂η, cross-checked against the integral form.

    Args:
        validate: Also compare with central finite differences of ``map_G``

    Raises:
        DerivativeMismatch: The two formulas disagree beyond 1e-5
        SingularJacobian: ``det DG ≤ 1e-12``
    """
    var = variational_first(cs, t, eta)
    DG = cs.lin.transition_matrix(t, 0.0) @ var.Y(0.0)
    direct = _direct_jacobian(cs, var)
    direct_error = float(np.max(np.abs(DG - direct)))
    det = float(np.linalg.det(DG))
    checks = {
        "direct_error": direct_error,
        "det": det,
        "condition": float(np.linalg.cond(DG)),
    }
    if direct_error > JACOBIAN_MISMATCH:
        raise DerivativeMismatch(
            "Jacobian formulas disagree",
            context={"t": t, "eta": var.point.tolist(), "error": direct_error},
        )
    if det <= DET_FLOOR:
        raise SingularJacobian(
            "det DG is not positive", context={"t": t, "eta": var.point.tolist(), "det": det}
        )
    if validate:
        fd = fd_jacobian(_map_fn("G", cs, t), var.point)
        checks["fd_error"] = _relative(DG, fd, _JACOBIAN_FLOOR)
    return DerivativeBundle("G", float(t), var.point, 1, DG, None, checks, cs.outside_theorem)


def jacobian_H(
    cs: CoupledSystem, t: float, xi: ArrayLike, validate: bool = True
) -> DerivativeBundle:
    """DH(t, ξ) = DG(t, H(t, ξ))⁻¹.

    Raises:
        SingularJacobian: ``det DG ≤ 1e-12`` at the image point
    """
    point = np.array(xi, dtype=np.float64).reshape(cs.n)
    image = map_H(cs, t, point).value
    G_bundle = jacobian_G(cs, t, image, validate=False)
    DH = np.linalg.inv(G_bundle.jacobian)
    checks = {
        "det": 1.0 / G_bundle.cross_check["det"],
        "det_G_image": G_bundle.cross_check["det"],
        "condition": G_bundle.cross_check["condition"],
        "identity_error": float(np.max(np.abs(DH @ G_bundle.jacobian - np.eye(cs.n)))),
    }
    if validate:
        fd = fd_jacobian(_map_fn("H", cs, t), point)
        checks["fd_error"] = _relative(DH, fd, _JACOBIAN_FLOOR)
    return DerivativeBundle(
        "H", float(t), point, 1, DH, None, checks, cs.outside_theorem, image
    )


# Hessians


def _integral_hessian(cs: CoupledSystem, var: Variation) -> Tensor:
    """``-∫₀ᵗ Φ(t,s)[D²f·Y_j·Y_k + Df·W_jk] ds``."""
    n = cs.n
    t = var.t
    if t == 0:
        return np.zeros((n, n, n))
    adjoint = cs.lin.adjoint_trajectory(t)

    def integrand(s: float) -> Tensor:
        phi = adjoint(s).reshape(n, n)
        y, Y, W = var.y(s), var.Y(s), var.W(s)
        inner = np.einsum("abc,bj,ck->ajk", cs.pert.hessian(s, y), Y, Y) + np.einsum(
            "ab,bjk->ajk", cs.pert.jacobian(s, y), W
        )
        return np.einsum("ia,ajk->ijk", phi, inner)

    nodes = var.trajectory.times
    points = nodes[1:-1] if len(nodes) > 2 else None
    integral, _ = quad_vec(integrand, 0.0, t, epsabs=1e-12, epsrel=1e-10, points=points)
    return -np.asarray(integral, dtype=np.float64)


def _symmetry_error(tensor: Tensor) -> float:
    return float(np.max(np.abs(tensor - tensor.transpose(0, 2, 1))))


def hessian_G(
    cs: CoupledSystem, t: float, eta: ArrayLike, validate: bool = True
) -> DerivativeBundle:
    """D²G(t, η) = Φ(t, 0)·W(0), with the integral form recorded as a cross-check.

    Raises:
        DerivativeMismatch: Finite differences disagree beyond 1e-3 relative
    """
    var = variational_second(cs, t, eta)
    phi = cs.lin.transition_matrix(t, 0.0)
    DG = phi @ var.Y(0.0)
    D2G = np.einsum("ia,ajk->ijk", phi, var.W(0.0))
    checks = {
        "integral_error": float(np.max(np.abs(D2G - _integral_hessian(cs, var)))),
        "symmetry_error": _symmetry_error(D2G),
        "det": float(np.linalg.det(DG)),
    }
    if validate:
        fd = fd_hessian(_map_fn("G", cs, t), var.point)
        error = _relative(D2G, fd, _HESSIAN_FLOOR)
        checks["fd_error"] = error
        if error > HESSIAN_MISMATCH:
            raise DerivativeMismatch(
                "Second derivative of G disagrees with finite differences",
                context={"t": t, "eta": var.point.tolist(), "error": error},
            )
    return DerivativeBundle("G", float(t), var.point, 2, DG, D2G, checks, cs.outside_theorem)


def hessian_H(
    cs: CoupledSystem, t: float, xi: ArrayLike, validate: bool = True
) -> DerivativeBundle:
    """D²H(t, ξ) by contracting D²G at the image point with DH.

    Raises:
        SingularJacobian: DG is singular at the image point
        DerivativeMismatch: Finite differences disagree beyond 1e-3 relative
    """
    point = np.array(xi, dtype=np.float64).reshape(cs.n)
    first = jacobian_H(cs, t, point, validate=False)
    DH = first.jacobian
    assert first.image is not None
    D2G = hessian_G(cs, t, first.image, validate=False).hessian
    assert D2G is not None
    D2H = -np.einsum("ia,abc,bj,ck->ijk", DH, D2G, DH, DH)
    checks = {
        "symmetry_error": _symmetry_error(D2H),
        "identity_error": first.cross_check["identity_error"],
        "det": first.cross_check["det"],
    }
    if validate:
        fd = fd_hessian(_map_fn("H", cs, t), point)
        error = _relative(D2H, fd, _HESSIAN_FLOOR)
        checks["fd_error"] = error
        if error > HESSIAN_MISMATCH:
            raise DerivativeMismatch(
                "Second derivative of H disagrees with finite differences",
                context={"t": t, "xi": point.tolist(), "error": error},
            )
    return DerivativeBundle(
        "H", float(t), point, 2, DH, D2H, checks, cs.outside_theorem, first.image
    )


def derivatives_G(cs: CoupledSystem, t: float, eta: ArrayLike, order: int) -> DerivativeBundle:
    """Derivatives of G up to ``order``.

    Order r ≥ 3 would extend the augmented system by the r-th variational
    equation, obtained by differentiating the (r-1)-th one once more in η.

    Raises:
        NotImplementedError: For orders above 2
    """
    if order == 1:
        return jacobian_G(cs, t, eta)
    if order == 2:
        return hessian_G(cs, t, eta)
    if order < 1:
        raise ValidationError("Order must be at least 1", context={"order": order})
    raise NotImplementedError(
        f"Order {order} needs the order-{order} variational equation; only orders 1 and 2 exist"
    )


# Validation


@dataclass(frozen=True)
class FdRow:
    order: int
    step: float
    error: float


@dataclass(frozen=True)
class FdReport:
    """Error of central differences against the analytic derivatives, per step.

    Attributes:
        best_step: Step with the smallest error, per order
    """

    map: str
    t: float
    point: Vector
    rows: tuple[FdRow, ...]
    best_step: dict[int, float]


def fd_validate(
    which: MapName,
    cs: CoupledSystem,
    t: float,
    point: ArrayLike,
    orders: Sequence[int] = (1,),
    steps: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5),
) -> FdReport:
    """Error-versus-step table of finite differences of H or G.

    Raises:
        ValidationError: Steps not strictly decreasing, or an order outside {1, 2}
    """
    values = [float(h) for h in steps]
    if not values or any(h <= 0 for h in values):
        raise ValidationError("Steps must be positive", context={"steps": values})
    if any(b >= a for a, b in zip(values[:-1], values[1:], strict=True)):
        raise ValidationError("Steps must be strictly decreasing", context={"steps": values})
    if not orders or any(order not in (1, 2) for order in orders):
        raise ValidationError("Orders must be 1 or 2", context={"orders": list(orders)})
    if which not in ("H", "G"):
        raise ValidationError(f"Unknown map {which!r}", context={"map": which})

    base = np.array(point, dtype=np.float64).reshape(cs.n)
    fn = _map_fn(which, cs, t)
    rows = []
    best: dict[int, float] = {}
    for order in sorted(set(orders)):
        if order == 1:
            bundle = (jacobian_G if which == "G" else jacobian_H)(cs, t, base, validate=False)
            analytic: NDArray[np.float64] = bundle.jacobian
        else:
            bundle = (hessian_G if which == "G" else hessian_H)(cs, t, base, validate=False)
            assert bundle.hessian is not None
            analytic = bundle.hessian
        floor = _JACOBIAN_FLOOR if order == 1 else _HESSIAN_FLOOR
        errors = []
        for h in values:
            approx = fd_jacobian(fn, base, h) if order == 1 else fd_hessian(fn, base, h)
            error = _relative(analytic, approx, floor)
            rows.append(FdRow(order, h, error))
            errors.append(error)
        best[order] = values[int(np.argmin(errors))]
        logger.debug("fd %s order %d errors %s", which, order, errors)
    return FdReport(which, float(t), base, tuple(rows), best)


def chain_rule_residual(
    cs: CoupledSystem, t: float, xi: ArrayLike, step: float = JACOBIAN_FD_STEP
) -> float:
    """``max |D_ξ[G(t, H(t, ξ))] - I|`` by central differences."""

    def round_trip(point: Vector) -> Vector:
        return map_G(cs, t, map_H(cs, t, point, opts=FD_OPTIONS).value, FD_OPTIONS).value

    J = fd_jacobian(round_trip, xi, step)
    return float(np.max(np.abs(J - np.eye(cs.n))))


@dataclass(frozen=True)
class HadamardProbe:
    """Observable consequences of the global inverse argument for ``G(t, ·)``.

    Attributes:
        injectivity: Smallest ``|G(p) - G(q)| / |p - q|`` over distinct sample pairs,
            ``inf`` when no two samples differ
        growth: ``|G(t, r·u)|`` per radius
        min_det: Smallest ``det DG`` over the samples
        statuses: Verdict per property (``injective``, ``proper``, ``local_diffeo``)
    """

    t: float
    injectivity: float
    growth: tuple[float, ...]
    min_det: float
    statuses: dict[str, ProbeStatus]


def hadamard_probe(
    cs: CoupledSystem,
    t: float,
    points: Sequence[ArrayLike],
    direction: ArrayLike,
    radii: Sequence[float] = (1.0, 10.0, 100.0, 1000.0),
) -> HadamardProbe:
    """Probe injectivity, growth of ``|G|`` along a ray and ``det DG > 0``."""
    samples = [np.array(p, dtype=np.float64).reshape(cs.n) for p in points]
    if len(samples) < 2:
        raise ValidationError("Need at least two sample points", context={"points": len(samples)})
    u = unit_direction(direction, cs.n)
    values = check_radii(radii)

    images = [map_G(cs, t, p).value for p in samples]
    ratio = math.inf
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            gap = float(np.linalg.norm(samples[i] - samples[j]))
            if gap > 0:
                ratio = min(ratio, float(np.linalg.norm(images[i] - images[j])) / gap)
    growth = tuple(float(np.linalg.norm(map_G(cs, t, r * u).value)) for r in values)
    min_det = min(
        float(np.linalg.det(jacobian_G(cs, t, p, validate=False).jacobian)) for p in samples
    )
    if math.isinf(ratio):
        injective = ProbeStatus.PROBE_INCONCLUSIVE
    else:
        injective = ProbeStatus.CERTIFIED if ratio > 0 else ProbeStatus.VIOLATED
    statuses = {
        "injective": injective,
        "proper": growth_status(growth),
        "local_diffeo": ProbeStatus.CERTIFIED if min_det > DET_FLOOR else ProbeStatus.VIOLATED,
    }
    return HadamardProbe(float(t), ratio, growth, min_det, statuses)

