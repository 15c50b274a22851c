"""Task runners behind the command line.

Each runner takes a ``TaskContext`` (the parsed configuration with its
system already built) and returns a ``TaskOutcome``; ``execute`` wraps the
runner, turns errors into report statuses and assembles the ``Report``.
"""

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from datetime import UTC, datetime
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import __version__
from .dynamics import (
    AuditOptions,
    Certificate,
    ConjugacyTolerances,
    ConstantSheet,
    CoupledSystem,
    GallerySystem,
    LinearSystem,
    Perturbation,
    SampleDomain,
    SystemConstants,
    audit_hypotheses,
    check_auxiliary_functions,
    check_gronwall,
    check_zj_bounds,
    check_zj_continuity,
    hessian_G,
    hessian_H,
    jacobian_G,
    jacobian_H,
    load_gallery,
    map_G,
    map_H,
    modulus_check,
    picard_ratio_certificate,
    verify_conjugacy,
    verify_inverse,
    z_star_picard,
)
from .dynamics.bounds import default_point_pairs
from .dynamics.certificates import residual_certificate
from .dynamics.conjugacy import estimate_constants
from .dynamics.linear import default_pair_grid
from .exceptions import (
    EquivError,
    OracleUnavailable,
    ParseError,
    SmallnessViolation,
    UnknownGalleryId,
    ValidationError,
)
from .parsers.config import CONSTANT_NAMES, SWEEP_PARAMETERS, RunConfig, SystemSpec
from .renderers.report import Report, Table, plain, report_status

logger = logging.getLogger(__name__)

BOUND_GROUPS = ("gronwall", "iterates", "continuity", "modulus", "auxiliary", "picard")

JACOBIAN_TOLERANCE = 1e-5
HESSIAN_TOLERANCE = 1e-3

Points = list[NDArray[np.float64]]


@dataclass(frozen=True)
class SystemBundle:
    """The system a configuration describes.

    Attributes:
        declared: Constants declared by the gallery or the configuration, when complete
        overrides: Declared constants of an incomplete set, applied over estimates
    """

    lin: LinearSystem
    pert: Perturbation
    declared: SystemConstants | None = None
    overrides: dict[str, float] = field(default_factory=dict)
    gallery: GallerySystem | None = None


def build_system(spec: SystemSpec) -> SystemBundle:
    """Build the linear system and perturbation of a ``[system]`` section.

    Raises:
        UnknownGalleryId: Unknown gallery id
        ParseError: Malformed DSL string (with its position)
        ValidationError: Inconsistent dimensions
    """
    constants = dict(spec.constants)
    if spec.gallery is not None:
        gs = load_gallery(spec.gallery, spec.horizon)
        declared = replace(gs.constants, **constants) if constants else gs.constants
        pert = gs.pert
        if "gamma" in constants or "mu" in constants:
            pert = pert.with_constants(declared.gamma, declared.mu)
        return SystemBundle(gs.lin, pert, declared, {}, gs)

    assert spec.n is not None and spec.A is not None and spec.f is not None
    lin = LinearSystem.from_expressions([list(row) for row in spec.A], spec.n, spec.horizon)
    pert = Perturbation.from_expressions(
        list(spec.f), spec.n, gamma=constants.get("gamma"), mu=constants.get("mu")
    )
    if all(name in constants for name in CONSTANT_NAMES):
        return SystemBundle(lin, pert, SystemConstants(**constants))
    return SystemBundle(lin, pert, None, constants)


@dataclass(frozen=True)
class TaskContext:
    """A configuration with its system built."""

    config: RunConfig
    system: SystemBundle

    @classmethod
    def build(cls, config: RunConfig) -> "TaskContext":
        return cls(config, build_system(config.system))

    @property
    def params(self) -> dict[str, Any]:
        return self.config.task.params

    def number(self, key: str, default: float) -> float:
        return _number(self.params.get(key, default), key)

    def integer(self, key: str, default: int) -> int:
        return int(_number(self.params.get(key, default), key, int))

    @property
    def n(self) -> int:
        return self.system.lin.n

    @property
    def horizon(self) -> float:
        return self.system.lin.horizon

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def workers(self) -> int | None:
        return None if self.params.get("workers") is None else self.integer("workers", 0)

    @property
    def domain(self) -> SampleDomain:
        return SampleDomain(
            radius=self.number("radius", 5.0), horizon=self.horizon, seed=self.seed
        )

    @cached_property
    def tolerances(self) -> ConjugacyTolerances:
        base = ConjugacyTolerances()
        tol = self.config.tolerance
        return ConjugacyTolerances(
            conj=self.number("tol_conj", tol or base.conj),
            inv=self.number("tol_inv", tol or base.inv),
            picard=self.number("tol_picard", base.picard),
            j_max=self.integer("j_max", base.j_max),
            picard_step=self.number("picard_step", base.picard_step),
        )

    @cached_property
    def constants(self) -> SystemConstants:
        """Declared constants, or estimates with any declared values applied over them."""
        if self.system.declared is not None:
            return self.system.declared
        estimated = estimate_constants(self.system.lin, self.system.pert, self.domain)
        if not self.system.overrides:
            return estimated
        return replace(estimated, **self.system.overrides, source="mixed")

    def coupled(
        self,
        lin: LinearSystem | None = None,
        pert: Perturbation | None = None,
        constants: SystemConstants | None = None,
        unsafe: bool | None = None,
    ) -> CoupledSystem:
        """The coupled system; raises SmallnessViolation unless the run is unsafe."""
        return CoupledSystem(
            lin or self.system.lin,
            pert or self.system.pert,
            constants or self.constants,
            unsafe=self.config.unsafe if unsafe is None else unsafe,
            tolerances=self.tolerances,
        )


@dataclass
class TaskOutcome:
    """What a runner produced."""

    certificates: list[Certificate] = field(default_factory=list)
    sections: dict[str, Any] = field(default_factory=dict)
    tables: list[Table] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)
    constants: dict[str, Any] | None = None
    outside_theorem: bool = False


# Parameter helpers


def _number(value: Any, key: str, kind: Callable[[Any], float] = float) -> float:
    try:
        return kind(value)
    except (TypeError, ValueError) as e:
        raise ValidationError(
            f"Task parameter {key!r} must be numeric", context={"key": key, "value": value}
        ) from e


def _items(value: Any, key: str) -> list[Any]:
    if isinstance(value, str) or not isinstance(value, list | tuple):
        raise ValidationError(
            f"Task parameter {key!r} must be a list", context={"key": key, "value": value}
        )
    return list(value)


def _pairs(value: Any, key: str) -> list[tuple[Any, Any]]:
    pairs = _items(value, key)
    for pair in pairs:
        if not isinstance(pair, list | tuple) or len(pair) != 2:
            raise ValidationError(
                f"Task parameter {key!r} must hold pairs", context={"key": key, "value": pair}
            )
    return [(a, b) for a, b in pairs]


def _floats(value: Any, key: str) -> list[float]:
    if isinstance(value, int | float):
        return [float(value)]
    return [_number(v, key) for v in _items(value, key)]


def _point(value: Any, n: int, key: str) -> NDArray[np.float64]:
    point = np.array(_floats(value, key), dtype=np.float64)
    if point.shape != (n,):
        raise ValidationError(
            f"Expected a point of dimension {n}", context={"key": key, "point": list(point)}
        )
    return point


def _points(value: Any, n: int, key: str) -> Points:
    if isinstance(value, int | float) or (
        isinstance(value, list) and value and isinstance(value[0], int | float)
    ):
        return [_point(value, n, key)]
    return [_point(v, n, key) for v in _items(value, key)]


def _clip(times: Sequence[float], horizon: float) -> list[float]:
    return [t for t in times if 0.0 <= t <= horizon]


def default_t_grid(horizon: float, step: float = 0.25) -> list[float]:
    """``0, step, 2·step, ...`` up to the horizon."""
    count = int(math.floor(horizon / step + 1e-9))
    return [round(k * step, 12) for k in range(count + 1)]


def ball_points(n: int, count: int, radius: float, seed: int) -> Points:
    """Seeded points uniformly distributed in the ball of the given radius."""
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / n)
    return list(directions * radii[:, None])


def _axis_points(n: int) -> Points:
    points = []
    for scale in (-2.0, -1.0, 1.0, 2.0):
        for k in range(n):
            point = np.zeros(n)
            point[k] = scale
            points.append(point)
    return points


def _time(ctx: TaskContext, key: str, default: float) -> float:
    return ctx.number(key, min(default, ctx.horizon))


def _residual(cert: Certificate) -> float:
    """Largest residual recorded by a residual certificate."""
    return float(cert.witness.get("lhs", 0.0))


# Runners


def run_audit(ctx: TaskContext) -> TaskOutcome:
    """Audit every hypothesis; violated hypotheses fail the run."""
    params = ctx.params
    defaults = AuditOptions()
    opts = AuditOptions(
        domain=replace(ctx.domain, samples=ctx.integer("samples", ctx.domain.samples)),
        radii=tuple(_floats(params.get("radii", defaults.radii), "radii")),
        picard_depth=ctx.integer("picard_depth", defaults.picard_depth),
    )
    declared = ctx.system.declared
    audit = audit_hypotheses(ctx.system.lin, ctx.system.pert, opts, declared)
    constants = audit.estimated.to_dict()
    if declared is not None:
        constants = {**constants, "declared": declared.to_dict()}
    return TaskOutcome(
        sections={"audit": audit.to_dict()},
        failed=audit.violated,
        constants=constants,
        outside_theorem=not audit.estimated.satisfies_smallness,
    )


def _oracle_error(gs: GallerySystem | None, which: str, t: float, point: Any, value: Any) -> Any:
    if gs is None:
        return None
    try:
        expected = np.asarray(gs.oracle(which, t, point), dtype=np.float64)
    except OracleUnavailable:
        return None
    return float(np.linalg.norm(expected - value))


def run_map(ctx: TaskContext) -> TaskOutcome:
    """Evaluate H and G on points × times."""
    cs = ctx.coupled()
    points = _points(ctx.params.get("points", [[1.0] * ctx.n]), ctx.n, "points")
    times = _floats(ctx.params.get("times", _clip([0.0, 1.0, ctx.horizon], ctx.horizon)), "times")
    method = ctx.params.get("method", "ivp")
    table = Table(
        "map", ("map", "t", "point", "value", "residual", "steps", "oracle_error")
    )
    for t in times:
        for point in points:
            for which, result in (
                ("H", map_H(cs, t, point, method=method)),
                ("G", map_G(cs, t, point)),
            ):
                error = _oracle_error(ctx.system.gallery, which, t, point, result.value)
                table.add(which, t, point, result.value, result.residual, result.steps, error)
    logger.info("evaluated %d map values", len(table.rows))
    return TaskOutcome(
        tables=[table],
        constants=cs.constants.to_dict(),
        outside_theorem=cs.outside_theorem,
    )


def _verify_points(ctx: TaskContext) -> Points:
    if "points" in ctx.params:
        points = _points(ctx.params["points"], ctx.n, "points")
    else:
        points = _axis_points(ctx.n)
    count = ctx.integer("random_points", 20)
    radius = ctx.number("radius", 5.0)
    return points + ball_points(ctx.n, count, radius, ctx.seed)


def _verify(ctx: TaskContext, cs: CoupledSystem) -> list[Certificate]:
    horizon = cs.horizon
    taus = _clip(_floats(ctx.params.get("tau", [0.0, 1.0, 2.5]), "tau"), horizon)
    grid = _clip(_floats(ctx.params.get("t_grid", default_t_grid(horizon)), "t_grid"), horizon)
    xi = _point(ctx.params.get("xi", [1.0] * ctx.n), ctx.n, "xi")
    inverse_times = _clip(_floats(ctx.params.get("t", [1.0, horizon]), "t"), horizon)
    points = _verify_points(ctx)
    certificates = [verify_conjugacy(cs, tau, xi, grid, workers=ctx.workers) for tau in taus]
    certificates += [verify_inverse(cs, t, points, workers=ctx.workers) for t in inverse_times]
    return certificates


def run_verify(ctx: TaskContext) -> TaskOutcome:
    """Conjugacy relations on a time grid and inverse identities on points."""
    cs = ctx.coupled()
    certificates = _verify(ctx, cs)
    table = Table("verify", ("relation", "tau", "max_residual", "samples", "passed"))
    for cert in certificates:
        where = cert.parameters.get("tau", cert.parameters.get("t"))
        table.add(cert.bound_id, where, _residual(cert), cert.samples, cert.passed)
    return TaskOutcome(
        certificates=certificates,
        tables=[table],
        constants=cs.constants.to_dict(),
        outside_theorem=cs.outside_theorem,
    )


def _derivative_points(ctx: TaskContext) -> tuple[float, Points, list[str]]:
    t = _time(ctx, "t", 1.0)
    points = _points(ctx.params.get("points", [[0.5] * ctx.n, [-1.5] * ctx.n]), ctx.n, "points")
    maps = list(ctx.params.get("maps", ["G", "H"]))
    unknown = [m for m in maps if m not in ("G", "H")]
    if unknown:
        raise ValidationError("maps must be G or H", context={"maps": maps})
    return t, points, maps


def run_jacobian(ctx: TaskContext) -> TaskOutcome:
    """Jacobians of G and H with their direct, inverse and finite-difference checks."""
    cs = ctx.coupled()
    t, points, maps = _derivative_points(ctx)
    columns = ("map", "t", "point", "det", "condition", "direct_error", "identity_error")
    table = Table("jacobian", (*columns, "fd_error"))
    bundles = []
    fd: list[tuple[float, dict[str, Any]]] = []
    direct: list[tuple[float, dict[str, Any]]] = []
    for which in maps:
        for point in points:
            bundle = (jacobian_G if which == "G" else jacobian_H)(cs, t, point)
            checks = bundle.cross_check
            bundles.append(bundle.to_dict())
            table.add(
                which,
                t,
                point,
                checks["det"],
                checks["condition"],
                checks.get("direct_error"),
                checks.get("identity_error"),
                checks["fd_error"],
            )
            witness = {"map": which, "t": t, "point": point.tolist()}
            fd.append((checks["fd_error"], witness))
            if "direct_error" in checks:
                direct.append((checks["direct_error"], witness))
    certificates = [
        residual_certificate(
            "Jacobian-FD",
            "relative error of the Jacobian against central differences",
            fd,
            JACOBIAN_TOLERANCE,
            horizon=cs.horizon,
            outside_theorem=cs.outside_theorem,
        )
    ]
    if direct:
        certificates.append(
            residual_certificate(
                "Jacobian-direct",
                "variational Jacobian of G against its integral form",
                direct,
                JACOBIAN_TOLERANCE,
                horizon=cs.horizon,
                outside_theorem=cs.outside_theorem,
            )
        )
    return TaskOutcome(
        certificates=certificates,
        sections={"derivatives": bundles},
        tables=[table],
        constants=cs.constants.to_dict(),
        outside_theorem=cs.outside_theorem,
    )


def run_hessian(ctx: TaskContext) -> TaskOutcome:
    """Second derivatives of G and H against finite differences."""
    cs = ctx.coupled()
    t, points, maps = _derivative_points(ctx)
    table = Table(
        "hessian", ("map", "t", "point", "symmetry_error", "integral_error", "fd_error")
    )
    bundles = []
    fd: list[tuple[float, dict[str, Any]]] = []
    for which in maps:
        for point in points:
            bundle = (hessian_G if which == "G" else hessian_H)(cs, t, point)
            checks = bundle.cross_check
            bundles.append(bundle.to_dict())
            table.add(
                which,
                t,
                point,
                checks["symmetry_error"],
                checks.get("integral_error"),
                checks["fd_error"],
            )
            fd.append((checks["fd_error"], {"map": which, "t": t, "point": point.tolist()}))
    certificate = residual_certificate(
        "Hessian-FD",
        "relative error of the second derivative against central differences",
        fd,
        HESSIAN_TOLERANCE,
        horizon=cs.horizon,
        outside_theorem=cs.outside_theorem,
    )
    return TaskOutcome(
        certificates=[certificate],
        sections={"derivatives": bundles},
        tables=[table],
        constants=cs.constants.to_dict(),
        outside_theorem=cs.outside_theorem,
    )


def run_bounds(ctx: TaskContext) -> TaskOutcome:
    """Certify the Gronwall sandwiches, iterate bounds, moduli and auxiliary functions."""
    cs = ctx.coupled()
    params = ctx.params
    groups = list(params.get("certificates", BOUND_GROUPS))
    unknown = [g for g in groups if g not in BOUND_GROUPS]
    if unknown:
        raise ValidationError(
            "Unknown certificate group", context={"unknown": unknown, "known": list(BOUND_GROUPS)}
        )
    eps = ctx.number("epsilon", 0.1)
    tau = _time(ctx, "tau", 1.0)
    xi = _point(params.get("xi", [1.0] * ctx.n), ctx.n, "xi")
    xi_bar = _point(params.get("xi_bar", [1.1] * ctx.n), ctx.n, "xi_bar")
    grid = _clip(
        _floats(params.get("t_grid", [0.5, 1.0, 2.0, ctx.horizon]), "t_grid"), ctx.horizon
    )
    j_max = ctx.integer("j_max", 3)
    if "point_pairs" in params:
        point_pairs = [
            (_point(a, ctx.n, "point_pairs"), _point(b, ctx.n, "point_pairs"))
            for a, b in _pairs(params["point_pairs"], "point_pairs")
        ]
    else:
        point_pairs = default_point_pairs(ctx.n, count=2, seed=ctx.seed)
    if "pairs" in params:
        sample_pairs = [
            (_number(t, "pairs"), _number(s, "pairs")) for t, s in _pairs(params["pairs"], "pairs")
        ]
    else:
        sample_pairs = default_pair_grid(ctx.horizon, starts=3, separations=5)

    certificates: list[Certificate] = []
    omega = beta = 0.0
    if "gronwall" in groups:
        certificates += check_gronwall(cs, sample_pairs, point_pairs, workers=ctx.workers)
    if "iterates" in groups:
        certificates.append(check_zj_bounds(cs, tau, xi, j_max=j_max))
    if "continuity" in groups:
        cert = check_zj_continuity(cs, grid, xi, xi_bar, eps, j_max=j_max, workers=ctx.workers)
        omega = float(cert.parameters["omega"])
        certificates.append(cert)
    if "modulus" in groups:
        moduli = modulus_check(cs, grid, point_pairs, eps, workers=ctx.workers)
        beta = float(moduli[1].parameters["beta"])
        certificates += moduli
    sheet = ConstantSheet.from_system(cs, eps, omega=omega, beta=beta)
    if "auxiliary" in groups:
        certificates += check_auxiliary_functions(sheet)
    if "picard" in groups:
        run = z_star_picard(cs, tau, xi, strict=False)
        certificates.append(picard_ratio_certificate(cs, run))

    for cert in certificates:
        if not cert.passed:
            logger.warning(
                "certificate %s failed: worst margin %.3g", cert.bound_id, cert.worst_margin
            )
    return TaskOutcome(
        certificates=certificates,
        sections={"sheet": sheet.to_dict()},
        constants=cs.constants.to_dict(),
        outside_theorem=cs.outside_theorem,
    )


def _swept(
    ctx: TaskContext, parameter: str, value: float
) -> tuple[LinearSystem, Perturbation, SystemConstants]:
    lin, pert, constants = ctx.system.lin, ctx.system.pert, ctx.constants
    if not value > 0:
        raise ValidationError("Sweep values must be positive", context={"value": value})
    if parameter == "gamma-scale":
        pert = pert.scaled(value)
        constants = replace(constants, gamma=constants.gamma * value, mu=constants.mu * value)
    elif parameter == "A-scale":
        lin = lin.scaled(value)
        constants = replace(constants, alpha=constants.alpha * value, M=constants.M * value)
    elif parameter == "horizon":
        lin = lin.with_horizon(value)
    else:
        raise ValidationError(
            f"Unknown sweep parameter {parameter!r}",
            context={"parameter": parameter, "known": list(SWEEP_PARAMETERS)},
        )
    return lin, pert, constants


def run_sweep(ctx: TaskContext) -> TaskOutcome:
    """Run the verify pipeline once per value of a scaled parameter.

    Rows outside the contraction regime are computed anyway and flagged.
    """
    parameter = ctx.params.get("parameter", "gamma-scale")
    values = _floats(ctx.params["values"], "values")
    table = Table(
        "sweep",
        (
            "gamma",
            "K_gamma_over_alpha",
            "conj_residual",
            "inv_residual",
            "value",
            "outside_theorem",
        ),
    )
    certificates: list[Certificate] = []
    outside = False
    for value in values:
        lin, pert, constants = _swept(ctx, parameter, value)
        cs = ctx.coupled(lin, pert, constants, unsafe=True)
        if cs.outside_theorem:
            logger.warning("sweep value %g is outside the contraction regime", value)
        outside = outside or cs.outside_theorem
        row = _verify(ctx, cs)
        conj = max((_residual(c) for c in row if c.bound_id == "Conjugacy"), default=0.0)
        inv = max((_residual(c) for c in row if c.bound_id == "Inverse"), default=0.0)
        table.add(constants.gamma, constants.contraction, conj, inv, value, cs.outside_theorem)
        certificates += [
            replace(c, parameters={**c.parameters, "sweep": {parameter: value}}) for c in row
        ]
        logger.info("sweep %s=%g: conj %.3g inv %.3g", parameter, value, conj, inv)
    return TaskOutcome(
        certificates=certificates,
        tables=[table],
        sections={"sweep": {"parameter": parameter, "values": values}},
        constants=ctx.constants.to_dict(),
        outside_theorem=outside,
    )


RUNNERS: dict[str, Callable[[TaskContext], TaskOutcome]] = {
    "audit": run_audit,
    "map": run_map,
    "verify": run_verify,
    "jacobian": run_jacobian,
    "hessian": run_hessian,
    "bounds": run_bounds,
    "sweep": run_sweep,
}

USAGE_ERRORS = (ParseError, ValidationError, UnknownGalleryId, OracleUnavailable)


def error_record(error: EquivError) -> dict[str, Any]:
    """Plain-data form of an error for the report."""
    context = {}
    for key, value in error.context.items():
        try:
            context[key] = plain(value)
        except TypeError:
            context[key] = repr(value)
    return {"type": type(error).__name__, "message": error.message, "context": context}


def execute(config: RunConfig) -> Report:
    """Run the configured task and assemble its report.

    Usage and numerical errors do not propagate: they become the report's
    ``usage-error`` and ``numerical-error`` statuses. A smallness violation
    without ``unsafe`` fails the run with ``smallness`` as the failed id.
    """
    started = datetime.now(UTC)
    clock = time.perf_counter()
    report = Report(
        task=config.task.name, status="pass", version=__version__, config=config.to_dict()
    )
    logger.info("running task %s", config.task.name)
    try:
        outcome = RUNNERS[config.task.name](TaskContext.build(config))
    except SmallnessViolation as e:
        report.status = "fail"
        report.failed = ["smallness"]
        report.error = error_record(e)
    except USAGE_ERRORS as e:
        report.status = "usage-error"
        report.error = error_record(e)
    except EquivError as e:
        report.status = "numerical-error"
        report.error = error_record(e)
    else:
        report.certificates = [cert.to_dict() for cert in outcome.certificates]
        report.sections = outcome.sections
        report.tables = outcome.tables
        report.constants = outcome.constants
        failing = [cert.bound_id for cert in outcome.certificates if not cert.passed]
        report.failed = list(dict.fromkeys([*outcome.failed, *failing]))
        report.status = report_status(
            report.certificates, outcome.failed, outcome.outside_theorem
        )
    if report.error is not None:
        logger.error("%s: %s", report.error["type"], report.error["message"])
    report.timing = {
        "started": started.isoformat(),
        "elapsed_seconds": time.perf_counter() - clock,
    }
    logger.info("task %s finished with status %s", config.task.name, report.status)
    return report
