"""Audit of the standing hypotheses on a linear system and its perturbation.

Each hypothesis gets a record with a status and the evidence behind it:

* P1 uniform contraction of the linear flow, from ``estimate_dichotomy``
  (and, when K and α are declared, the declared envelope on the same grid).
* P2 Lipschitz bound γ and P3 the bound μ on ``|f(t, 0)|``; a declared value
  below its sampled estimate is a violation. P3 also checks that ``t ↦ f(t, x)``
  stays finite on the time grid for each sampled ``x``.
* P4 unbounded growth of ``|f(t, x)|`` as ``|x| → ∞``, probed on rays.
* P5 agreement of the supplied derivatives with finite differences.
* N growth of ``|x(s, t, ξ) + z_j(s)|`` along rays for the Picard iterates.
* smallness ``K·γ < α`` with the estimated constants, compared strictly.

Limit statements (P4, N) are never certified, only probed.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..exceptions import EquivError, EvalError, NotContractive, ValidationError
from .certificates import ProbeStatus, growth_status
from .conjugacy import ConjugacyTolerances, CoupledSystem, SystemConstants, z_star_picard
from .linear import DichotomyEstimate, LinearSystem, estimate_dichotomy
from .perturbation import Perturbation, SampleDomain, estimate_lipschitz, estimate_mu

logger = logging.getLogger(__name__)

HYPOTHESIS_IDS = ("P1", "P2", "P3", "P4", "P5", "N", "smallness")


@dataclass(frozen=True)
class AuditOptions:
    """Sampling configuration of the audit.

    Attributes:
        domain: State box and time interval for the estimators
        radii: Strictly increasing ray radii of the growth probes
        t_samples: Size of the uniform time grid on ``[0, T]``
        fd_points: Sample points of the derivative check
        fd_tolerance: Largest accepted relative derivative mismatch
        mismatch_warning: Relative gap between declared and estimated constants that is reported
        envelope_tolerance: Relative slack of the declared dichotomy envelope
        picard_depth: Largest iterate index of the N probe
        probe_time: Parameter time of the N probe (default ``min(1, T)``)
    """

    domain: SampleDomain = field(default_factory=SampleDomain)
    radii: tuple[float, ...] = (10.0, 100.0, 1000.0, 10000.0)
    t_samples: int = 101
    fd_points: int = 200
    fd_tolerance: float = 1e-6
    mismatch_warning: float = 0.1
    envelope_tolerance: float = 1e-7
    picard_depth: int = 3
    probe_time: float | None = None

    def __post_init__(self) -> None:
        if len(self.radii) < 2 or any(r <= 0 for r in self.radii):
            raise ValidationError("Need at least two positive radii", context={"radii": self.radii})
        if any(b <= a for a, b in zip(self.radii[:-1], self.radii[1:], strict=True)):
            raise ValidationError(
                "Radii must be strictly increasing", context={"radii": self.radii}
            )
        if self.t_samples < 2 or self.fd_points < 1 or self.picard_depth < 0:
            raise ValidationError(
                "Sample counts must be positive",
                context={"t_samples": self.t_samples, "fd_points": self.fd_points},
            )


@dataclass(frozen=True)
class HypothesisRecord:
    """Status of one hypothesis with its evidence."""

    id: str
    status: ProbeStatus
    evidence: dict[str, Any] = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "status": str(self.status),
            "message": self.message,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class AuditReport:
    """All hypothesis records of one audit.

    Attributes:
        records: One record per id of ``HYPOTHESIS_IDS``, in that order
        estimated: Constants estimated from the system
        declared: Constants declared by the caller, if any
    """

    records: tuple[HypothesisRecord, ...]
    estimated: SystemConstants
    declared: SystemConstants | None = None

    def record(self, hypothesis: str) -> HypothesisRecord:
        for rec in self.records:
            if rec.id == hypothesis:
                return rec
        raise KeyError(hypothesis)

    @property
    def passed(self) -> bool:
        """No hypothesis is violated (inconclusive probes do not fail the audit)."""
        return all(rec.status != ProbeStatus.VIOLATED for rec in self.records)

    @property
    def violated(self) -> list[str]:
        return [rec.id for rec in self.records if rec.status == ProbeStatus.VIOLATED]

    @property
    def smallness_margin(self) -> float:
        """α̂ - K̂γ̂ from the estimated constants."""
        return self.estimated.smallness_margin

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "smallness_margin": self.smallness_margin,
            "estimated": self.estimated.to_dict(),
            "declared": None if self.declared is None else self.declared.to_dict(),
            "hypotheses": [rec.to_dict() for rec in self.records],
        }


def _relative_gap(declared: float, estimated: float) -> float:
    scale = max(abs(declared), abs(estimated))
    return 0.0 if scale == 0.0 else abs(declared - estimated) / scale


def _compare_declared(
    name: str,
    declared: float | None,
    estimated: float,
    opts: AuditOptions,
    evidence: dict[str, Any],
) -> bool:
    """Record the declared value and warn on large gaps; True if declared < estimate."""
    if declared is None:
        return False
    evidence[f"{name}_declared"] = declared
    gap = _relative_gap(declared, estimated)
    if gap >= opts.mismatch_warning:
        evidence[f"{name}_mismatch"] = gap
        logger.warning(
            "declared %s = %.6g differs from the estimate %.6g by %.0f%%",
            name,
            declared,
            estimated,
            100 * gap,
        )
    return estimated > declared * (1 + 1e-9)


def _audit_p1(
    sys: LinearSystem, declared: SystemConstants | None, opts: AuditOptions
) -> tuple[HypothesisRecord, DichotomyEstimate | None]:
    try:
        estimate = estimate_dichotomy(sys)
    except NotContractive as e:
        return (
            HypothesisRecord(
                "P1", ProbeStatus.VIOLATED, dict(e.context), "flow is not contractive"
            ),
            None,
        )
    evidence: dict[str, Any] = {
        "K_hat": estimate.K_hat,
        "alpha_hat": estimate.alpha_hat,
        "M_hat": estimate.M_hat,
        "residual": estimate.residual,
    }
    if declared is None:
        return HypothesisRecord("P1", ProbeStatus.CERTIFIED, evidence), estimate

    _compare_declared("K", declared.K, estimate.K_hat, opts, evidence)
    _compare_declared("alpha", declared.alpha, estimate.alpha_hat, opts, evidence)
    # The declared envelope must hold on the same grid
    worst = math.inf
    witness: dict[str, Any] = {}
    for t, s in estimate.grid:
        norm = float(np.linalg.norm(sys.transition_matrix(t, s), 2))
        bound = declared.K * math.exp(-declared.alpha * (t - s))
        margin = bound * (1 + opts.envelope_tolerance) - norm
        if margin < worst:
            worst, witness = margin, {"t": t, "s": s, "norm": norm, "bound": bound}
    evidence["envelope_margin"] = worst
    if worst < 0:
        evidence["witness"] = witness
        return (
            HypothesisRecord("P1", ProbeStatus.VIOLATED, evidence, "declared envelope fails"),
            estimate,
        )
    return HypothesisRecord("P1", ProbeStatus.CERTIFIED, evidence), estimate


def _audit_p2(p: Perturbation, opts: AuditOptions) -> tuple[HypothesisRecord, float]:
    gamma_hat = estimate_lipschitz(p, opts.domain)
    evidence: dict[str, Any] = {"gamma_hat": gamma_hat}
    if _compare_declared("gamma", p.gamma, gamma_hat, opts, evidence):
        return (
            HypothesisRecord("P2", ProbeStatus.VIOLATED, evidence, "declared gamma below estimate"),
            gamma_hat,
        )
    return HypothesisRecord("P2", ProbeStatus.CERTIFIED, evidence), gamma_hat


def _audit_p3(
    p: Perturbation, times: np.ndarray, opts: AuditOptions
) -> tuple[HypothesisRecord, float]:
    mu_hat = estimate_mu(p, times)
    evidence: dict[str, Any] = {"mu_hat": mu_hat}
    below = _compare_declared("mu", p.mu, mu_hat, opts, evidence)

    # Bounded in t for each fixed x, checked on the time grid only
    worst = 0.0
    for row in opts.domain.draw(p.n, min(20, opts.domain.samples)):
        x = row[1:]
        try:
            sup = max(float(np.linalg.norm(p.value(float(t), x))) for t in times)
        except EvalError:
            sup = math.inf
        if not math.isfinite(sup):
            evidence["unbounded_at"] = x.tolist()
            record = HypothesisRecord("P3", ProbeStatus.VIOLATED, evidence, "f(., x) not finite")
            return record, mu_hat
        worst = max(worst, sup)
    evidence["sup_in_time"] = worst
    if below:
        return (
            HypothesisRecord("P3", ProbeStatus.VIOLATED, evidence, "declared mu below estimate"),
            mu_hat,
        )
    return HypothesisRecord("P3", ProbeStatus.CERTIFIED, evidence), mu_hat


def _rays(n: int) -> list[np.ndarray]:
    rays = []
    for k in range(n):
        for sign in (1.0, -1.0):
            u = np.zeros(n)
            u[k] = sign
            rays.append(u)
    return rays


def _combine(statuses: Sequence[ProbeStatus]) -> ProbeStatus:
    if ProbeStatus.VIOLATED in statuses:
        return ProbeStatus.VIOLATED
    if all(s == ProbeStatus.PROBE_PASSED for s in statuses):
        return ProbeStatus.PROBE_PASSED
    return ProbeStatus.PROBE_INCONCLUSIVE


def _audit_p4(p: Perturbation, times: np.ndarray, opts: AuditOptions) -> HypothesisRecord:
    statuses = []
    table = []
    for u in _rays(p.n):
        values = []
        for r in opts.radii:
            try:
                values.append(min(float(np.linalg.norm(p.value(float(t), r * u))) for t in times))
            except EvalError:
                values.append(math.inf)
        status = growth_status(values)
        statuses.append(status)
        table.append({"direction": u.tolist(), "values": values, "status": str(status)})
    status = _combine(statuses)
    if status != ProbeStatus.PROBE_PASSED:
        logger.warning("P4 growth probe %s", status)
    return HypothesisRecord("P4", status, {"radii": list(opts.radii), "rays": table})


def _relative_error(analytic: np.ndarray, approx: np.ndarray) -> float:
    # Mixed absolute/relative so that vanishing derivatives do not amplify roundoff
    return float(np.max(np.abs(analytic - approx))) / max(float(np.max(np.abs(analytic))), 1.0)


def _audit_p5(p: Perturbation, opts: AuditOptions) -> HypothesisRecord:
    block = opts.domain.draw(p.n, opts.fd_points)
    if not p.has_jacobian:
        worst = 0.0
        for row in block:
            coarse = p.fd_jacobian(row[0], row[1:], step=1e-4)
            fine = p.fd_jacobian(row[0], row[1:], step=1e-5)
            worst = max(worst, _relative_error(fine, coarse))
        status = ProbeStatus.PROBE_PASSED if worst <= 1e-4 else ProbeStatus.PROBE_INCONCLUSIVE
        return HypothesisRecord(
            "P5", status, {"fd_step_gap": worst}, "no derivatives supplied; finite differences only"
        )

    worst_first = worst_second = 0.0
    witness: list[float] = []
    for row in block:
        t, x = float(row[0]), row[1:]
        error = _relative_error(p.jacobian(t, x), p.fd_jacobian(t, x))
        if error > worst_first:
            worst_first, witness = error, row.tolist()
        if p.symbolic:
            worst_second = max(worst_second, _relative_error(p.hessian(t, x), p.fd_hessian(t, x)))
    evidence: dict[str, Any] = {"jacobian_error": worst_first, "witness": witness}
    if p.symbolic:
        evidence["hessian_error"] = worst_second
    if max(worst_first, worst_second) > opts.fd_tolerance:
        return HypothesisRecord(
            "P5", ProbeStatus.VIOLATED, evidence, "derivatives disagree with FD"
        )
    return HypothesisRecord("P5", ProbeStatus.CERTIFIED, evidence)


def _audit_n(
    sys: LinearSystem, p: Perturbation, constants: SystemConstants, opts: AuditOptions
) -> HypothesisRecord:
    cs = CoupledSystem(
        sys, p, constants, unsafe=True, tolerances=ConjugacyTolerances(j_max=opts.picard_depth)
    )
    tau = opts.probe_time if opts.probe_time is not None else min(1.0, sys.horizon)
    statuses = []
    table = []
    for u in _rays(p.n):
        by_depth: list[list[float]] = [[] for _ in range(opts.picard_depth + 1)]
        try:
            for r in opts.radii:
                run = z_star_picard(cs, tau, r * u, tol=0.0, strict=False)
                for j, traj in enumerate(run.iterates):
                    n = p.n
                    sums = traj.states[:, :n] + traj.states[:, n:]
                    by_depth[j].append(float(np.linalg.norm(sums, axis=1).min()))
        except EquivError as e:
            table.append({"direction": u.tolist(), "error": str(e)})
            statuses.append(ProbeStatus.PROBE_INCONCLUSIVE)
            continue
        for j, values in enumerate(by_depth):
            status = growth_status(values)
            statuses.append(status)
            table.append({"direction": u.tolist(), "j": j, "values": values, "status": str(status)})
    status = _combine(statuses)
    if status != ProbeStatus.PROBE_PASSED:
        logger.warning("N growth probe %s", status)
    return HypothesisRecord("N", status, {"tau": tau, "radii": list(opts.radii), "rays": table})


def audit_hypotheses(
    sys: LinearSystem,
    p: Perturbation,
    opts: AuditOptions | None = None,
    declared: SystemConstants | None = None,
) -> AuditReport:
    """Audit every standing hypothesis; findings are recorded, never raised.

    Args:
        sys: The linear part
        p: The perturbation (declared γ and μ are taken from it)
        opts: Sampling configuration
        declared: Declared K, α, M, when the caller has them

    Example:
        >>> from nonauto_equiv.dynamics.gallery import load_gallery
        >>> gs = load_gallery("X1")
        >>> audit_hypotheses(gs.lin, gs.pert).record("smallness").status
        <ProbeStatus.VIOLATED: 'violated'>
    """
    opts = opts or AuditOptions(domain=SampleDomain(horizon=sys.horizon))
    times = np.linspace(0.0, sys.horizon, opts.t_samples)

    p1, dichotomy = _audit_p1(sys, declared, opts)
    p2, gamma_hat = _audit_p2(p, opts)
    p3, mu_hat = _audit_p3(p, times, opts)
    p4 = _audit_p4(p, times, opts)
    p5 = _audit_p5(p, opts)

    if dichotomy is None:
        estimated = SystemConstants(math.inf, 0.0, math.nan, gamma_hat, mu_hat, "estimated")
        n_record = HypothesisRecord(
            "N", ProbeStatus.PROBE_INCONCLUSIVE, {}, "skipped: no dichotomy estimate"
        )
        smallness = HypothesisRecord(
            "smallness", ProbeStatus.VIOLATED, {"K_hat": None}, "no dichotomy estimate"
        )
    else:
        estimated = SystemConstants(
            dichotomy.K_hat, dichotomy.alpha_hat, dichotomy.M_hat, gamma_hat, mu_hat, "estimated"
        )
        n_record = _audit_n(sys, p, estimated, opts)
        evidence = {
            "K_hat": estimated.K,
            "gamma_hat": estimated.gamma,
            "alpha_hat": estimated.alpha,
            "K_gamma": estimated.K * estimated.gamma,
            "margin": estimated.smallness_margin,
        }
        if estimated.satisfies_smallness:
            smallness = HypothesisRecord("smallness", ProbeStatus.CERTIFIED, evidence)
        else:
            smallness = HypothesisRecord(
                "smallness", ProbeStatus.VIOLATED, evidence, "K*gamma >= alpha"
            )

    records = (p1, p2, p3, p4, p5, n_record, smallness)
    for rec in records:
        if rec.status == ProbeStatus.VIOLATED:
            logger.warning("hypothesis %s violated: %s", rec.id, rec.message)
    logger.info("audit finished: %s", ", ".join(f"{r.id}={r.status}" for r in records))
    return AuditReport(records, estimated, declared)
