"""Numerical core: integration, linear flow, perturbation, equivalence maps and certificates."""

from .audit import AuditOptions, AuditReport, HypothesisRecord, audit_hypotheses
from .bounds import (
    ConstantSheet,
    check_auxiliary_functions,
    check_gronwall,
    check_zj_bounds,
    check_zj_continuity,
    critical_times,
    delta_recursion,
    eval_theta,
    eval_theta0,
    modulus_check,
    picard_ratio_certificate,
)
from .certificates import Certificate, CertificateBuilder, ProbeStatus
from .conjugacy import (
    ConjugacyResult,
    ConjugacyTolerances,
    CoupledSystem,
    SystemConstants,
    continuity_probe,
    fixed_point_residual,
    growth_probe,
    map_G,
    map_G_variation,
    map_H,
    nonlinear_solution,
    verify_conjugacy,
    verify_inverse,
    w_star,
    z_star_ivp,
    z_star_picard,
)
from .gallery import GALLERY_IDS, GallerySystem, load_gallery, oracle_eval
from .linear import (
    DichotomyEstimate,
    LinearSystem,
    cocycle_check,
    estimate_bound_M,
    estimate_dichotomy,
    linear_solution,
    transition_matrix,
)
from .ode import IntegratorOptions, IvpProblem, Trajectory, eval_trajectory, integrate_ivp
from .perturbation import Perturbation, SampleDomain, estimate_lipschitz, estimate_mu
from .smoothness import (
    DerivativeBundle,
    chain_rule_residual,
    derivatives_G,
    fd_validate,
    hadamard_probe,
    hessian_G,
    hessian_H,
    jacobian_G,
    jacobian_H,
    variational_first,
    variational_second,
)

__all__ = [
    # Integration
    "IntegratorOptions",
    "IvpProblem",
    "Trajectory",
    "integrate_ivp",
    "eval_trajectory",
    # Linear flow
    "LinearSystem",
    "DichotomyEstimate",
    "transition_matrix",
    "cocycle_check",
    "linear_solution",
    "estimate_bound_M",
    "estimate_dichotomy",
    # Perturbation and audit
    "Perturbation",
    "SampleDomain",
    "estimate_lipschitz",
    "estimate_mu",
    "AuditOptions",
    "AuditReport",
    "HypothesisRecord",
    "audit_hypotheses",
    # Equivalence maps
    "ConjugacyResult",
    "ConjugacyTolerances",
    "CoupledSystem",
    "SystemConstants",
    "nonlinear_solution",
    "z_star_ivp",
    "z_star_picard",
    "map_H",
    "w_star",
    "map_G",
    "map_G_variation",
    "fixed_point_residual",
    "verify_conjugacy",
    "verify_inverse",
    "growth_probe",
    "continuity_probe",
    # Smoothness
    "DerivativeBundle",
    "variational_first",
    "variational_second",
    "jacobian_G",
    "jacobian_H",
    "hessian_G",
    "hessian_H",
    "derivatives_G",
    "fd_validate",
    "chain_rule_residual",
    "hadamard_probe",
    # Bounds
    "Certificate",
    "CertificateBuilder",
    "ProbeStatus",
    "ConstantSheet",
    "eval_theta0",
    "eval_theta",
    "critical_times",
    "delta_recursion",
    "check_gronwall",
    "check_zj_bounds",
    "check_zj_continuity",
    "modulus_check",
    "check_auxiliary_functions",
    "picard_ratio_certificate",
    # Gallery
    "GALLERY_IDS",
    "GallerySystem",
    "load_gallery",
    "oracle_eval",
]
