"""Tests for the equivalence maps H and G."""

import math

import numpy as np
import pytest

from nonauto_equiv.dynamics import (
    ConjugacyTolerances,
    CoupledSystem,
    GallerySystem,
    Perturbation,
    ProbeStatus,
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
from nonauto_equiv.dynamics.conjugacy import (
    check_radii,
    estimate_constants,
    evaluate_map,
    unit_direction,
)
from nonauto_equiv.exceptions import NoConvergence, SmallnessViolation, ValidationError


class TestCoupledSystem:
    """Test construction and the smallness gate."""

    def test_constants(self) -> None:
        """Test derived quantities."""
        constants = SystemConstants(K=1.0, alpha=1.0, M=1.0, gamma=0.25, mu=0.0)

        assert constants.contraction == 0.25
        assert constants.smallness_margin == 0.75
        assert constants.satisfies_smallness
        assert constants.to_dict()["K_gamma_over_alpha"] == 0.25

    def test_gate(self, x1: GallerySystem) -> None:
        """Test Kγ ≥ α is rejected unless unsafe."""
        with pytest.raises(SmallnessViolation) as exc_info:
            CoupledSystem(x1.lin, x1.pert, x1.constants)

        assert exc_info.value.context["gamma"] == 2.0

    def test_boundary_is_rejected(self, g1: GallerySystem) -> None:
        """Test Kγ = α is outside the regime."""
        constants = SystemConstants(K=1.0, alpha=1.0, M=1.0, gamma=1.0, mu=0.0)

        with pytest.raises(SmallnessViolation):
            CoupledSystem(g1.lin, g1.pert, constants)

    def test_unsafe(self, x1_cs: CoupledSystem) -> None:
        """Test unsafe systems mark their results."""
        assert x1_cs.outside_theorem
        assert map_H(x1_cs, 0.5, [1.0]).outside_theorem

    def test_dimension_mismatch(self, g1: GallerySystem, g3: GallerySystem) -> None:
        """Test the linear part and the perturbation must agree."""
        with pytest.raises(ValidationError):
            CoupledSystem(g1.lin, g3.pert, g1.constants)

    def test_with_constants_gates_again(self, g1_cs: CoupledSystem) -> None:
        """Test replacing constants re-runs the gate."""
        with pytest.raises(SmallnessViolation):
            g1_cs.with_constants(SystemConstants(K=4.0, alpha=1.0, M=1.0, gamma=0.25, mu=0.0))

    def test_estimated_constants(self, g1: GallerySystem) -> None:
        """Test constants estimated from the flow."""
        constants = estimate_constants(g1.lin, g1.pert)

        assert constants.K == pytest.approx(1.0, abs=1e-6)
        assert constants.alpha == pytest.approx(1.0, abs=1e-6)
        assert constants.gamma == 0.25
        assert constants.source == "mixed"

    def test_tolerances(self) -> None:
        """Test tolerance validation."""
        with pytest.raises(ValidationError):
            ConjugacyTolerances(conj=0.0)
        with pytest.raises(ValidationError):
            ConjugacyTolerances(j_max=-1)


class TestSolutions:
    """Test the perturbed flow and the auxiliary functions."""

    def test_nonlinear_solution(self, g1: GallerySystem, g1_cs: CoupledSystem) -> None:
        """Test y(2, 0, 1) = e^{-1.5} for G1."""
        value = nonlinear_solution(g1_cs, 2.0, 0.0, [1.0])

        assert value[0] == pytest.approx(0.2231302, abs=1e-7)
        assert value == pytest.approx(g1.oracle("y", 2.0, 0.0, [1.0]), rel=1e-7)

    def test_same_time(self, g3_cs: CoupledSystem) -> None:
        """Test y(t, t, η) = η."""
        assert nonlinear_solution(g3_cs, 1.0, 1.0, [0.5, 0.25]).tolist() == [0.5, 0.25]

    def test_z_star(self, g1_cs: CoupledSystem) -> None:
        """Test z*(1; (1, 2)) = 2(e^{0.25} - 1)."""
        result = z_star_ivp(g1_cs, 1.0, [2.0])

        assert result.value[0] == pytest.approx(0.5680508, abs=1e-7)
        assert result.method == "ivp"
        assert result.steps > 0

    def test_w_star(self, g1_cs: CoupledSystem) -> None:
        """Test w*(t; (t, η)) = η(e^{-ct} - 1)."""
        value = w_star(g1_cs, 2.0, [3.0]).value[0]

        assert value == pytest.approx(3.0 * (math.exp(-0.5) - 1.0), rel=1e-7)

    def test_fixed_point(self, g2_cs: CoupledSystem) -> None:
        """Test z* satisfies its integral equation."""
        assert fixed_point_residual(g2_cs, 2.0, [1.5]) <= 1e-7
        assert fixed_point_residual(g2_cs, 0.0, [1.5]) == 0.0


class TestMaps:
    """Test H and G against closed forms."""

    @pytest.mark.parametrize("t", [0.0, 1.0, 2.5, 5.0])
    @pytest.mark.parametrize("xi", [-3.0, 0.0, 1.0, 2.5])
    def test_oracle_grid(
        self, g1: GallerySystem, g1_cs: CoupledSystem, t: float, xi: float
    ) -> None:
        """Test H and G of the scalar-linear system on a grid."""
        H = map_H(g1_cs, t, [xi]).value
        G = map_G(g1_cs, t, [xi]).value

        assert np.allclose(H, g1.oracle("H", t, [xi]), rtol=1e-6, atol=1e-8)
        assert np.allclose(G, g1.oracle("G", t, [xi]), rtol=1e-6, atol=1e-8)

    def test_known_value(self, g1_cs: CoupledSystem) -> None:
        """Test H(1, 2) = 2e^{0.25}."""
        assert map_H(g1_cs, 1.0, [2.0]).value[0] == pytest.approx(2.5680508, abs=1e-7)

    def test_identity_at_zero(self, g3_cs: CoupledSystem) -> None:
        """Test H(0, ξ) = G(0, ξ) = ξ."""
        point = [0.7, -1.2]

        assert map_H(g3_cs, 0.0, point).value.tolist() == point
        assert map_G(g3_cs, 0.0, point).value.tolist() == point

    def test_zero_perturbation(self, g3: GallerySystem) -> None:
        """Test f ≡ 0 makes both maps the identity."""
        constants = SystemConstants(K=1.0, alpha=1.0, M=math.sqrt(1.25), gamma=0.0, mu=0.0)
        cs = CoupledSystem(g3.lin, Perturbation.zero(2), constants)

        for t in (0.5, 2.0, 4.0):
            assert np.array_equal(map_H(cs, t, [1.0, -2.0]).value, [1.0, -2.0])
            assert np.array_equal(map_G(cs, t, [1.0, -2.0]).value, [1.0, -2.0])

    def test_variation_route(self, g2_cs: CoupledSystem) -> None:
        """Test the variation-of-constants form of G agrees with the augmented route."""
        direct = map_G(g2_cs, 3.0, [0.8]).value
        variation = map_G_variation(g2_cs, 3.0, [0.8])

        assert variation.method == "variation"
        assert variation.value == pytest.approx(direct, abs=1e-7)

    def test_picard_route(self, g2_cs: CoupledSystem) -> None:
        """Test the Picard route of H agrees with the augmented route."""
        picard = map_H(g2_cs, 1.5, [1.0], method="picard")

        assert picard.method == "picard"
        assert picard.iterations > 0
        assert picard.value == pytest.approx(map_H(g2_cs, 1.5, [1.0]).value, abs=1e-6)

    def test_evaluate_map(self, g1_cs: CoupledSystem) -> None:
        """Test selecting a map by name."""
        assert evaluate_map("G", g1_cs, 0.0, [2.0]).tolist() == [2.0]
        with pytest.raises(ValidationError):
            evaluate_map("K", g1_cs, 0.0, [2.0])  # type: ignore[arg-type]
        with pytest.raises(ValidationError):
            map_H(g1_cs, 1.0, [1.0, 2.0])


class TestPicard:
    """Test the Picard recursion."""

    def test_converges_to_ivp(self, g1_cs: CoupledSystem) -> None:
        """Test the recursion reaches the augmented-integration value."""
        run = z_star_picard(g1_cs, 1.0, [2.0])

        assert run.converged
        assert run.result.value[0] == pytest.approx(0.5680508, abs=1e-6)
        assert run.result.iterations == len(run.increments)

    @pytest.mark.parametrize("system", ["g1_cs", "g2_cs"])
    def test_ratios_below_contraction(self, system: str, request: pytest.FixtureRequest) -> None:
        """Test observed increment ratios stay below Kγ/α plus slack."""
        cs: CoupledSystem = request.getfixturevalue(system)
        run = z_star_picard(cs, 1.0, [1.0])

        assert run.ratios
        assert max(run.ratios) <= cs.constants.contraction + 0.05

    def test_quadrature_endpoints(self, g2_cs: CoupledSystem) -> None:
        """Test the integral form reproduces the iterate endpoints."""
        run = z_star_picard(g2_cs, 1.0, [0.5], quadrature=True)

        assert len(run.quadrature_endpoints) == len(run.endpoints)
        for integral, endpoint in zip(run.quadrature_endpoints, run.endpoints, strict=True):
            assert integral == pytest.approx(endpoint, abs=1e-6)

    def test_iterate_access(self, g1_cs: CoupledSystem) -> None:
        """Test the iterates and the linear part are exposed."""
        run = z_star_picard(g1_cs, 1.0, [2.0])

        assert run.x(1.0)[0] == pytest.approx(2.0)
        assert run.x(0.0)[0] == pytest.approx(2 * math.e, rel=1e-6)
        assert run.z(0, 0.0)[0] == 0.0
        assert run.sup_norm(len(run.iterates) - 1) == pytest.approx(0.5680508, abs=1e-6)

    def test_no_convergence(self, g2_cs: CoupledSystem) -> None:
        """Test strict runs raise at j_max and lax runs report it."""
        with pytest.raises(NoConvergence):
            z_star_picard(g2_cs, 2.0, [1.0], j_max=1, tol=1e-14)

        run = z_star_picard(g2_cs, 2.0, [1.0], j_max=1, tol=1e-14, strict=False)
        assert not run.converged
        assert len(run.endpoints) == 2


class TestCertificates:
    """Test the inverse and conjugacy certificates."""

    def test_inverse(self, g1_cs: CoupledSystem) -> None:
        """Test G(t, H(t, ξ)) = ξ for the scalar-linear system."""
        certificate = verify_inverse(g1_cs, 2.0, [[-1.0], [0.0], [2.0]])

        assert certificate.bound_id == "Inverse"
        assert certificate.passed
        assert certificate.samples == 6
        assert certificate.parameters["t"] == 2.0

    def test_inverse_planar(self, g3_cs: CoupledSystem) -> None:
        """Test the inverse relations of the planar system with two workers."""
        points = [[1.0, 0.0], [-0.5, 2.0]]

        assert verify_inverse(g3_cs, 1.5, points, workers=2).passed

    def test_conjugacy(self, g2_cs: CoupledSystem) -> None:
        """Test both solution relations hold along a time grid."""
        certificate = verify_conjugacy(g2_cs, 2.0, [1.0], [0.0, 1.0, 3.0, 5.0])

        assert certificate.bound_id == "Conjugacy"
        assert certificate.passed
        assert certificate.samples == 8
        assert certificate.parameters["tau"] == 2.0
        assert certificate.parameters["xi"] == [1.0]

    def test_failing_tolerance(self, g2_cs: CoupledSystem) -> None:
        """Test an impossible tolerance fails with a witness."""
        certificate = verify_inverse(g2_cs, 2.0, [[1.0]], tol=0.0)

        assert certificate.parameters["tolerance"] == 0.0
        assert "relation" in certificate.witness


class TestProbes:
    """Test the growth and continuity probes."""

    def test_growth(self, g1_cs: CoupledSystem) -> None:
        """Test magnitudes grow along a ray."""
        probe = growth_probe(g1_cs, 1.0, [3.0], [1.0, 10.0, 100.0])

        assert probe.direction.tolist() == [1.0]
        assert [row.radius for row in probe.rows] == [1.0, 10.0, 100.0]
        assert probe.rows[1].H == pytest.approx(10 * math.exp(0.25), rel=1e-6)
        assert set(probe.statuses.values()) == {ProbeStatus.PROBE_PASSED}

    def test_invalid_radii(self) -> None:
        """Test radii and direction validation."""
        with pytest.raises(ValidationError):
            check_radii([])
        with pytest.raises(ValidationError):
            check_radii([1.0, 1.0])
        with pytest.raises(ValidationError):
            check_radii([-1.0, 2.0])
        with pytest.raises(ValidationError):
            unit_direction([0.0, 0.0], 2)

    def test_continuity(self, g1_cs: CoupledSystem) -> None:
        """Test H is observed continuous with a Lipschitz-like slope."""
        probe = continuity_probe(g1_cs, (1.0, [2.0]), [1e-1, 1e-2, 1e-3])

        assert probe.monotone
        assert probe.slope == pytest.approx(1.0, abs=0.1)
        assert probe.C == pytest.approx(1.0)
        assert probe.rho > 0

    def test_continuity_of_G(self, g1_cs: CoupledSystem) -> None:
        """Test G is observed continuous, with ρ taken along the perturbed solution."""
        probe = continuity_probe(g1_cs, (1.0, [2.0]), [1e-1, 1e-2, 1e-3], which="G")

        assert probe.which == "G"
        assert probe.monotone
        assert probe.slope == pytest.approx(1.0, abs=0.1)
        assert probe.C == pytest.approx(1.0)
        # y(s, 1, 2) = 2 e^{0.75 (1 - s)} peaks at s = 0
        assert probe.rho == pytest.approx(0.5 * math.exp(0.75), rel=1e-4)

    def test_continuity_maps_differ(self, g1_cs: CoupledSystem) -> None:
        """Test the H and G differences follow their own closed forms."""
        h = continuity_probe(g1_cs, (1.0, [2.0]), [1e-2])
        g = continuity_probe(g1_cs, (1.0, [2.0]), [1e-2], which="G")
        shifted = 2.0 + 0.005

        assert h.which == "H"
        assert h.rows[0].difference == pytest.approx(
            abs(shifted * math.exp(0.25 * 1.005) - 2.0 * math.exp(0.25)), rel=1e-4
        )
        assert g.rows[0].difference == pytest.approx(
            abs(shifted * math.exp(-0.25 * 1.005) - 2.0 * math.exp(-0.25)), rel=1e-4
        )

    def test_continuity_unknown_map(self, g1_cs: CoupledSystem) -> None:
        """Test an unknown map name."""
        with pytest.raises(ValidationError):
            continuity_probe(g1_cs, (1.0, [2.0]), [0.1], which="K")  # type: ignore[arg-type]

    def test_continuity_near_horizon(self, g1_cs: CoupledSystem) -> None:
        """Test perturbations at the horizon move backward in time."""
        probe = continuity_probe(g1_cs, (5.0, [1.0]), [0.1])

        assert probe.rows[0].t == pytest.approx(4.95)

    def test_negative_delta(self, g1_cs: CoupledSystem) -> None:
        """Test negative perturbation sizes."""
        with pytest.raises(ValidationError):
            continuity_probe(g1_cs, (1.0, [2.0]), [-0.1])
