"""Tests for the derivatives of the equivalence maps."""

import math

import numpy as np
import pytest

from nonauto_equiv.dynamics import (
    CoupledSystem,
    ProbeStatus,
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
from nonauto_equiv.dynamics.smoothness import fd_hessian, fd_jacobian
from nonauto_equiv.exceptions import ValidationError


class TestVariationalEquations:
    """Test the augmented variational system."""

    def test_first_variation(self, g1_cs: CoupledSystem) -> None:
        """Test ∂y(0, t, η)/∂η = e^{(1-c)t} for the scalar-linear system."""
        var = variational_first(g1_cs, 1.0, [2.0])

        assert var.Y(0.0)[0, 0] == pytest.approx(math.exp(0.75), rel=1e-8)
        assert var.y(1.0).tolist() == [2.0]
        with pytest.raises(ValidationError):
            var.W(0.0)

    def test_second_variation_of_linear_map(self, g1_cs: CoupledSystem) -> None:
        """Test W stays zero when f is linear."""
        var = variational_second(g1_cs, 1.0, [2.0])

        assert var.W(0.0).tolist() == [[[0.0]]]


class TestJacobians:
    """Test first derivatives against closed forms and finite differences."""

    def test_jacobian_G(self, g1_cs: CoupledSystem) -> None:
        """Test DG(1, η) = e^{-0.25}."""
        bundle = jacobian_G(g1_cs, 1.0, [2.0])

        assert bundle.jacobian[0, 0] == pytest.approx(math.exp(-0.25), rel=1e-8)
        assert set(bundle.cross_check) == {"direct_error", "det", "condition", "fd_error"}
        assert bundle.cross_check["direct_error"] <= 1e-7
        assert bundle.cross_check["fd_error"] <= 1e-6

    def test_jacobian_H(self, g1_cs: CoupledSystem) -> None:
        """Test DH(1, ξ) = e^{0.25} and its inverse relation with DG."""
        bundle = jacobian_H(g1_cs, 1.0, [2.0])

        assert bundle.jacobian[0, 0] == pytest.approx(1.2840254, abs=1e-7)
        assert bundle.cross_check["det"] == pytest.approx(1.2840254, abs=1e-7)
        assert bundle.cross_check["identity_error"] <= 1e-12

    def test_nonlinear_fd_agreement(self, g2_cs: CoupledSystem, g3_cs: CoupledSystem) -> None:
        """Test Jacobians of nonlinear systems against central differences."""
        assert jacobian_H(g2_cs, 2.0, [0.7]).cross_check["fd_error"] <= 1e-5
        bundle = jacobian_G(g3_cs, 1.5, [0.5, -1.0])
        assert bundle.cross_check["fd_error"] <= 1e-5
        assert bundle.cross_check["det"] > 0

    def test_chain_rule(self, g2_cs: CoupledSystem) -> None:
        """Test D[G(t, H(t, ξ))] is the identity."""
        assert chain_rule_residual(g2_cs, 1.0, [0.5]) <= 1e-6

    def test_to_dict(self, g1_cs: CoupledSystem) -> None:
        """Test the plain-data form."""
        data = jacobian_G(g1_cs, 1.0, [2.0], validate=False).to_dict()

        assert data["map"] == "G"
        assert data["hessian"] is None
        assert "fd_error" not in data["cross_check"]


class TestHessians:
    """Test second derivatives."""

    def test_linear_map_has_zero_hessian(self, g1_cs: CoupledSystem) -> None:
        """Test D²G vanishes for a linear perturbation."""
        bundle = hessian_G(g1_cs, 1.0, [2.0])

        assert bundle.hessian is not None
        assert np.allclose(bundle.hessian, 0.0)
        assert bundle.cross_check["fd_error"] <= 1e-3

    def test_nonlinear_hessian_G(self, g2_cs: CoupledSystem) -> None:
        """Test the variational and integral forms agree with finite differences."""
        bundle = hessian_G(g2_cs, 1.0, [0.5])

        assert bundle.cross_check["integral_error"] <= 1e-6
        assert bundle.cross_check["fd_error"] <= 1e-3

    def test_planar_symmetry(self, g3_cs: CoupledSystem) -> None:
        """Test mixed partial derivatives commute."""
        bundle = hessian_G(g3_cs, 1.0, [0.5, -0.3], validate=False)

        assert bundle.hessian is not None
        assert bundle.hessian.shape == (2, 2, 2)
        assert bundle.cross_check["symmetry_error"] <= 1e-10

    def test_hessian_H(self, g2_cs: CoupledSystem) -> None:
        """Test D²H against finite differences."""
        bundle = hessian_H(g2_cs, 1.0, [0.5])

        assert bundle.order == 2
        assert bundle.cross_check["fd_error"] <= 1e-3

    def test_hessian_H_image(self, g1_cs: CoupledSystem) -> None:
        """Test D²H carries the image point H(t, ξ) = ξ e^{t/4} from the Jacobian step."""
        first = jacobian_H(g1_cs, 1.0, [2.0], validate=False)
        second = hessian_H(g1_cs, 1.0, [2.0], validate=False)

        assert first.image is not None and second.image is not None
        assert second.image.tolist() == first.image.tolist()
        assert second.image[0] == pytest.approx(2.0 * math.exp(0.25), rel=1e-8)
        assert jacobian_G(g1_cs, 1.0, [2.0], validate=False).image is None

    def test_orders(self, g1_cs: CoupledSystem) -> None:
        """Test the order dispatch."""
        assert derivatives_G(g1_cs, 1.0, [2.0], 1).order == 1
        with pytest.raises(NotImplementedError):
            derivatives_G(g1_cs, 1.0, [2.0], 3)
        with pytest.raises(ValidationError):
            derivatives_G(g1_cs, 1.0, [2.0], 0)


class TestFiniteDifferences:
    """Test the finite-difference oracles."""

    def test_fd_jacobian(self) -> None:
        """Test the Jacobian of a polynomial map."""
        J = fd_jacobian(lambda p: np.array([p[0] * p[1], p[0] ** 2]), [1.0, 2.0])

        assert np.allclose(J, [[2.0, 1.0], [2.0, 0.0]], atol=1e-8)

    def test_fd_hessian(self) -> None:
        """Test second differences of a polynomial map."""
        D2 = fd_hessian(lambda p: np.array([p[0] ** 2 * p[1]]), [1.0, 2.0])

        assert np.allclose(D2[0], [[4.0, 2.0], [2.0, 0.0]], atol=1e-6)

    def test_fd_validate(self, g1_cs: CoupledSystem) -> None:
        """Test the error-versus-step table."""
        report = fd_validate("G", g1_cs, 1.0, [2.0], orders=(1, 2))

        assert len(report.rows) == 8
        assert set(report.best_step) == {1, 2}
        assert min(row.error for row in report.rows if row.order == 1) <= 1e-6

    def test_fd_validate_arguments(self, g1_cs: CoupledSystem) -> None:
        """Test step and order validation."""
        with pytest.raises(ValidationError):
            fd_validate("G", g1_cs, 1.0, [2.0], steps=(1e-4, 1e-3))
        with pytest.raises(ValidationError):
            fd_validate("G", g1_cs, 1.0, [2.0], orders=(3,))
        with pytest.raises(ValidationError):
            fd_validate("K", g1_cs, 1.0, [2.0])  # type: ignore[arg-type]


class TestHadamardProbe:
    """Test the global-inverse probe."""

    def test_planar(self, g3_cs: CoupledSystem) -> None:
        """Test injectivity, growth and positive determinants."""
        probe = hadamard_probe(g3_cs, 1.0, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])

        assert probe.injectivity > 0
        assert probe.min_det > 0
        assert probe.statuses == {
            "injective": ProbeStatus.CERTIFIED,
            "proper": ProbeStatus.PROBE_PASSED,
            "local_diffeo": ProbeStatus.CERTIFIED,
        }

    def test_repeated_points(self, g3_cs: CoupledSystem) -> None:
        """Test injectivity is undecided when every sample is the same point."""
        probe = hadamard_probe(g3_cs, 1.0, [[0.5, 0.5], [0.5, 0.5]], [1.0, 1.0])

        assert math.isinf(probe.injectivity)
        assert probe.statuses["injective"] == ProbeStatus.PROBE_INCONCLUSIVE
        assert probe.statuses["local_diffeo"] == ProbeStatus.CERTIFIED

    def test_needs_two_points(self, g3_cs: CoupledSystem) -> None:
        """Test a single sample point is rejected."""
        with pytest.raises(ValidationError):
            hadamard_probe(g3_cs, 1.0, [[0.0, 0.0]], [1.0, 0.0])
