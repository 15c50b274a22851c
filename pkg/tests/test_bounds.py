"""Tests for the explicit constants and the inequality certificates."""

import math

import pytest

from nonauto_equiv.dynamics import (
    ConstantSheet,
    CoupledSystem,
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
    z_star_picard,
)
from nonauto_equiv.dynamics.bounds import critical_time, default_point_pairs, delta_floor
from nonauto_equiv.exceptions import ValidationError


class TestAuxiliaryFunctions:
    """Test θ₀, θ and the critical times."""

    def test_theta0(self) -> None:
        """Test both branches of θ₀."""
        assert eval_theta0(2.0, 1.0, 0.25, 1.0, 1.0) == 0.5
        assert eval_theta0(1.0, 1.0, 0.25, 1.0, 2.0) == pytest.approx(0.25 * (math.e - 1))

    def test_theta(self) -> None:
        """Test both branches of θ."""
        assert eval_theta(2.0, 1.0, 0.25, 1.0, 1.0) == pytest.approx(1.6487213, abs=1e-7)
        assert eval_theta(2.0, 1.0, 0.5, 1.5, 1.0) == 2.0

    def test_rate_above_bound(self) -> None:
        """Test α > M is rejected."""
        with pytest.raises(ValidationError):
            eval_theta0(1.0, 1.0, 0.25, 2.0, 1.0)

    def test_critical_times(self) -> None:
        """Test L = ln 10 and θ* = 10^{1/4} for the scalar-linear constants."""
        L, thetastar = critical_times(0.1, 1.0, 0.25, 1.0, 1.0, 2.0)

        assert L == pytest.approx(2.3025851, abs=1e-7)
        assert thetastar == pytest.approx(1.7782794, abs=1e-7)
        _, theta0star = critical_times(0.1, 1.0, 0.25, 1.0, 1.0, 2.0, kind="theta0")
        assert theta0star == pytest.approx(0.25 * math.log(10))

    def test_critical_time_floor(self) -> None:
        """Test a logarithm argument at most 1 gives time 0."""
        assert critical_time(10.0, 1.0, 0.25, 1.0, 2.0) == 0.0

    def test_invalid(self) -> None:
        """Test ε and kind validation."""
        with pytest.raises(ValidationError):
            critical_time(0.0, 1.0, 0.25, 1.0, 2.0)
        with pytest.raises(ValidationError):
            critical_times(0.1, 1.0, 0.25, 1.0, 1.0, 2.0, kind="theta1")


class TestDeltaRecursion:
    """Test the δ recursion."""

    def test_values(self) -> None:
        """Test the first terms."""
        assert delta_floor(0.1, 0.5, 0.25) == pytest.approx(0.075)
        assert delta_recursion(0.1, 0, 0.5, 0.25) == pytest.approx(0.1)
        assert delta_recursion(0.1, 1, 0.5, 0.25) == pytest.approx(0.05)

    def test_nonincreasing(self) -> None:
        """Test δ_j does not grow with j."""
        values = [delta_recursion(0.1, j, 0.5, 0.25) for j in range(8)]

        assert all(b <= a for a, b in zip(values[:-1], values[1:], strict=True))

    def test_invalid(self) -> None:
        """Test the contraction and index requirements."""
        with pytest.raises(ValidationError):
            delta_recursion(0.1, 1, 0.5, 1.0)
        with pytest.raises(ValidationError):
            delta_recursion(0.1, -1, 0.5, 0.25)


class TestConstantSheet:
    """Test the constant sheet."""

    def test_scalar_linear(self, g1_cs: CoupledSystem) -> None:
        """Test the sheet of the scalar-linear system."""
        sheet = ConstantSheet.from_system(g1_cs, 0.1, omega=2.0, beta=2.0)

        assert sheet.L == pytest.approx(math.log(10))
        assert sheet.Lstar == pytest.approx(math.log(10))
        assert sheet.thetastar == pytest.approx(10**0.25)
        assert sheet.delta(1) == pytest.approx(delta_recursion(0.1, 1, sheet.Theta0star, 0.25))
        assert set(sheet.to_dict()) >= {"Lstar", "Theta0star", "L", "thetastar"}

    def test_auxiliary_certificates(self, g1_cs: CoupledSystem) -> None:
        """Test monotonicity and the endpoint maxima."""
        sheet = ConstantSheet.from_system(g1_cs, 0.1, omega=2.0, beta=2.0)
        certificates = check_auxiliary_functions(sheet)

        assert [c.bound_id for c in certificates] == [
            "theta0-monotone",
            "theta-monotone",
            "Theta0star-endpoint",
            "thetastar-endpoint",
        ]
        assert all(c.passed for c in certificates)


class TestSandwiches:
    """Test the solution sandwich certificates."""

    def test_point_pairs(self) -> None:
        """Test the default pairs end with a coincident pair."""
        pairs = default_point_pairs(2, count=3)

        assert len(pairs) == 4
        assert pairs[-1][0].tolist() == pairs[-1][1].tolist()

    def test_scalar_linear(self, g1_cs: CoupledSystem) -> None:
        """Test all three sandwiches hold, saturated, for the scalar-linear system."""
        certificates = check_gronwall(g1_cs, [(2.0, 0.0), (3.0, 1.0), (1.0, 1.0)])

        assert [c.bound_id for c in certificates] == ["Prop-2.3", "Cor-2.4", "Eq-400"]
        assert all(c.passed for c in certificates)
        assert certificates[1].parameters == {"M": 1.0}

    def test_lower_side_fails_for_nonlinear(self, g2_cs: CoupledSystem) -> None:
        """Test the lower perturbed-flow bound is not met when Df stays below γ."""
        prop, cor, eq400 = check_gronwall(g2_cs, [(2.0, 0.0), (4.0, 1.0)])

        assert not prop.passed
        assert cor.passed
        assert eq400.passed

    def test_time_order(self, g1_cs: CoupledSystem) -> None:
        """Test pairs need t >= s."""
        with pytest.raises(ValidationError):
            check_gronwall(g1_cs, [(0.0, 1.0)])


class TestIterateCertificates:
    """Test the Picard iterate certificates."""

    def test_bounds(self, g1_cs: CoupledSystem) -> None:
        """Test the sup bounds of the iterates."""
        certificate = check_zj_bounds(g1_cs, 1.0, [2.0], j_max=5)

        assert certificate.bound_id == "Lemma-3.4"
        assert certificate.passed
        assert len(certificate.parameters["margins"]) == 6

    def test_continuity(self, g1_cs: CoupledSystem) -> None:
        """Test the continuity estimates in ξ."""
        certificate = check_zj_continuity(g1_cs, [0.5, 1.0, 2.0], [1.0], [1.5], 0.1, j_max=2)

        assert certificate.bound_id == "Lemma-3.5"
        assert certificate.passed
        assert certificate.parameters["omega"] > 0

    def test_ratios(self, g1_cs: CoupledSystem) -> None:
        """Test the ratio certificate of a converged run."""
        certificate = picard_ratio_certificate(g1_cs, z_star_picard(g1_cs, 1.0, [2.0]))

        assert certificate.passed
        assert certificate.parameters["bound"] == pytest.approx(0.3)


class TestModulus:
    """Test the moduli of G."""

    def test_scalar_linear(self, g1_cs: CoupledSystem) -> None:
        """Test both modulus certificates hold."""
        certificates = modulus_check(g1_cs, [1.0, 2.0], [([1.0], [2.0])], 0.1)

        assert [c.bound_id for c in certificates] == ["Eq-300", "Thm-3.6"]
        assert all(c.passed for c in certificates)
        assert certificates[1].parameters["beta"] > 0
