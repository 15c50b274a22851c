"""Tests for the built-in systems."""

import math

import numpy as np
import pytest

from nonauto_equiv.dynamics import GALLERY_IDS, GallerySystem, load_gallery, oracle_eval
from nonauto_equiv.exceptions import OracleUnavailable, SmallnessViolation, UnknownGalleryId


class TestLoadGallery:
    """Test loading systems by id."""

    def test_ids(self) -> None:
        """Test the known ids."""
        assert GALLERY_IDS == ("G1", "G2", "G3", "X1")

    @pytest.mark.parametrize("system_id", ["G1", "G2", "G3", "X1"])
    def test_dimensions_match(self, system_id: str) -> None:
        """Test the linear part and the perturbation agree on the dimension."""
        gs = load_gallery(system_id)

        assert gs.id == system_id
        assert gs.lin.n == gs.pert.n == gs.n

    def test_unknown(self) -> None:
        """Test unknown ids raise with the known list."""
        with pytest.raises(UnknownGalleryId) as exc_info:
            load_gallery("G9")

        assert exc_info.value.context["known"] == list(GALLERY_IDS)

    def test_horizon(self) -> None:
        """Test the horizon is passed through."""
        assert load_gallery("G2", horizon=8.0).lin.horizon == 8.0

    def test_declared_constants(self, g1: GallerySystem, g3: GallerySystem) -> None:
        """Test declared constants and margins."""
        assert g1.constants.smallness_margin == pytest.approx(0.75)
        assert g3.constants.M == pytest.approx(math.sqrt(1.25))
        assert load_gallery("X1").constants.satisfies_smallness is False

    def test_smallness_guard(self) -> None:
        """Test X1 is only coupled when explicitly unsafe."""
        x1 = load_gallery("X1")

        with pytest.raises(SmallnessViolation):
            x1.coupled()
        assert x1.coupled(unsafe=True).outside_theorem


class TestOracles:
    """Test the closed-form oracles."""

    def test_scalar_values(self, g1: GallerySystem) -> None:
        """Test the scalar-linear closed forms at known points."""
        assert oracle_eval(g1, "y", 2.0, 0.0, [1.0])[0] == pytest.approx(0.2231302, abs=1e-7)
        assert oracle_eval(g1, "zstar", 1.0, [2.0])[0] == pytest.approx(0.5680508, abs=1e-7)
        assert oracle_eval(g1, "H", 1.0, [2.0])[0] == pytest.approx(2.5680508, abs=1e-7)
        assert oracle_eval(g1, "DG", 1.0, [2.0])[0, 0] == pytest.approx(math.exp(-0.25))

    def test_inverse_pair(self, g1: GallerySystem) -> None:
        """Test the closed-form G inverts H."""
        image = g1.oracle("H", 2.0, [1.5])

        assert g1.oracle("G", 2.0, image) == pytest.approx(np.array([1.5]))

    def test_unavailable(self, g2: GallerySystem) -> None:
        """Test missing oracles raise and list what exists."""
        with pytest.raises(OracleUnavailable) as exc_info:
            g2.oracle("H", 1.0, [0.0])

        assert exc_info.value.context["available"] == ["Phi"]
