"""Shared gallery systems.

Gallery systems memoize their transition matrices, so sharing them across a
session keeps the integration-heavy tests fast.
"""

import pytest

from nonauto_equiv.dynamics import CoupledSystem, GallerySystem, load_gallery


@pytest.fixture(scope="session")
def g1() -> GallerySystem:
    return load_gallery("G1")


@pytest.fixture(scope="session")
def g2() -> GallerySystem:
    return load_gallery("G2")


@pytest.fixture(scope="session")
def g3() -> GallerySystem:
    return load_gallery("G3")


@pytest.fixture(scope="session")
def x1() -> GallerySystem:
    return load_gallery("X1")


@pytest.fixture(scope="session")
def g1_cs(g1: GallerySystem) -> CoupledSystem:
    return g1.coupled()


@pytest.fixture(scope="session")
def g2_cs(g2: GallerySystem) -> CoupledSystem:
    return g2.coupled()


@pytest.fixture(scope="session")
def g3_cs(g3: GallerySystem) -> CoupledSystem:
    return g3.coupled()


@pytest.fixture(scope="session")
def x1_cs(x1: GallerySystem) -> CoupledSystem:
    return x1.coupled(unsafe=True)
