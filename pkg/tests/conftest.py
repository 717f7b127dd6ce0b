import pytest

from greenfield.arith.homopoly import PolyMap
from greenfield.dynamics.dynsys import DynSystem
from greenfield.dynamics.lattes import LattesSystem


@pytest.fixture
def power_map():
    return DynSystem(PolyMap.parse(["x^2", "y^2"]))


@pytest.fixture
def chebyshev():
    return DynSystem(PolyMap.parse(["x^2 - 2*y^2", "y^2"]))


@pytest.fixture
def perturbed():
    return DynSystem(PolyMap.parse(["x^2 + 1/2*y^2", "y^2"]))


@pytest.fixture(scope="session")
def lattes():
    return LattesSystem.from_coefficients(0, -2, 3, 5)
