import numpy as np
import pytest

from specsemi import BasisDescriptor, SymbolSpec, worked_example_system


@pytest.fixture(scope="session")
def xsys():
    return worked_example_system()


@pytest.fixture(scope="session")
def xbasis(xsys):
    return BasisDescriptor.exceptional(xsys)


@pytest.fixture(scope="session")
def xsymbol(xsys):
    return SymbolSpec.from_coeffs(xsys.q_poly.coef)


@pytest.fixture(scope="session")
def heat_symbol():
    return SymbolSpec.from_coeffs([0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
