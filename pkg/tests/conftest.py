import numpy as np
import pytest

from dpt.constructors import (
    LaminateSpec,
    PotentialSpec,
    TrigPotential,
    hessian_cofactor,
    laminate,
)
from dpt.domain import GridSpec
from dpt.symmat import SymMat


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def equality_field():
    """The standard periodic equality case: cof(I + Hess(0.01 cos cos))."""
    spec = PotentialSpec(
        SymMat.identity(2), TrigPotential(2, (((1, 1), 0.01, 0.0),))
    )
    return hessian_cofactor(spec, grid=GridSpec((64, 64)))


@pytest.fixture(scope="session")
def laminate_311():
    """Three-dimensional two-state laminate with a strict determinant gap."""
    spec = LaminateSpec(
        SymMat.identity(3), SymMat.from_diag([2.0, 5.0, 1.0]), np.array([0.0, 0.0, 1.0])
    )
    return laminate(spec, GridSpec((8, 8, 8)))


def random_spd(rng, d, scale=1.0, floor=0.1):
    g = rng.normal(size=(d, d))
    return SymMat.from_matrix(scale * (g @ g.T) + floor * np.eye(d))
