import pytest

from assoc_lame.elliptic import lattice_from_modulus
from assoc_lame.frobenius import ModelParams


@pytest.fixture(scope="session")
def lat95():
    return lattice_from_modulus(0.95)


@pytest.fixture(scope="session")
def lat50():
    return lattice_from_modulus(0.5)


@pytest.fixture(scope="session")
def p31():
    return ModelParams(3, 1, 0.95)
