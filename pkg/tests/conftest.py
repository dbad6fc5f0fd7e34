import numpy as np
import pytest

from hopfmin import make_domain, triangulate


@pytest.fixture(scope="session")
def disk():
    return make_domain("disk-polygon", n=64, radius=1.0)


@pytest.fixture(scope="session")
def square():
    return make_domain("rectangle", w=1.0, h=1.0)


@pytest.fixture(scope="session")
def lshape():
    return make_domain("polygon",
                       vertices=[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])


@pytest.fixture(scope="session")
def disk_mesh(disk):
    return triangulate(disk, 0.15)


@pytest.fixture(scope="session")
def disk_mesh_fine(disk):
    return triangulate(disk, 0.08)


@pytest.fixture(scope="session")
def square_mesh(square):
    return triangulate(square, 0.15)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
