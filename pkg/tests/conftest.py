import numpy as np
import pytest

from spherepart import fem, geom


@pytest.fixture(scope="session")
def ico3():
    return geom.build_icosphere(3)


@pytest.fixture(scope="session")
def ico4():
    return geom.build_icosphere(4)


@pytest.fixture(scope="session")
def ico5():
    return geom.build_icosphere(5)


@pytest.fixture(scope="session")
def grid32():
    return geom.build_seamed_mesh(2)


@pytest.fixture(scope="session")
def grid64():
    return geom.build_seamed_mesh(3)


@pytest.fixture(scope="session")
def grid96():
    return geom.build_latlong_mesh(96, 192)


@pytest.fixture(scope="session")
def grid96_ops(grid96):
    return fem.assemble(grid96, antiperiodic=False)


@pytest.fixture(scope="session")
def ico5_ops(ico5):
    return fem.assemble(ico5, antiperiodic=False)


@pytest.fixture(scope="session")
def ico5_sphere_pairs(ico5, ico5_ops):
    """First nine closed-sphere eigenpairs on the level-5 icosphere."""
    return fem.solve_smallest(*ico5_ops, 9, sigma=-1.0)


@pytest.fixture(scope="session")
def grid64_anti_pairs(grid64):
    """First six antiperiodic eigenpairs on the seamed 64x128 grid."""
    ops = fem.assemble(grid64, antiperiodic=True)
    return fem.solve_smallest(*ops, 6, sigma=-1.0)


@pytest.fixture(scope="session")
def ico5_angles(ico5):
    return geom.spherical_angles(ico5.vertices)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
