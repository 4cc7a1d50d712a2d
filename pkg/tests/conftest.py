"""Shared fixtures: the bundled systems at their usual parameters."""

import math

import numpy as np
import pytest

from shock_stability.systems import (
    BURGERS,
    PowerLaw,
    make_full_euler,
    make_isentropic,
    make_scalar_convex,
    nonconvex_cubic_law,
)

SQRT6 = math.sqrt(6.0)
U_LEFT_G2 = np.array([1.0, 0.0])
U_RIGHT_G2 = np.array([2.0, -2.0 * math.sqrt(1.5)])


@pytest.fixture(scope="session")
def isentropic_g2():
    return make_isentropic(PowerLaw(2.0))


@pytest.fixture(scope="session")
def full_euler():
    return make_full_euler(1.4)


@pytest.fixture(scope="session")
def burgers():
    return make_scalar_convex(BURGERS)


@pytest.fixture(scope="session")
def nonconvex():
    return make_isentropic(nonconvex_cubic_law())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
