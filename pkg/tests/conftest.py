"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from carnotlab import ReducedSystem, eng, n631


@pytest.fixture(scope="session")
def eng2():
    return eng(2)


@pytest.fixture(scope="session")
def n63():
    return n631()


@pytest.fixture(scope="session")
def homoclinic_system(eng2):
    """Reduced system of the standard homoclinic class F = 1 - 2 r^2."""
    return ReducedSystem(eng2, np.array([1.0, 0.0, 0.0, -4.0]))


@pytest.fixture(scope="session")
def homoclinic_ic():
    """Turning-point state of the homoclinic orbit (r_max = 1 on the x1 axis)."""
    return np.array([0.0, 0.0, 1.0, 0.0])
