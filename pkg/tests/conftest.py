import numpy as np
import pytest

import helpers


@pytest.fixture(scope="session")
def planar2():
    return helpers.build_planar2()


@pytest.fixture(scope="session")
def gripper1():
    return helpers.build_gripper1()


@pytest.fixture(scope="session")
def hand6():
    return helpers.build_hand6()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
