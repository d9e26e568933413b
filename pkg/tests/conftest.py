import math

import pytest

from qndwork.bath import BathSpec
from qndwork.modulation import DriveSpec

OMEGA0 = 10.0 / 7.0
TC = 10.0
BETA = 3.74


@pytest.fixture
def bath_T0():
    return BathSpec(0.05, OMEGA0, TC, math.inf)


@pytest.fixture
def bath_warm():
    return BathSpec(0.05, OMEGA0, TC, BETA)


@pytest.fixture
def drive():
    return DriveSpec(1.0, 0.25, 2.5, t_start=1.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")
