import math

import pytest

from giantmag import EmitterConfig, optimal_config


@pytest.fixture(scope="session")
def opt2():
    return optimal_config(EmitterConfig(M=2, G=0.1))


@pytest.fixture(scope="session")
def opt30():
    return optimal_config(EmitterConfig(M=30, G=0.1))


@pytest.fixture
def center():
    return 2 * math.pi
