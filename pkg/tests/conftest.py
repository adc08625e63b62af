import numpy as np
import pytest

from homctl import oscillator_controller, oscillator_plant


@pytest.fixture
def plant():
    return oscillator_plant()


@pytest.fixture
def ctrl():
    return oscillator_controller()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
