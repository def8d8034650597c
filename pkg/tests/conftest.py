import numpy as np
import pytest

from locc_blocks.linalg import random_unit_vector
from locc_blocks.statevec import StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(labels, rng):
    return StateVector(tuple(labels), random_unit_vector(2 ** len(labels), rng))
