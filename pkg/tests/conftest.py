"""Shared fixtures: seeded generators and small reference states."""

import numpy as np
import pytest

from src.constants import FIXTURES_DIR
from src.quantum.qregisters import DensityState, diagonal_state, maximally_entangled
from src.utils.sampling import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240611)


@pytest.fixture
def q34() -> DensityState:
    return diagonal_state([0.75, 0.25], labels="B")


@pytest.fixture
def bell() -> DensityState:
    return maximally_entangled(2, ("B", "R")).state()


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR
