import time

import numpy as np
import pytest

from swseq.array_model import uca, ula
from swseq.switching import Timing


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def timing():
    return Timing()


@pytest.fixture(scope="session")
def tx():
    return ula(8)


@pytest.fixture(scope="session")
def rx():
    return uca(8)


@pytest.fixture(scope="session")
def annealed(tx, timing):
    """Schedule from the shipped default annealing run."""
    from swseq.annealer import AnnealConfig, anneal
    from swseq.switching import uniform_schedule

    t0 = time.perf_counter()
    best, trace = anneal(uniform_schedule(timing), tx, AnnealConfig())
    return best, trace, time.perf_counter() - t0
