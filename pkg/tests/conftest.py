from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from hallmhd.initial import random_vector_field
from hallmhd.spectral import Grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def grid8():
    return Grid(8)


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_vec(grid16, rng):
    def make(solenoidal=True, band=None, comp_shape=(3,)):
        return random_vector_field(grid16, rng, band, solenoidal=solenoidal, comp_shape=comp_shape)
    return make
