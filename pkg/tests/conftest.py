import os

import numpy as np
import pytest
from hypothesis import settings

from nlsgpe import ModelParams, WaveField, bright_soliton, build_grid

settings.register_profile("default", deadline=None, max_examples=40)
settings.register_profile("ci", deadline=None, max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def soliton_grid():
    return build_grid(-15.0, 20.0, 700)


@pytest.fixture
def soliton_field(soliton_grid):
    return WaveField.sample(soliton_grid, lambda x: bright_soliton(0.0, x))


@pytest.fixture
def focusing():
    return ModelParams(epsilon=1.0, beta=-1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dirichlet(rng, shape):
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    for axis in range(v.ndim):
        idx = [slice(None)] * v.ndim
        idx[axis] = 0
        v[tuple(idx)] = 0.0
        idx[axis] = -1
        v[tuple(idx)] = 0.0
    return v


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
