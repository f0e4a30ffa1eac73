import numpy as np
import pytest

from mfglab.backend import warm_up


@pytest.fixture(scope="session", autouse=True)
def _warm_backend():
    # compile the stencil kernels once so timed tests measure math, not jit
    warm_up()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
