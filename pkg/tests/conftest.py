import math

import numpy as np
import pytest

from savflow import Field, RunConfig, SchemeParams, make_grid, uniform_schedule


@pytest.fixture
def grid16():
    return make_grid(16, 16, 2 * math.pi, 2 * math.pi)


@pytest.fixture
def grid32():
    return make_grid(32, 32, 2 * math.pi, 2 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_field(grid16, rng):
    return Field(grid16, rng.standard_normal(grid16.shape))


@pytest.fixture
def l2_params():
    return SchemeParams(eps2=0.01, lam=1.0, c0=50.0, sigma=1.0, flow="L2")


@pytest.fixture
def hm1_params():
    return SchemeParams(eps2=0.01, lam=1.0, c0=50.0, sigma=1.0, flow="Hminus1")


@pytest.fixture
def tiny_cfg():
    """A fast 16^2 configuration for driver-level tests."""

    def make(**overrides):
        base = dict(flow="Hminus1", eps2=0.01, lam=1.0, c0=50.0, sigma=1.0,
                    nx=16, ny=16, initial_kind="random", seed=3,
                    schedule=uniform_schedule(0.05, 50), newton_iters=6)
        base.update(overrides)
        return RunConfig(**base)

    return make
