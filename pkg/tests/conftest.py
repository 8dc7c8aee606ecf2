import numpy as np
import pytest

from pgl.networks.config import EncoderConfig
from pgl.networks.params import build_online, build_target

VIEW_SHAPE = (8, 32, 32)


@pytest.fixture
def desk_config():
    return EncoderConfig.preset_named("desk")


@pytest.fixture
def rng():
    yield np.random.default_rng(20240229)


@pytest.fixture
def online(desk_config):
    # Built in 64-bit so gradient and equality checks are exact enough
    return build_online(desk_config, np.random.default_rng(11), dtype=np.float64)


@pytest.fixture
def target(online):
    return build_target(online)


@pytest.fixture
def views(rng):
    # A batch of two single-channel desk-scale views
    return rng.standard_normal((2, 1, *VIEW_SHAPE))
