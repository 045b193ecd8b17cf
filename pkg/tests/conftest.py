import pytest

from fwgan.generator import GeneratorConfig, random_model


@pytest.fixture
def tiny_cfg():
    return GeneratorConfig.tiny()


@pytest.fixture
def tiny_model(tiny_cfg):
    return random_model(tiny_cfg, seed=7)
