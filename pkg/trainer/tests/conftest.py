import pytest
import torch

from fwgan_trainer import ToyConfig, build_dataset


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """One minute of synthetic speech, analyzed by the engine CLI."""
    return build_dataset(tmp_path_factory.mktemp("data"), seconds=60, seed=0)


@pytest.fixture
def toy_model():
    torch.manual_seed(0)
    from fwgan_trainer import Generator

    return Generator(ToyConfig())
