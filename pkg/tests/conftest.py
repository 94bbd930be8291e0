import pytest

from srload.config import load_config


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def rate_model(cfg):
    # default-span model shared by rate/sweep tests (table build is the
    # expensive part and is detuning-agnostic)
    return cfg.rate_model()
