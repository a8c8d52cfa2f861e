import sys
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from equiflow.config import default_config, default_env_config


@pytest.fixture(scope="session")
def env_cfg():
    """The shipped default environment (training water budget)."""
    return default_env_config()


@pytest.fixture(scope="session")
def quick_env(env_cfg):
    """Default world with a small budget so episodes finish in a few steps."""
    return replace(env_cfg, total_to_distribute=180_000)


@pytest.fixture(scope="session")
def experiment_cfg():
    return default_config()
