"""Pytest configuration."""

import numpy as np
import pytest
from dotenv import load_dotenv

from pdit_qkd.config import get_settings
from pdit_qkd.models import PauliDistribution
from pdit_qkd.protocols import ProtocolRegistry

# Load .env before running tests
load_dotenv()


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bb84():
    return ProtocolRegistry.create("bb84")


@pytest.fixture
def six_state():
    return ProtocolRegistry.create("six-state")


@pytest.fixture
def generic_distribution():
    return PauliDistribution(p00=0.7, p01=0.1, p10=0.1, p11=0.1)


@pytest.fixture
def noiseless():
    return PauliDistribution.noiseless()
