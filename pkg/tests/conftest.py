"""Shared wave profiles; profiles are immutable, so one per session is enough."""
import pytest

from src.models import PlasmaParams
from src.soliton_profile import get_profile


@pytest.fixture(scope="session")
def k1_params():
    return PlasmaParams(1.0, 0.05)


@pytest.fixture(scope="session")
def k1_profile(k1_params):
    return get_profile(k1_params)


@pytest.fixture(scope="session")
def k0_params():
    return PlasmaParams(0.0, 0.4)


@pytest.fixture(scope="session")
def k0_profile(k0_params):
    return get_profile(k0_params)
