import pytest

from lorenzcert.model import DEFAULT_MODEL


@pytest.fixture(scope="session")
def model():
    return DEFAULT_MODEL
