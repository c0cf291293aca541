import sys
from pathlib import Path

import pytest

import gtpool.autodiff as ad

sys.path.insert(0, str(Path(__file__).parent))  # make helpers importable


@pytest.fixture(autouse=True)
def finite_checks():
    """Every op output must stay finite throughout the suite."""
    ad.CHECK_FINITE = True
    yield
    ad.CHECK_FINITE = False
