import pytest

from qherm.field import field_for_q
from qherm.variety import VarietyParams


@pytest.fixture
def gf4():
    """GF(4) ⊃ GF(2): q = 2."""
    return field_for_q(2)


@pytest.fixture
def gf16():
    """GF(16) ⊃ GF(4): q = 4."""
    return field_for_q(4)


@pytest.fixture
def params():
    return VarietyParams(1, 2)
