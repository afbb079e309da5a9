import pytest

from orchardprop.geometry import OrchardLayout, palermo_layout
from orchardprop.models import RadioConfig


@pytest.fixture
def palermo():
    return palermo_layout()


@pytest.fixture
def table2_grid():
    """7.12 m square planting grid, 4.16 m canopies, tree (0, 0) at the origin."""
    return OrchardLayout(6, 7, 7.12, 7.12, 4.16)


@pytest.fixture
def radio():
    return RadioConfig(868.0, 21.0)
