from pathlib import Path

import pytest

from weighted_kstab import catalog

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def data_dir():
    """Directory of the curated JSON documents."""
    return DATA_DIR


@pytest.fixture
def p1():
    """The projective line as a toric datum on [-1, 1]."""
    return catalog.datum("p1")


@pytest.fixture
def sl2():
    """SL2 acting on a quadric: rank 1, one root, Delta_+ = [0, 2]."""
    return catalog.datum("sl2")


@pytest.fixture
def blp2():
    """The blow-up of the plane in a point."""
    return catalog.datum("blp2")


@pytest.fixture
def one():
    """The constant weight."""
    return catalog.weight("one")
