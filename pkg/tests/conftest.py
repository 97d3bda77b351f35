import numpy as np
import pytest

from ttrseg.backbone import Architecture, init_backbone
from ttrseg.patching import Frame


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def spec():
    return init_backbone(Architecture(), seed=7)


@pytest.fixture(scope="session")
def wide_spec():
    # wider init than the default, so label maps are not constant
    return init_backbone(Architecture(), seed=7, scale=0.3)


@pytest.fixture(scope="session")
def small_spec():
    """Narrow backbone for fast tests: 4 -> (8x2) -> (8x2), 3 classes, factor 8."""
    return init_backbone(Architecture(4, ((8, 2), (8, 2)), 3), seed=3, scale=0.4)


def random_frame(rng, h, w):
    return Frame(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
