import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("bfnlab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("bfnlab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_real_field(rng, grid, band=None):
    """Random real field, optionally band-limited to ``|k| <= band``."""
    values = rng.standard_normal(grid.shape)
    c = grid.forward(values)
    if band is not None:
        c = np.where(grid.low_mode_mask(band), c, 0.0)
    return c


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
