import numpy as np
import pytest
import torch

from polardeblur.grid import make_grid, pixel_centers

torch.set_num_threads(1)


def gaussian_bump(M, cx=0.0, cy=0.0, sigma=0.1, amp=1.0):
    c = pixel_centers(M)
    X, Y = np.meshgrid(c, c, indexing="ij")
    return amp * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma ** 2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(128)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
