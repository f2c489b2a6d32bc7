import warnings

import numpy as np
import pytest

from atomlith.fields import GaussianSpec, gaussian_packet, make_grid


@pytest.fixture
def grid256():
    return make_grid(256, 256, 256.0, 256.0)


@pytest.fixture
def grid64():
    return make_grid(64, 64, 64.0, 64.0)


@pytest.fixture
def packet(grid256):
    return gaussian_packet(grid256, GaussianSpec(10.0))


def band_limited(grid, rng, kmax=0.3):
    """Random field whose spectrum vanishes above ``kmax`` (smooth and periodic)."""
    KX, KY = grid.kmesh()
    spec = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    spec *= np.exp(-(KX**2 + KY**2) / (2 * (kmax / 3) ** 2))
    vals = np.fft.ifft2(np.fft.ifftshift(spec))
    return vals / np.sqrt(np.sum(np.abs(vals) ** 2) * grid.dx * grid.dy)


def pearson(a, b):
    return float(np.corrcoef(np.ravel(a), np.ravel(b))[0, 1])


@pytest.fixture(autouse=True)
def _quiet_guard_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*undersamples.*")
        yield


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
