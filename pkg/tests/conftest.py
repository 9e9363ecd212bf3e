import numpy as np
import pytest

from tdcis.models import build_model


@pytest.fixture(scope="session")
def small_model():
    """One-channel soft-core atom, cheap enough for many tests."""
    return build_model(40, 200, "uniform", "soft-core", depth=-3.0, width=1.2, l_max=2, e_cut=3.0)


@pytest.fixture(scope="session")
def two_channel_model():
    """Be-like HFS atom with two active channels and interchannel coupling."""
    return build_model(
        30, 800, "sqrt-mapped", "hfs", Z=4, n_elec=4, l_max=3, e_cut=3.0, coupling="interchannel"
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20261019)


def random_state(basis, rng, scale=1.0):
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return scale * v / np.linalg.norm(v)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
