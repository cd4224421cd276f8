import numpy as np
import pytest

from strcf import synth

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """Factory writing (and caching) synthetic OTB sequences."""
    root = tmp_path_factory.mktemp("synth")
    cache = {}

    def make(kind, frames, seed=0):
        key = (kind, frames, seed)
        if key not in cache:
            out = root / f"{kind}_{frames}_{seed}"
            synth.write_sequence(synth.generate(kind, frames, seed=seed), out)
            cache[key] = out
        return cache[key]

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
