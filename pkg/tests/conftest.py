import numpy as np
import pytest

from uwloc.spectral import build_feature_matrix
from uwloc.synth import SynthConfig, generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_recording():
    """Short default-tone recording: 120 frames of 800 samples."""
    cfg = SynthConfig(duration_s=120, sample_rate=800, noise_std=0.5, seed=7)
    ts, km, bins = generate(cfg)
    fm, labels = build_feature_matrix(ts, km)
    return cfg, fm, labels, bins


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
