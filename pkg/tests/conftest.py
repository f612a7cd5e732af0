import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from specrng.spectrogram import StftParams, compute_spectrogram  # noqa: E402
from specrng.waveform import SynthParams, synthesize_frame  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Print a criterion verdict now and again in the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_spectrogram():
    """256x256 spectrogram of a full-size 40 ms frame at 61.44 MHz."""
    return compute_spectrogram(synthesize_frame(SynthParams()), StftParams())


@pytest.fixture(scope="session")
def small_spectrogram():
    return compute_spectrogram(synthesize_frame(SynthParams.small(prng_seed=7)), StftParams.small())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
