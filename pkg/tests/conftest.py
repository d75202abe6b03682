import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phasembed.goldens import (  # noqa: E402
    LORENZ_BENCH_T,
    LORENZ_DT,
    LORENZ_LONG_T,
    SEED,
    lorenz_oscillation_period,
)
from phasembed.synth import make_lorenz  # noqa: E402

GOLDENS = Path(__file__).parent / "data" / "goldens.txt"

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def lorenz_long():
    return make_lorenz(dt=LORENZ_DT, T=LORENZ_LONG_T, seed=SEED)


@pytest.fixture(scope="session")
def lorenz_bench():
    return make_lorenz(dt=LORENZ_DT, T=LORENZ_BENCH_T, seed=SEED)


@pytest.fixture(scope="session")
def lorenz_period(lorenz_long):
    return lorenz_oscillation_period(lorenz_long)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def benettin_lorenz(lorenz_long):
    from phasembed.goldens import BENETTIN_STEPS
    from phasembed.synth import benettin_lle, lorenz_system

    return benettin_lle(lorenz_system(), lorenz_long.values[:, 0], LORENZ_DT, BENETTIN_STEPS)
