import functools
import os

import numpy as np
import pytest

from gfdmrx.channel import ChannelModel
from gfdmrx.sim import Scenario, Waveform, parse_snr_grid, run_sweep

SWEEP_SEED = 2024


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance verdicts, printed once at the end of the run.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def reference_sweep(waveform: str, alpha: float, receivers: tuple, pdp: str, snrs: str):
    """Full-size sweep (200 channels x 50 blocks, L=24) shared between test modules."""
    scenario = Scenario(
        waveform=Waveform(waveform, alpha=alpha),
        receivers=receivers,
        channel=ChannelModel.parse(pdp, L=24),
        snr_db_grid=parse_snr_grid(snrs),
        n_channels=200,
        n_blocks_per_channel=50,
        seed=SWEEP_SEED,
    )
    rows = run_sweep(scenario, workers=os.cpu_count() or 1, timing=False)
    return {(r.receiver, r.snr_db): r for r in rows}
