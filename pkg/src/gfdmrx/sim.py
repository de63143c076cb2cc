"""Deterministic Monte-Carlo sweeps over SNR, waveform and receiver."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .analysis import analytic_ser_qam, empirical_ser, receiver_sinr
from .channel import ChannelModel, draw_channel
from .core import GfdmParams, PulseKind, WindowMatrix, compute_tx_window, make_pulse
from .errors import ConfigError, GfdmError
from .receivers import ReceiverSpec, design_receiver

log = logging.getLogger(__name__)

# Stream tags for seed derivation.
_CHANNEL_STREAM = 0
_BLOCK_STREAM = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for one ``(seed, key...)`` cell, independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# --------------------------------------------------------------------------
# Waveforms
# --------------------------------------------------------------------------

_DEFAULTS = {
    "gfdm": (32, 16, PulseKind.PERIODIC_RC),
    "ofdm": (512, 1, PulseKind.RECT_TD),
    "sc": (1, 512, PulseKind.RECT_FD),
    "chirp": (32, 16, PulseKind.CHIRP),
}


@dataclass(frozen=True)
class Waveform:
    """A named GFDM configuration (defaults follow the usual 512-sample block)."""

    name: str = "gfdm"
    K: Optional[int] = None
    M: Optional[int] = None
    alpha: float = 0.0

    def __post_init__(self):
        name = self.name.lower()
        if name not in _DEFAULTS:
            raise ConfigError(f"unknown waveform {self.name!r}; choose from {sorted(_DEFAULTS)}")
        K, M, _ = _DEFAULTS[name]
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "K", int(self.K if self.K is not None else K))
        object.__setattr__(self, "M", int(self.M if self.M is not None else M))
        if name != "gfdm":
            object.__setattr__(self, "alpha", 0.0)

    @property
    def pulse_kind(self) -> PulseKind:
        return _DEFAULTS[self.name][2]

    def params(self, cp_len: int = 0) -> GfdmParams:
        return GfdmParams(self.K, self.M, cp_len)

    def tx_window(self, params: Optional[GfdmParams] = None) -> WindowMatrix:
        params = params or self.params()
        return compute_tx_window(make_pulse(self.pulse_kind, params, self.alpha), params)

    @property
    def label(self) -> str:
        if self.name == "gfdm":
            return f"gfdm-K{self.K}-M{self.M}-a{self.alpha:g}"
        return f"{self.name}-K{self.K}-M{self.M}"


# --------------------------------------------------------------------------
# Scenario and results
# --------------------------------------------------------------------------


def parse_snr_grid(text: str) -> tuple[float, ...]:
    """Comma-separated SNR values in dB; each item is a number, ``inf``
    (noiseless) or an inclusive ``start:step:stop`` range."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ":" not in item:
                out.append(float(item))
                continue
            parts = item.split(":")
            if len(parts) != 3:
                raise ConfigError(f"SNR range must be start:step:stop, got {item!r}")
            start, step, stop = map(float, parts)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad SNR value {item!r}") from exc
        if step <= 0:
            raise ConfigError("SNR step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        out.extend(float(start + i * step) for i in range(max(n, 0)))
    return tuple(out)


@dataclass(frozen=True)
class Scenario:
    waveform: Waveform = field(default_factory=Waveform)
    receivers: tuple[str, ...] = ("diag-lmmse-zf",)
    channel: ChannelModel = field(default_factory=ChannelModel)
    snr_db_grid: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    n_channels: int = 200
    n_blocks_per_channel: int = 50
    seed: int = 0
    Mc: int = 16
    Es: float = 1.0
    name: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.receivers, str):
            object.__setattr__(self, "receivers", (self.receivers,))
        for r in self.receivers:
            ReceiverSpec.from_name(r)
        if not self.receivers or not self.snr_db_grid:
            raise ConfigError("receiver list and SNR grid must be non-empty")
        if self.n_channels < 1 or self.n_blocks_per_channel < 0:
            raise ConfigError("channel count must be positive and block count non-negative")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.channel.L - 1 >= self.waveform.K * self.waveform.M:
            raise ConfigError("channel is longer than the block")
        # Validates the waveform (roll-off constraints etc.) up front.
        self.waveform.tx_window()

    @property
    def scenario_id(self) -> str:
        if self.name:
            return self.name
        pdp = "uniform" if self.channel.pdp.value == "uniform" else f"exp{self.channel.decay_db:g}"
        return f"{self.waveform.label}-L{self.channel.L}-{pdp}-s{self.seed}"

    @property
    def params(self) -> GfdmParams:
        # Prefix just long enough for the channel.
        return self.waveform.params(cp_len=self.channel.L - 1)


def snr_to_sigma2(snr_db: float, Es: float = 1.0) -> float:
    return 0.0 if math.isinf(snr_db) and snr_db > 0 else Es * 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ResultRow:
    scenario_id: str
    snr_db: float
    receiver: str
    waveform: str
    avg_ser_empirical: Optional[float]
    avg_ser_analytic: Optional[float]
    avg_sinr_db: Optional[float]
    wall_time_s: Optional[float]
    n_symbols: int
    n_failed_channels: int = 0
    ser_std_error: Optional[float] = None


CSV_COLUMNS = [f.name for f in fields(ResultRow)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:

        def num(key):
            return float(rec[key]) if rec[key] != "" else None

        out.append(
            ResultRow(
                scenario_id=rec["scenario_id"],
                snr_db=float(rec["snr_db"]),
                receiver=rec["receiver"],
                waveform=rec["waveform"],
                avg_ser_empirical=num("avg_ser_empirical"),
                avg_ser_analytic=num("avg_ser_analytic"),
                avg_sinr_db=num("avg_sinr_db"),
                wall_time_s=num("wall_time_s"),
                n_symbols=int(rec["n_symbols"]),
                n_failed_channels=int(rec["n_failed_channels"]),
                ser_std_error=num("ser_std_error"),
            )
        )
    return out


# --------------------------------------------------------------------------
# Sweep
# --------------------------------------------------------------------------


@dataclass
class _Cell:
    """Per-channel results, indexed ``[receiver, snr]``."""

    ser_analytic: np.ndarray
    sinr_mean: np.ndarray
    errors: np.ndarray
    symbols: np.ndarray
    count_var: np.ndarray
    failed: np.ndarray
    seconds: np.ndarray


def _run_channel(args) -> _Cell:
    scenario, c = args
    params = scenario.params
    w_tx = scenario.waveform.tx_window(params)
    chan = draw_channel(scenario.channel, params, stream(scenario.seed, _CHANNEL_STREAM, c))
    n_rx, n_snr = len(scenario.receivers), len(scenario.snr_db_grid)
    cell = _Cell(
        ser_analytic=np.zeros((n_rx, n_snr)),
        sinr_mean=np.zeros((n_rx, n_snr)),
        errors=np.zeros((n_rx, n_snr), dtype=np.int64),
        symbols=np.zeros((n_rx, n_snr), dtype=np.int64),
        count_var=np.zeros((n_rx, n_snr)),
        failed=np.zeros((n_rx, n_snr), dtype=bool),
        seconds=np.zeros((n_rx, n_snr)),
    )
    n_symbols = scenario.n_blocks_per_channel * params.N
    for r, name in enumerate(scenario.receivers):
        for i, snr in enumerate(scenario.snr_db_grid):
            t0 = time.perf_counter()
            spec = ReceiverSpec.from_name(name, scenario.Es, snr_to_sigma2(snr, scenario.Es))
            try:
                design = design_receiver(chan, w_tx, spec, params)
                grid = receiver_sinr(chan, w_tx, spec, params, design)
            except GfdmError as exc:
                log.info("channel %d, %s at %s dB skipped: %s", c, name, snr, exc)
                cell.failed[r, i] = True
                continue
            cell.ser_analytic[r, i] = float(np.mean(analytic_ser_qam(grid.sinr, scenario.Mc)))
            cell.sinr_mean[r, i] = float(np.mean(grid.sinr))
            if n_symbols:
                # Same noise/data stream for every receiver so chains are compared on equal draws.
                est = empirical_ser(
                    spec, chan, w_tx, params, n_symbols,
                    stream(scenario.seed, _BLOCK_STREAM, c, i),
                    Mc=scenario.Mc, design=design, gain=grid.gain,
                )
                cell.errors[r, i] = int(est.errors.sum())
                cell.symbols[r, i] = est.n_symbols
                cell.count_var[r, i] = est.count_var
            cell.seconds[r, i] = time.perf_counter() - t0
    return cell


def run_sweep(
    scenario: Scenario, workers: int = 1, timing: bool = True
) -> list[ResultRow]:
    """Average analytic and simulated SER over channel draws at every SNR point.

    Results depend only on the scenario (including its seed), never on
    ``workers``. With ``timing=False`` the wall-time column is left empty so
    that outputs are byte-identical between runs.
    """
    tasks = [(scenario, c) for c in range(scenario.n_channels)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_channel, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        cells = [_run_channel(t) for t in tasks]

    # Reduction in channel order keeps float sums reproducible.
    failed = np.sum([c.failed for c in cells], axis=0)
    ok = [~c.failed for c in cells]
    ser_sum = np.sum([np.where(m, c.ser_analytic, 0.0) for c, m in zip(cells, ok)], axis=0)
    sinr_sum = np.sum([np.where(m, c.sinr_mean, 0.0) for c, m in zip(cells, ok)], axis=0)
    errors = np.sum([c.errors for c in cells], axis=0)
    symbols = np.sum([c.symbols for c in cells], axis=0)
    count_var = np.sum([c.count_var for c in cells], axis=0)
    seconds = np.sum([c.seconds for c in cells], axis=0)
    used = scenario.n_channels - failed

    rows = []
    for r, name in enumerate(scenario.receivers):
        for i, snr in enumerate(scenario.snr_db_grid):
            n_ok = int(used[r, i])
            if failed[r, i]:
                log.warning(
                    "%s at %s dB: %d of %d channels failed", name, snr, failed[r, i], scenario.n_channels
                )
            analytic = float(ser_sum[r, i] / n_ok) if n_ok else None
            sinr_db = None
            if n_ok:
                mean = sinr_sum[r, i] / n_ok
                sinr_db = float(10.0 * np.log10(mean)) if np.isfinite(mean) else math.inf
            empirical = float(errors[r, i] / symbols[r, i]) if symbols[r, i] else None
            std_error = None
            if symbols[r, i] and np.isfinite(count_var[r, i]):
                # Channels are independent, so count variances add.
                std_error = float(np.sqrt(count_var[r, i]) / symbols[r, i])
            rows.append(
                ResultRow(
                    scenario_id=scenario.scenario_id,
                    snr_db=float(snr),
                    receiver=name,
                    waveform=scenario.waveform.label,
                    avg_ser_empirical=empirical,
                    avg_ser_analytic=analytic,
                    avg_sinr_db=sinr_db,
                    wall_time_s=float(seconds[r, i]) if timing else None,
                    n_symbols=int(symbols[r, i]),
                    n_failed_channels=int(failed[r, i]),
                    ser_std_error=std_error,
                )
            )
    return rows
