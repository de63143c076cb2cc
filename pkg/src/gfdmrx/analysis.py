"""Per-symbol SINR of GFDM-based receivers, QAM symbol error rates, and Monte-Carlo checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .channel import ChannelRealization, apply_channel_circular
from .core import GfdmParams, WindowMatrix, dft, idft
from .errors import ConfigError
from .modem import modulate_td
from .receivers import ReceiverDesign, ReceiverSpec, design_receiver, fd_noise_var


@dataclass(frozen=True, eq=False)
class EffectiveMatrices:
    """Per-subsymbol signal and noise transfer matrices, each ``(M, K, K)``.

    ``C[m] = B_m^H G_m H_m A_m`` maps the spread data ``(D F_M)[:, m]`` to its
    estimate and ``E[m] = B_m^H G_m`` maps the frequency-domain noise.
    """

    C: np.ndarray
    E: np.ndarray


def effective_matrices(
    chan: ChannelRealization,
    w_tx: WindowMatrix,
    spec: ReceiverSpec,
    params: GfdmParams,
    design: Optional[ReceiverDesign] = None,
) -> EffectiveMatrices:
    if design is None:
        design = design_receiver(chan, w_tx, spec, params)
    G = design.bank.matrices()  # (M, K, K)
    w_rx = design.w_rx.w.T[:, :, None]  # (M, K, 1)
    h = chan.per_m_diag.T[:, None, :]  # (M, 1, K)
    wt = w_tx.w.T[:, None, :]
    # Circulant products via K-point transforms:
    #   (1/K) F diag(w) F^H Y  == fft(w * ifft(Y, rows), rows)
    #   Y (1/K) F diag(w) F^H  == ifft(fft(Y, cols) * w, cols)
    E = dft(w_rx * idft(G, axis=-2), axis=-2)
    C = idft(dft(E * h, axis=-1) * wt, axis=-1)
    return EffectiveMatrices(C=C, E=E)


@dataclass(frozen=True, eq=False)
class SinrGrid:
    """Per-symbol powers on the ``K x M`` grid, linear scale."""

    gain: np.ndarray
    P: np.ndarray
    I_isi: np.ndarray
    I_ici: np.ndarray
    noise: np.ndarray
    sinr: np.ndarray

    @property
    def sinr_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.sinr)

    def to_dict(self) -> dict:
        return {
            name: getattr(self, name).tolist()
            for name in ("P", "I_isi", "I_ici", "noise", "sinr")
        }


def closed_form_sinr(eff: EffectiveMatrices, Es: float, sigma2: float, params: GfdmParams) -> SinrGrid:
    M = params.M
    C, E = eff.C, eff.E
    diag = np.diagonal(C, axis1=-2, axis2=-1)  # (M, K)
    gain = diag.mean(axis=0)
    P = Es * np.abs(gain) ** 2
    # Written as a variance so it is non-negative by construction.
    isi = Es * np.mean(np.abs(diag - gain) ** 2, axis=0)
    total = np.sum(np.abs(C) ** 2, axis=-1)  # (M, K)
    ici = Es * np.mean(total - np.abs(diag) ** 2, axis=0)
    ici = np.maximum(ici, 0.0)
    noise = fd_noise_var(sigma2, params) / M**2 * np.sum(np.abs(E) ** 2, axis=(0, 2))
    denom = isi + ici + noise
    with np.errstate(divide="ignore"):
        sinr = np.where(denom > 0, P / np.where(denom > 0, denom, 1.0), np.inf)

    def grid(v):
        return np.repeat(np.asarray(v)[:, None], M, axis=1)

    return SinrGrid(
        gain=grid(gain), P=grid(P), I_isi=grid(isi), I_ici=grid(ici), noise=grid(noise), sinr=grid(sinr)
    )


def receiver_sinr(chan, w_tx, spec: ReceiverSpec, params: GfdmParams, design=None) -> SinrGrid:
    """Shortcut: effective matrices then closed-form SINR."""
    eff = effective_matrices(chan, w_tx, spec, params, design)
    return closed_form_sinr(eff, spec.Es, spec.sigma2, params)


# --------------------------------------------------------------------------
# Symbol error rate
# --------------------------------------------------------------------------


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def analytic_ser_qam(sinr, Mc: int = 16):
    """Square ``Mc``-QAM symbol error rate at the given SINR (Gaussian disturbance)."""
    root = int(round(np.sqrt(Mc)))
    if root * root != Mc or Mc < 4:
        raise ConfigError(f"constellation size must be a perfect square >= 4, got {Mc}")
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ConfigError("SINR must be non-negative")
    a = 2.0 * (root - 1) / root
    q = a * qfunc(np.sqrt(3.0 * sinr / (Mc - 1)))
    # 1 - (1 - q)^2 without cancellation at small q.
    out = q * (2.0 - q)
    return float(out) if out.ndim == 0 else out


analytic_ser_16qam = analytic_ser_qam


class QamConstellation:
    """Gray-mapped square QAM with mean symbol energy ``Es``."""

    def __init__(self, Mc: int = 16, Es: float = 1.0):
        root = int(round(np.sqrt(Mc)))
        if root * root != Mc or Mc < 4:
            raise ConfigError(f"constellation size must be a perfect square >= 4, got {Mc}")
        self.Mc = Mc
        self.root = root
        self.Es = Es
        # Mean energy of the integer grid {+-1, +-3, ...}^2 is 2 (Mc - 1) / 3.
        self.scale = np.sqrt(3.0 * Es / (2.0 * (Mc - 1)))
        levels = (2 * np.arange(root) - (root - 1)) * self.scale
        i, q = np.divmod(np.arange(Mc), root)
        self.points = levels[i] + 1j * levels[q]
        gray = np.arange(root) ^ (np.arange(root) >> 1)
        self.labels = gray[i] * root + gray[q]

    def map(self, indices) -> np.ndarray:
        return self.points[np.asarray(indices)]

    def detect(self, samples) -> np.ndarray:
        """Minimum-distance decision, returning point indices."""
        samples = np.asarray(samples)
        top = self.root - 1

        def axis(v):
            return np.clip(np.rint((v / self.scale + top) / 2.0), 0, top).astype(np.int64)

        return axis(samples.real) * self.root + axis(samples.imag)


@dataclass(frozen=True, eq=False)
class SerEstimate:
    ser: float
    errors: np.ndarray  # (K, M) error counts
    n_blocks: int
    block_sq: float = 0.0  # sum over blocks of squared per-block error counts

    @property
    def n_symbols(self) -> int:
        return int(self.n_blocks * self.errors.size)

    @property
    def count_var(self) -> float:
        """Estimated variance of the total error count, from block-to-block spread.

        Errors inside one block share the noise realization and are not
        independent, so this is wider than the binomial variance.
        """
        n = self.n_blocks
        if n < 2:
            return float("nan")
        mean = self.errors.sum() / n
        return n * max(self.block_sq - n * mean**2, 0.0) / (n - 1)

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.count_var) / self.n_symbols)

    @property
    def per_symbol(self) -> np.ndarray:
        return self.errors / self.n_blocks


def _simulate(chan, w_tx, spec, params, n_blocks, rng, const, design, batch):
    """Yield (true indices, estimates) per batch of blocks."""
    K, M = params.K, params.M
    done = 0
    while done < n_blocks:
        b = min(batch, n_blocks - done)
        idx = rng.integers(const.Mc, size=(b, K, M))
        x = modulate_td(const.map(idx), w_tx)
        y = apply_channel_circular(x, chan.h_fd, spec.sigma2, rng)
        yield idx, design(y)
        done += b


def _batch_size(params: GfdmParams) -> int:
    return max(1, 2**20 // params.N)


def empirical_ser(
    spec: ReceiverSpec,
    chan: ChannelRealization,
    w_tx: WindowMatrix,
    params: GfdmParams,
    n_symbols: int,
    rng: np.random.Generator,
    Mc: int = 16,
    design: Optional[ReceiverDesign] = None,
    gain: Optional[np.ndarray] = None,
) -> SerEstimate:
    """Monte-Carlo SER through modulator, channel, receiver and a hard slicer.

    Estimates are divided by the closed-form symbol gain before slicing, so
    biased (LMMSE) receivers are scored on the same footing as the analytic
    formula.
    """
    K, M = params.K, params.M
    if n_symbols < K * M:
        raise ConfigError(f"need at least one block ({K * M} symbols), got {n_symbols}")
    if design is None:
        design = design_receiver(chan, w_tx, spec, params)
    if gain is None:
        gain = receiver_sinr(chan, w_tx, spec, params, design).gain
    const = QamConstellation(Mc, spec.Es)
    n_blocks = -(-n_symbols // (K * M))
    errors = np.zeros((K, M), dtype=np.int64)
    block_sq = 0
    for idx, est in _simulate(chan, w_tx, spec, params, n_blocks, rng, const, design, _batch_size(params)):
        wrong = const.detect(est / gain) != idx
        errors += np.sum(wrong, axis=0)
        block_sq += int(np.sum(np.sum(wrong, axis=(1, 2)) ** 2))
    return SerEstimate(
        ser=float(errors.sum() / (n_blocks * K * M)), errors=errors, n_blocks=n_blocks, block_sq=float(block_sq)
    )


def empirical_sinr(
    spec: ReceiverSpec,
    chan: ChannelRealization,
    w_tx: WindowMatrix,
    params: GfdmParams,
    n_blocks: int,
    rng: np.random.Generator,
    Mc: int = 16,
    design: Optional[ReceiverDesign] = None,
    pool: str = "none",
) -> np.ndarray:
    """Per-symbol SINR estimated from known transmitted data.

    The gain is the least-squares fit of the estimate onto the sent symbol;
    everything left over counts as interference plus noise. ``pool`` merges
    the statistics of symbols that share one SINR: ``"subsymbols"`` pools
    each subcarrier (rows of the result become constant, sampling spread
    drops by ``sqrt(M)``) and ``"all"`` pools the whole grid.
    """
    if pool not in ("none", "subsymbols", "all"):
        raise ConfigError(f"pool must be 'none', 'subsymbols' or 'all', got {pool!r}")
    if n_blocks < 100:
        raise ConfigError(f"need at least 100 blocks, got {n_blocks}")
    if design is None:
        design = design_receiver(chan, w_tx, spec, params)
    const = QamConstellation(Mc, spec.Es)
    K, M = params.K, params.M
    cross = np.zeros((K, M), dtype=complex)
    power = np.zeros((K, M))
    est_power = np.zeros((K, M))
    for idx, est in _simulate(chan, w_tx, spec, params, n_blocks, rng, const, design, _batch_size(params)):
        D = const.map(idx)
        cross += np.sum(est * D.conj(), axis=0)
        power += np.sum(np.abs(D) ** 2, axis=0)
        est_power += np.sum(np.abs(est) ** 2, axis=0)
    if pool != "none":
        axes = (0, 1) if pool == "all" else 1
        cross, power, est_power = (
            np.broadcast_to(v.sum(axis=axes, keepdims=True), (K, M)) for v in (cross, power, est_power)
        )
    gain = cross / power
    signal = np.abs(gain) ** 2 * power
    resid = est_power - signal
    with np.errstate(divide="ignore"):
        return signal / np.maximum(resid, 0.0)
