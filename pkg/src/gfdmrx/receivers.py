"""GFDM-based linear receivers: channel equalization followed by windowed demodulation.

Each chain operates on the ``M`` parallel ``K``-sample signals obtained by
reshaping the received frequency-domain block, ``y~_m = V(y~)[:, m]``.
A chain is named ``<equalizer>-<demodulator>``, e.g. ``diag-lmmse-zf``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelRealization
from .core import (
    EPS_INV,
    GfdmParams,
    WindowMatrix,
    WindowRole,
    dft,
    dft_matrix,
    reshape_v,
    unreshape_v,
    zf_rx_window,
)
from .errors import ConfigError, SingularChannelError
from .modem import demodulate_fd

log = logging.getLogger(__name__)


class Ceq(str, Enum):
    ZF = "zf"
    FULL_LMMSE = "full-lmmse"
    DIAG_LMMSE = "diag-lmmse"


class Demod(str, Enum):
    ZF = "zf"
    LMMSE = "lmmse"


@dataclass(frozen=True)
class ReceiverSpec:
    ceq: Ceq
    demod: Demod
    Es: float = 1.0
    sigma2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ceq", Ceq(self.ceq))
        object.__setattr__(self, "demod", Demod(self.demod))
        if not self.Es > 0:
            raise ConfigError(f"symbol energy must be positive, got {self.Es}")
        if self.sigma2 < 0:
            raise ConfigError(f"noise variance must be non-negative, got {self.sigma2}")
        if self.ceq is Ceq.FULL_LMMSE and self.demod is Demod.LMMSE:
            raise ConfigError("full-lmmse equalization followed by lmmse demodulation is not a defined chain")

    @property
    def name(self) -> str:
        return f"{self.ceq.value}-{self.demod.value}"

    @classmethod
    def from_name(cls, name: str, Es: float = 1.0, sigma2: float = 0.0) -> "ReceiverSpec":
        """Parse ``"zf-zf"``, ``"diag-lmmse-zf"``, ``"full-lmmse-zf"`` or ``"zf-lmmse"``."""
        ceq, sep, demod = name.strip().lower().rpartition("-")
        if not sep:
            raise ConfigError(f"receiver name {name!r} must look like '<ceq>-<demod>'")
        try:
            return cls(Ceq(ceq), Demod(demod), Es=Es, sigma2=sigma2)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"unknown receiver {name!r}") from exc

    def with_noise(self, sigma2: float) -> "ReceiverSpec":
        return ReceiverSpec(self.ceq, self.demod, self.Es, sigma2)


RECEIVER_NAMES = ("zf-zf", "diag-lmmse-zf", "full-lmmse-zf", "zf-lmmse")


def fd_noise_var(sigma2: float, params: GfdmParams) -> float:
    """Per-bin noise variance after the ``N``-DFT, ``N * sigma2``."""
    return params.N * sigma2


# --------------------------------------------------------------------------
# Equalizers
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EqualizerBank:
    """Per-subsymbol equalizers.

    ``per_m`` is a ``K x M`` array of per-bin gains when ``diagonal`` is set,
    otherwise an ``(M, K, K)`` stack of matrices.
    """

    per_m: np.ndarray
    diagonal: bool

    def apply(self, y_fd) -> np.ndarray:
        K = self.per_m.shape[0] if self.diagonal else self.per_m.shape[1]
        M = self.per_m.shape[1] if self.diagonal else self.per_m.shape[0]
        Y = reshape_v(y_fd, GfdmParams(K, M))
        if self.diagonal:
            return unreshape_v(self.per_m * Y)
        return unreshape_v(np.einsum("mkq,...qm->...km", self.per_m, Y))

    def matrices(self) -> np.ndarray:
        """Dense ``(M, K, K)`` view regardless of storage."""
        if not self.diagonal:
            return self.per_m
        K, M = self.per_m.shape
        out = np.zeros((M, K, K), dtype=complex)
        idx = np.arange(K)
        out[:, idx, idx] = self.per_m.T
        return out


def _check_channel(chan: ChannelRealization, eps: float = EPS_INV):
    mag = np.abs(chan.h_fd)
    bad = np.flatnonzero(mag <= eps * max(mag.max(), np.finfo(float).tiny))
    if bad.size:
        raise SingularChannelError(
            f"frequency-domain channel bin {bad[0]} is (numerically) zero; ZF equalization undefined",
            index=int(bad[0]),
        )


def zf_bank(chan: ChannelRealization) -> EqualizerBank:
    _check_channel(chan)
    return EqualizerBank(1.0 / chan.per_m_diag, diagonal=True)


def diag_lmmse_bank(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> EqualizerBank:
    """Per-bin LMMSE with the data covariance replaced by its diagonal.

    ``e[k,m] = conj(h) / (|h|^2 + K sigma~^2 / (M Es P_m))`` where
    ``P_m = sum_k |W_tx[k,m]|^2``.
    """
    if spec.sigma2 == 0:
        return zf_bank(chan)
    H = chan.per_m_diag
    P = w_tx.column_power()
    reg = np.full(params.M, np.inf)
    np.divide(
        params.K * fd_noise_var(spec.sigma2, params), params.M * spec.Es * P, out=reg, where=P > 0
    )
    return EqualizerBank(H.conj() / (np.abs(H) ** 2 + reg[None, :]), diagonal=True)


def full_lmmse_bank(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> EqualizerBank:
    """Per-subsymbol ``K x K`` LMMSE equalizers.

    ``G_m = (H_m^H H_m + sigma~^2 R_m^{-1})^{-1} H_m^H`` with the equalized
    data covariance ``R_m = (M Es / K) F_K |Lambda_m|^2 F_K^H``.
    """
    K, M = params.K, params.M
    if spec.sigma2 == 0:
        return EqualizerBank(zf_bank(chan).matrices(), diagonal=False)
    power = np.abs(w_tx.w) ** 2
    floor = EPS_INV * power.max()
    if np.any(power <= floor):
        # Regularize R_m + eps I with eps = 1e-12 trace(R) / K, using the largest
        # column trace so that all-zero columns are covered too.
        eps = 1e-12 * (M * spec.Es / K) * power.sum(axis=0).max()
        log.warning("transmit window has zero entries; regularizing data covariance by %.3g", eps)
        power = power + eps / (M * spec.Es)
    F = dft_matrix(K)
    # R_m^{-1} = F diag(1 / |w|^2) F^H / (M Es K)
    R_inv = np.einsum("ak,km,bk->mab", F, 1.0 / power, F.conj()) / (M * spec.Es * K)
    H = chan.per_m_diag.T  # (M, K)
    gram = np.zeros((M, K, K), dtype=complex)
    idx = np.arange(K)
    gram[:, idx, idx] = np.abs(H) ** 2
    lhs = gram + fd_noise_var(spec.sigma2, params) * R_inv
    rhs = np.zeros((M, K, K), dtype=complex)
    rhs[:, idx, idx] = H.conj()
    return EqualizerBank(np.linalg.solve(lhs, rhs), diagonal=False)


def equalizer_bank(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> EqualizerBank:
    if spec.ceq is Ceq.ZF:
        return zf_bank(chan)
    if spec.ceq is Ceq.DIAG_LMMSE:
        return diag_lmmse_bank(chan, w_tx, spec, params)
    return full_lmmse_bank(chan, w_tx, spec, params)


def ceq_zf(y_fd, chan: ChannelRealization) -> np.ndarray:
    _check_channel(chan)
    return np.asarray(y_fd) / chan.h_fd


def ceq_diag_lmmse(y_fd, chan, w_tx, spec, params) -> np.ndarray:
    return diag_lmmse_bank(chan, w_tx, spec, params).apply(y_fd)


def ceq_full_lmmse(y_fd, chan, w_tx, spec, params) -> np.ndarray:
    return full_lmmse_bank(chan, w_tx, spec, params).apply(y_fd)


# --------------------------------------------------------------------------
# Demodulator windows
# --------------------------------------------------------------------------


def noise_trace(chan: ChannelRealization) -> np.ndarray:
    """``Omega_m = trace((H_m H_m^H)^{-1})`` for every subsymbol (length ``M``)."""
    _check_channel(chan)
    return np.sum(1.0 / np.abs(chan.per_m_diag) ** 2, axis=0)


def demod_lmmse_window(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> WindowMatrix:
    """Diagonally constrained LMMSE window for use after ZF equalization.

    ``w_rx = conj(w_tx) / (|w_tx|^2 + sigma~^2 Omega_m / (Es N))``
    """
    omega = noise_trace(chan)
    if spec.sigma2 == 0:
        return zf_rx_window(w_tx)
    reg = fd_noise_var(spec.sigma2, params) * omega / (spec.Es * params.N)
    w = w_tx.w
    return WindowMatrix(w.conj() / (np.abs(w) ** 2 + reg[None, :]), role=WindowRole.RX)


def rx_window(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> WindowMatrix:
    if spec.demod is Demod.LMMSE:
        return demod_lmmse_window(chan, w_tx, spec, params)
    return zf_rx_window(w_tx)


# --------------------------------------------------------------------------
# Chains
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReceiverDesign:
    """Equalizer bank and demodulator window for one channel realization."""

    spec: ReceiverSpec
    params: GfdmParams
    bank: EqualizerBank
    w_rx: WindowMatrix

    def equalize(self, y_fd) -> np.ndarray:
        return self.bank.apply(y_fd)

    def demodulate_fd(self, y_fd) -> np.ndarray:
        return demodulate_fd(self.equalize(y_fd), self.w_rx)

    def __call__(self, y_td) -> np.ndarray:
        return self.demodulate_fd(dft(y_td))


def design_receiver(
    chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> ReceiverDesign:
    bank = equalizer_bank(chan, w_tx, spec, params)
    return ReceiverDesign(spec, params, bank, rx_window(chan, w_tx, spec, params))


def run_receiver(
    y_td, chan: ChannelRealization, w_tx: WindowMatrix, spec: ReceiverSpec, params: GfdmParams
) -> np.ndarray:
    """DFT, equalize, demodulate. Returns the ``K x M`` estimate (or a stack)."""
    return design_receiver(chan, w_tx, spec, params)(y_td)
