"""Block-fading multipath channels, cyclic prefix handling and AWGN."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import GfdmParams, dft, idft, reshape_v
from .errors import ConfigError


class Pdp(str, Enum):
    EXPONENTIAL = "exp"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ChannelModel:
    """Tapped-delay-line model with ``L`` uncorrelated Rayleigh taps.

    ``decay_db`` is the exponential power decay per tap in dB; it is
    ignored for the uniform profile.
    """

    L: int = 24
    pdp: Pdp = Pdp.EXPONENTIAL
    decay_db: float = 1.0
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pdp", Pdp(self.pdp))
        if self.L < 1:
            raise ConfigError(f"tap count must be >= 1, got {self.L}")

    def weights(self) -> np.ndarray:
        """Mean power of each tap."""
        if self.pdp is Pdp.UNIFORM:
            p = np.ones(self.L)
        else:
            p = 10.0 ** (-self.decay_db * np.arange(self.L) / 10.0)
        if self.normalize:
            p = p / p.sum()
        return p

    @classmethod
    def parse(cls, text: str, L: int = 24) -> "ChannelModel":
        """Parse ``"uniform"`` or ``"exp:<dB per tap>"``."""
        text = text.strip().lower()
        if text == "uniform":
            return cls(L=L, pdp=Pdp.UNIFORM)
        if text.startswith("exp"):
            _, _, decay = text.partition(":")
            return cls(L=L, pdp=Pdp.EXPONENTIAL, decay_db=float(decay) if decay else 1.0)
        raise ConfigError(f"unknown power-delay profile {text!r}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    h_fd: np.ndarray
    per_m_diag: np.ndarray

    @property
    def L(self) -> int:
        return self.h.shape[0]

    @classmethod
    def from_taps(cls, h, params: GfdmParams) -> "ChannelRealization":
        h = np.asarray(h, dtype=complex)
        if h.ndim != 1 or h.shape[0] > params.N:
            raise ConfigError(f"taps must be a vector of length <= N={params.N}")
        padded = np.zeros(params.N, dtype=complex)
        padded[: h.shape[0]] = h
        h_fd = dft(padded)
        return cls(h=h, h_fd=h_fd, per_m_diag=reshape_v(h_fd, params))

    def to_json(self) -> str:
        return json.dumps({"taps": [[float(t.real), float(t.imag)] for t in self.h]})

    @classmethod
    def from_json(cls, text: str, params: GfdmParams) -> "ChannelRealization":
        taps = json.loads(text)["taps"]
        return cls.from_taps([complex(re, im) for re, im in taps], params)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path, params: GfdmParams) -> "ChannelRealization":
        return cls.from_json(Path(path).read_text(), params)


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circular-symmetric complex Gaussian samples of total variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_taps(model: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(model.weights()) * complex_normal(rng, model.L)


def draw_channel(
    model: ChannelModel, params: GfdmParams, rng: np.random.Generator
) -> ChannelRealization:
    return ChannelRealization.from_taps(draw_taps(model, rng), params)


def circular_convolve(x, h) -> np.ndarray:
    """Direct (non-FFT) circular convolution of ``x`` with taps ``h``."""
    x = np.asarray(x)
    y = np.zeros(x.shape, dtype=complex)
    for l, tap in enumerate(np.asarray(h)):
        y += tap * np.roll(x, l, axis=-1)
    return y


def apply_channel_cp(x, h, cp_len: int, sigma2: float, rng=None) -> np.ndarray:
    """Transmit with a cyclic prefix through a linear channel, then strip the prefix.

    ``x`` may be a stack of blocks ``(..., N)``. Noise of per-sample variance
    ``sigma2`` is added after the prefix is removed.
    """
    x = np.asarray(x, dtype=complex)
    h = np.asarray(h, dtype=complex)
    N = x.shape[-1]
    if cp_len < h.shape[0] - 1:
        raise ConfigError(
            f"cyclic prefix of {cp_len} samples is shorter than the channel delay spread "
            f"({h.shape[0] - 1} samples)"
        )
    if cp_len >= N:
        raise ConfigError("cyclic prefix must be shorter than the block")
    tx = np.concatenate([x[..., N - cp_len :], x], axis=-1) if cp_len else x
    rx = np.zeros(tx.shape, dtype=complex)
    for l, tap in enumerate(h):
        rx[..., l:] += tap * tx[..., : tx.shape[-1] - l]
    y = rx[..., cp_len:]
    return y + _noise(y.shape, sigma2, rng)


def apply_channel_circular(x, h_fd, sigma2: float, rng=None) -> np.ndarray:
    """Circular channel applied in frequency, noise added in time."""
    x = np.asarray(x, dtype=complex)
    y = idft(np.asarray(h_fd) * dft(x))
    return y + _noise(y.shape, sigma2, rng)


def _noise(shape, sigma2: float, rng) -> np.ndarray:
    if sigma2 < 0:
        raise ConfigError("noise variance must be non-negative")
    if sigma2 == 0:
        return np.zeros(shape, dtype=complex)
    if rng is None:
        raise ConfigError("a random generator is required when sigma2 > 0")
    return complex_normal(rng, shape, sigma2)
