"""Block geometry, prototype pulses, DFT conventions and modulator windows.

All transforms use the unnormalized forward DFT ``F_Q`` with
``[F_Q]_{a,b} = exp(-2j*pi*a*b/Q)``; the inverse is ``(1/Q) F_Q^H``.
Data matrices are vectorized column-major, so ``d[k + m*K] == D[k, m]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import ConfigError, SingularWindowError

#: Relative threshold below which a window or channel bin counts as zero.
EPS_INV = 1e-12


@dataclass(frozen=True)
class GfdmParams:
    """Geometry of one GFDM block: ``K`` subcarriers by ``M`` subsymbols."""

    K: int
    M: int
    cp_len: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        if self.cp_len < 0 or self.cp_len >= self.K * self.M:
            raise ConfigError(
                f"cp_len must satisfy 0 <= cp_len < N={self.K * self.M}, got {self.cp_len}"
            )

    @property
    def N(self) -> int:
        return self.K * self.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.K, self.M)


# --------------------------------------------------------------------------
# DFT conventions
# --------------------------------------------------------------------------


def dft(x, axis=-1):
    """Unnormalized forward DFT, ``F_Q x``."""
    return np.fft.fft(x, axis=axis)


def idft(x, axis=-1):
    """Inverse DFT, ``(1/Q) F_Q^H x``."""
    return np.fft.ifft(x, axis=axis)


def dft_matrix(Q: int) -> np.ndarray:
    """Dense ``Q x Q`` DFT matrix ``F_Q`` (for oracles and tests)."""
    n = np.arange(Q)
    return np.exp(-2j * np.pi * np.outer(n, n) / Q)


# --------------------------------------------------------------------------
# Reshaping
# --------------------------------------------------------------------------


def _check_len(x: np.ndarray, params: GfdmParams):
    if x.shape[-1] != params.N:
        raise ConfigError(f"expected trailing length N={params.N}, got {x.shape[-1]}")


def reshape_v(x, params: GfdmParams) -> np.ndarray:
    """Polyphase view ``V_{K,M}(x)``: ``out[..., q, p] == x[..., p + q*M]``.

    Leading axes are treated as a batch.
    """
    x = np.asarray(x)
    _check_len(x, params)
    return x.reshape(x.shape[:-1] + (params.K, params.M))


def unreshape_v(X) -> np.ndarray:
    """Inverse of :func:`reshape_v`."""
    X = np.asarray(X)
    return X.reshape(X.shape[:-2] + (X.shape[-2] * X.shape[-1],))


def vec(D) -> np.ndarray:
    """Column-major vectorization of the trailing two axes."""
    D = np.asarray(D)
    K, M = D.shape[-2:]
    return np.swapaxes(D, -1, -2).reshape(D.shape[:-2] + (K * M,))


def unvec(d, params: GfdmParams) -> np.ndarray:
    """Inverse of :func:`vec` for a ``K x M`` grid."""
    d = np.asarray(d)
    _check_len(d, params)
    return np.swapaxes(d.reshape(d.shape[:-1] + (params.M, params.K)), -1, -2)


# --------------------------------------------------------------------------
# Prototype pulses
# --------------------------------------------------------------------------


class PulseKind(str, Enum):
    PERIODIC_RC = "rc"
    RECT_TD = "rect-td"
    RECT_FD = "rect-fd"
    CHIRP = "chirp"


@dataclass(frozen=True, eq=False)
class PrototypePulse:
    kind: PulseKind
    g: np.ndarray
    g_fd: np.ndarray
    alpha: float = 0.0

    @property
    def N(self) -> int:
        return self.g.shape[0]


def raised_cosine_fd(params: GfdmParams, alpha: float) -> np.ndarray:
    """Unnormalized periodic raised-cosine spectrum over ``N`` bins.

    The passband spans ``M`` bins centred on the middle of the subcarrier:
    bin 0 for odd ``M`` and half a bin above it for even ``M``. Centring on
    a half bin keeps the support at exactly ``M`` bins when ``alpha == 0``
    and keeps the two overlapping tails of every residue class at different
    amplitudes, which is what makes the window free of zeros.
    """
    N, M = params.N, params.M
    center = 0.0 if M % 2 else 0.5
    l = np.arange(N)
    signed = np.where(l > N // 2, l - N, l).astype(float)
    f = np.abs(signed - center)
    # Distance wraps around the circle for small N.
    f = np.minimum(f, N - f)

    flat = M * (1.0 - alpha) / 2.0
    edge = M * (1.0 + alpha) / 2.0
    out = np.zeros(N)
    out[f <= flat] = 1.0
    if alpha > 0:
        roll = (f > flat) & (f <= edge)
        out[roll] = 0.5 * (1.0 + np.cos(np.pi * (f[roll] - flat) / (M * alpha)))
    return out


def make_pulse(
    kind: Union[PulseKind, str], params: GfdmParams, alpha: float = 0.0
) -> PrototypePulse:
    """Build a unit-energy prototype pulse of length ``N``.

    Parameters
    ----------
    kind : PulseKind or str
        ``"rc"`` (periodic raised cosine in frequency), ``"rect-td"``,
        ``"rect-fd"`` or ``"chirp"``.
    params : GfdmParams
        Block geometry.
    alpha : float
        Roll-off for the raised cosine; ignored otherwise. A nonzero value
        must satisfy ``M * alpha > 1`` so the roll-off covers a bin.
    """
    kind = PulseKind(kind)
    K, N = params.K, params.N

    if kind is PulseKind.PERIODIC_RC:
        if not 0.0 <= alpha < 1.0:
            raise ConfigError(f"roll-off must lie in [0, 1), got {alpha}")
        if alpha > 0 and params.M * alpha <= 1.0:
            raise ConfigError(
                f"roll-off {alpha} with M={params.M} violates M*alpha > 1 "
                "(the roll-off must span at least one frequency bin)"
            )
        g = idft(raised_cosine_fd(params, alpha).astype(complex))
    else:
        alpha = 0.0
        g = np.zeros(N, dtype=complex)
        if kind is PulseKind.RECT_TD:
            g[:] = 1.0
        elif kind is PulseKind.RECT_FD:
            g[0] = 1.0
        else:
            n = np.arange(K)
            g[:K] = np.exp(1j * np.pi * n**2 / K)

    g = g / np.linalg.norm(g)
    g_fd = dft(g)
    return PrototypePulse(kind=kind, g=g, g_fd=g_fd, alpha=float(alpha))


# --------------------------------------------------------------------------
# Windows
# --------------------------------------------------------------------------


class WindowRole(str, Enum):
    TX = "tx"
    RX = "rx"


@dataclass(frozen=True, eq=False)
class WindowMatrix:
    """``K x M`` window, the diagonal content of the modem factorization."""

    w: np.ndarray
    role: WindowRole = WindowRole.TX

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    def column_power(self) -> np.ndarray:
        """Per-subsymbol power ``sum_k |w[k, m]|^2`` (length ``M``)."""
        return np.sum(np.abs(self.w) ** 2, axis=0)


def compute_tx_window(pulse: PrototypePulse, params: GfdmParams) -> WindowMatrix:
    """Modulator window ``W_tx = F_K^H V_{K,M}(g_fd)``."""
    if pulse.N != params.N:
        raise ConfigError(f"pulse length {pulse.N} does not match N={params.N}")
    w = params.K * idft(reshape_v(pulse.g_fd, params), axis=0)
    return WindowMatrix(w=w, role=WindowRole.TX)


def zf_rx_window(w_tx: WindowMatrix, eps: float = EPS_INV) -> WindowMatrix:
    """Zero-forcing demodulator window: the elementwise reciprocal of ``w_tx``."""
    w = np.asarray(w_tx.w)
    mag = np.abs(w)
    tiny = mag <= eps * max(mag.max(), np.finfo(float).tiny)
    if np.any(tiny):
        k, m = np.argwhere(tiny)[0]
        raise SingularWindowError(
            f"transmit window is (numerically) zero at (k={k}, m={m}); ZF demodulation undefined",
            index=(int(k), int(m)),
        )
    return WindowMatrix(w=1.0 / w, role=WindowRole.RX)


def equal_amplitude_columns(w_tx: WindowMatrix, rtol: float = 1e-9) -> np.ndarray:
    """Boolean mask over ``m``: columns whose entries share one magnitude."""
    mag = np.abs(w_tx.w)
    ref = mag.max(axis=0, keepdims=True)
    return np.all(np.abs(mag - ref) <= rtol * np.maximum(ref, 1e-300), axis=0)
