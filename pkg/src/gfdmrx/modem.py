"""Frequency-domain GFDM modem and its dense matrix counterparts.

The fast path works on stacked blocks: symbol grids of shape ``(..., K, M)``
and frequency-domain blocks of shape ``(..., N)``. Dense ``N x N`` matrices
are only built for verification and are capped at ``MAX_DENSE_N``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    GfdmParams,
    PrototypePulse,
    WindowMatrix,
    dft,
    dft_matrix,
    idft,
    reshape_v,
    unreshape_v,
    unvec,
)
from .errors import ConfigError

MAX_DENSE_N = 4096


def _check_dense(N: int):
    if N > MAX_DENSE_N:
        raise ConfigError(f"dense construction limited to N <= {MAX_DENSE_N}, got N={N}")


# --------------------------------------------------------------------------
# Reference (time-domain) modulator
# --------------------------------------------------------------------------


def modulate_reference_td(D, pulse: PrototypePulse) -> np.ndarray:
    """Literal double-sum GFDM modulator.

    ``x[n] = sum_{k,m} D[k,m] g[(n - mK) mod N] exp(2j pi k n / K)``
    """
    D = np.asarray(D, dtype=complex)
    K, M = D.shape
    N = K * M
    if pulse.N != N:
        raise ConfigError(f"pulse length {pulse.N} does not match grid {K}x{M}")
    n = np.arange(N)
    x = np.zeros(N, dtype=complex)
    for m in range(M):
        shifted = pulse.g[(n - m * K) % N]
        for k in range(K):
            x += D[k, m] * shifted * np.exp(2j * np.pi * k * n / K)
    return x


def build_modulation_matrix(
    pulse: PrototypePulse, params: GfdmParams, fd: bool = False
) -> np.ndarray:
    """Dense modulation matrix ``A`` with ``[A]_{n, k+mK} = g[(n-mK) mod N] e^{j2pi kn/K}``.

    With ``fd=True`` returns ``F_N A`` instead.
    """
    K, N = params.K, params.N
    _check_dense(N)
    n = np.arange(N)[:, None]
    col = np.arange(N)[None, :]
    k = col % K
    m = col // K
    A = pulse.g[(n - m * K) % N] * np.exp(2j * np.pi * k * n / K)
    if fd:
        return dft(A, axis=0)
    return A


# --------------------------------------------------------------------------
# Fast frequency-domain modem
# --------------------------------------------------------------------------


def modulate_fd(D, w_tx: WindowMatrix) -> np.ndarray:
    """FD modulator: ``V(x~) = F_K (W_tx * [(1/K) F_K^H D F_M])``.

    Accepts a stack of grids ``(..., K, M)`` and returns ``(..., N)``.
    """
    D = np.asarray(D)
    if D.shape[-2:] != w_tx.shape:
        raise ConfigError(f"grid shape {D.shape[-2:]} does not match window {w_tx.shape}")
    spread = idft(dft(D, axis=-1), axis=-2)
    return unreshape_v(dft(w_tx.w * spread, axis=-2))


def demodulate_fd(y_eq_fd, w_rx: WindowMatrix) -> np.ndarray:
    """FD demodulator: ``D^ = (1/M) F_K (W_rx * [(1/K) F_K^H V(y~_eq)]) F_M^H``."""
    y = np.asarray(y_eq_fd)
    K, M = w_rx.shape
    Y = reshape_v(y, GfdmParams(K, M))
    return idft(dft(w_rx.w * idft(Y, axis=-2), axis=-2), axis=-1)


def modulate_td(D, w_tx: WindowMatrix) -> np.ndarray:
    """Time-domain block via the FD modulator followed by an ``N``-IDFT."""
    return idft(modulate_fd(D, w_tx))


# --------------------------------------------------------------------------
# Commutation matrices and the FD factorization
# --------------------------------------------------------------------------


def commutation_indices(Q: int, P: int) -> np.ndarray:
    """Index map ``idx`` with ``vec(X.T) == vec(X)[idx]`` for ``X`` of shape ``(Q, P)``."""
    if Q < 1 or P < 1:
        raise ConfigError("commutation sizes must be positive")
    # vec(X.T)[p + q P] = X[q, p] = vec(X)[q + p Q]
    q, p = np.meshgrid(np.arange(Q), np.arange(P), indexing="ij")
    idx = np.empty(Q * P, dtype=np.intp)
    idx[(p + q * P).ravel()] = (q + p * Q).ravel()
    return idx


def commutation_matrix(Q: int, P: int) -> np.ndarray:
    """Permutation matrix ``P_{Q,P}`` of size ``QP x QP``: ``vec(X.T) = P vec(X)``."""
    idx = commutation_indices(Q, P)
    out = np.zeros((Q * P, Q * P))
    out[np.arange(Q * P), idx] = 1.0
    return out


def block_dft(P: int, Q: int) -> np.ndarray:
    """Unitary ``U_{P,Q} = (1/sqrt(Q)) I_P kron F_Q``."""
    return np.kron(np.eye(P), dft_matrix(Q)) / np.sqrt(Q)


@dataclass(frozen=True, eq=False)
class GfdmMatrixFactors:
    """Unitary factorization ``A~ = V_f diag(lambda_tx) U_t``."""

    V_f: np.ndarray
    U_t: np.ndarray
    lambda_tx: np.ndarray

    def modulation_matrix(self) -> np.ndarray:
        return (self.V_f * self.lambda_tx) @ self.U_t

    def demodulation_matrix(self, w_rx: WindowMatrix) -> np.ndarray:
        """``B~ = V_f Lambda_rx^H U_t`` with ``Lambda_rx = diag(vec(W_rx)) / sqrt(M)``."""
        M = w_rx.shape[1]
        lam_rx = np.swapaxes(w_rx.w, 0, 1).ravel() / np.sqrt(M)
        return (self.V_f * lam_rx.conj()) @ self.U_t


def build_factors(w_tx: WindowMatrix, params: GfdmParams) -> GfdmMatrixFactors:
    K, M, N = params.K, params.M, params.N
    _check_dense(N)
    P_KM = commutation_matrix(K, M)
    P_MK = commutation_matrix(M, K)
    U_MK = block_dft(M, K)
    U_KM = block_dft(K, M)
    V_f = P_KM @ U_MK
    U_t = U_MK.conj().T @ P_MK @ U_KM @ P_KM
    lambda_tx = np.sqrt(M) * np.swapaxes(w_tx.w, 0, 1).ravel()
    return GfdmMatrixFactors(V_f=V_f, U_t=U_t, lambda_tx=lambda_tx)


def demodulate_matrix(y_eq_fd, factors: GfdmMatrixFactors, w_rx: WindowMatrix, params):
    """Demodulate through the dense factor path ``d^ = B~^H y~_eq``."""
    B = factors.demodulation_matrix(w_rx)
    return unvec(B.conj().T @ np.asarray(y_eq_fd), params)


# --------------------------------------------------------------------------
# Debug dumps
# --------------------------------------------------------------------------


def dump_complex_matrix(path, arr) -> None:
    """Write ``arr`` as two little-endian uint32 dims then row-major complex64 pairs."""
    arr = np.atleast_2d(np.asarray(arr))
    if arr.ndim != 2:
        raise ConfigError("only 2-D arrays can be dumped")
    rows, cols = arr.shape
    with open(Path(path), "wb") as fh:
        fh.write(struct.pack("<II", rows, cols))
        fh.write(np.ascontiguousarray(arr, dtype="<c8").tobytes())


def load_complex_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    rows, cols = struct.unpack("<II", data[:8])
    return np.frombuffer(data[8:], dtype="<c8").reshape(rows, cols).copy()
