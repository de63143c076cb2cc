"""Dense ``N x N`` reference receivers.

These treat channel and modulation as one linear system and are only meant
for verifying the decoupled chains at small block sizes.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization
from .core import GfdmParams, unvec, vec
from .modem import GfdmMatrixFactors, _check_dense, modulate_fd
from .receivers import ReceiverSpec, design_receiver, fd_noise_var


def effective_channel(chan: ChannelRealization, A_fd) -> np.ndarray:
    return chan.h_fd[:, None] * np.asarray(A_fd)


def joint_lmmse_matrix(chan, A_fd, spec: ReceiverSpec, params: GfdmParams, form: int = 1):
    """Joint LMMSE filter ``W^H`` for ``y~ = H~ A~ d + v~``.

    ``form=1``: ``Es G^H (Es G G^H + s I)^{-1}``;
    ``form=2``: ``(G^H G / s + I / Es)^{-1} G^H / s`` with ``s = N sigma2``.
    Without noise both reduce to ``G^{-1}``.
    """
    _check_dense(params.N)
    G = effective_channel(chan, A_fd)
    s = fd_noise_var(spec.sigma2, params)
    eye = np.eye(params.N)
    if s == 0:
        return np.linalg.inv(G)
    Gh = G.conj().T
    if form == 1:
        return spec.Es * np.linalg.solve((spec.Es * G @ Gh + s * eye).T, Gh.T).T
    if form == 2:
        return np.linalg.solve(Gh @ G / s + eye / spec.Es, Gh / s)
    raise ValueError(f"form must be 1 or 2, got {form}")


def joint_lmmse_oracle(y_fd, chan, A_fd, spec: ReceiverSpec, params: GfdmParams, form: int = 1):
    W = joint_lmmse_matrix(chan, A_fd, spec, params, form)
    return unvec(W @ np.asarray(y_fd), params)


def full_lmmse_ceq_dense(chan, A_fd, spec: ReceiverSpec, params: GfdmParams) -> np.ndarray:
    """``(H^H H + (s/Es) [A~ A~^H]^{-1})^{-1} H^H`` over the whole block."""
    A_fd = np.asarray(A_fd)
    s = fd_noise_var(spec.sigma2, params)
    Hd = np.diag(chan.h_fd)
    Rx_inv = np.linalg.inv(A_fd @ A_fd.conj().T)
    return np.linalg.solve(Hd.conj().T @ Hd + (s / spec.Es) * Rx_inv, Hd.conj().T)


def zf_lmmse_demodulator_dense(chan, A_fd, spec: ReceiverSpec, params: GfdmParams) -> np.ndarray:
    """Unconstrained LMMSE demodulator after ZF equalization.

    ``B^H = A~^H (A~ A~^H + R / Es)^{-1}`` with the post-ZF noise covariance
    ``R = s (H~ H~^H)^{-1}``.
    """
    A_fd = np.asarray(A_fd)
    s = fd_noise_var(spec.sigma2, params)
    R = np.diag(s / np.abs(chan.h_fd) ** 2)
    lhs = A_fd @ A_fd.conj().T + R / spec.Es
    return np.linalg.solve(lhs.T, A_fd.conj()).T


def lmmse_paths(y_fd, chan, A_fd, spec: ReceiverSpec, params: GfdmParams) -> dict:
    """Estimates of ``D`` from the three equivalent routes.

    ``joint``: dense joint LMMSE; ``ceq_then_zf``: dense LMMSE equalization
    then ``A~^{-1}``; ``zf_then_demod``: ZF equalization then the dense
    LMMSE demodulator.
    """
    y_fd = np.asarray(y_fd)
    A_fd = np.asarray(A_fd)
    joint = joint_lmmse_oracle(y_fd, chan, A_fd, spec, params)
    ceq = full_lmmse_ceq_dense(chan, A_fd, spec, params) @ y_fd
    path1 = unvec(np.linalg.solve(A_fd, ceq), params)
    B = zf_lmmse_demodulator_dense(chan, A_fd, spec, params)
    path2 = unvec(B @ (y_fd / chan.h_fd), params)
    return {"joint": joint, "ceq_then_zf": path1, "zf_then_demod": path2}


def demod_gamma(factors: GfdmMatrixFactors, chan, spec: ReceiverSpec, params: GfdmParams):
    """Inner matrix ``Gamma = Lambda^H (Lambda Lambda^H + V_f^H R V_f / Es)^{-1}``.

    It is diagonal exactly when the unconstrained LMMSE demodulator is itself
    a GFDM demodulator.
    """
    s = fd_noise_var(spec.sigma2, params)
    lam = factors.lambda_tx
    R = np.diag(s / np.abs(chan.h_fd) ** 2)
    inner = np.diag(np.abs(lam) ** 2) + factors.V_f.conj().T @ R @ factors.V_f / spec.Es
    return np.linalg.solve(inner.T, np.diag(lam.conj())).T


def dense_sinr(chan, w_tx, spec: ReceiverSpec, params: GfdmParams, A_fd=None) -> np.ndarray:
    """Per-symbol SINR from the end-to-end matrices of a receiver chain.

    The chain is applied to every unit data vector (through channel and
    modulator) and to every unit noise bin; the ``K x M`` result uses no
    structure of the closed-form analysis.
    """
    _check_dense(params.N)
    if A_fd is None:
        # Column j of A~ is the FD block for the j-th unit data vector.
        A_fd = modulate_fd(unvec(np.eye(params.N), params), w_tx).T
    design = design_receiver(chan, w_tx, spec, params)
    # Columns of the inputs become stacked blocks.
    S = vec(design.demodulate_fd((chan.h_fd[:, None] * A_fd).T)).T
    Nm = vec(design.demodulate_fd(np.eye(params.N, dtype=complex))).T
    diag = np.abs(np.diagonal(S)) ** 2
    interf = np.sum(np.abs(S) ** 2, axis=1) - diag
    noise = fd_noise_var(spec.sigma2, params) * np.sum(np.abs(Nm) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        sinr = spec.Es * diag / (spec.Es * interf + noise)
    return unvec(sinr, params)
