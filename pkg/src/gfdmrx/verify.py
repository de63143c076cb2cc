"""Identity checks run by ``gfdmrx verify``.

Every check returns the measured deviation and the tolerance it must stay
under. All checks always run; the first failing one names the exit status.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .analysis import receiver_sinr, effective_matrices
from .channel import ChannelModel, draw_channel
from .core import (
    GfdmParams,
    WindowMatrix,
    compute_tx_window,
    dft,
    dft_matrix,
    equal_amplitude_columns,
    make_pulse,
    vec,
    zf_rx_window,
)
from .modem import (
    build_factors,
    build_modulation_matrix,
    demodulate_fd,
    demodulate_matrix,
    modulate_fd,
    modulate_reference_td,
)
from .oracles import dense_sinr, joint_lmmse_matrix, lmmse_paths
from .receivers import RECEIVER_NAMES, ReceiverSpec, design_receiver


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value, "tol": self.tol}


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


def _rand_grid(rng, params):
    return (rng.standard_normal(params.shape) + 1j * rng.standard_normal(params.shape)) / np.sqrt(2)


class Suite:
    """Collection of identity checks; ``fault`` perturbs every transmit window."""

    def __init__(self, seed: int = 2024, fault: float = 0.0):
        self.seed = seed
        self.fault = fault

    def tx_window(self, pulse, params) -> WindowMatrix:
        w = compute_tx_window(pulse, params)
        if self.fault:
            return WindowMatrix(w.w * (1.0 + self.fault), w.role)
        return w

    def rng(self, tag: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, tag])

    # -- checks ---------------------------------------------------------

    def dft_convention(self):
        worst = 0.0
        for Q in (1, 2, 3, 8, 16):
            F = dft_matrix(Q)
            worst = max(worst, np.abs(F.conj().T @ F - Q * np.eye(Q)).max())
        yield CheckResult("dft-convention", worst, 1e-10)

    def decomposition(self):
        rng = self.rng(1)
        worst_fac = worst_unit = 0.0
        for K in range(2, 9, 2):
            for M in (2, 3, 4, 5, 8):
                params = GfdmParams(K, M)
                pulse = make_pulse("rc", params, 0.0 if M < 3 else 0.5)
                w = self.tx_window(pulse, params)
                A_fd = build_modulation_matrix(pulse, params, fd=True)
                f = build_factors(w, params)
                worst_fac = max(worst_fac, _rel(f.modulation_matrix(), A_fd))
                eye = np.eye(params.N)
                worst_unit = max(
                    worst_unit,
                    np.abs(f.V_f @ f.V_f.conj().T - eye).max(),
                    np.abs(f.U_t @ f.U_t.conj().T - eye).max(),
                )
        yield CheckResult("fd-decomposition", worst_fac, 1e-10)
        yield CheckResult("factor-unitarity", worst_unit, 1e-10)
        params = GfdmParams(4, 3)
        pulse = make_pulse("rc", params, 0.5)
        w = self.tx_window(pulse, params)
        w_rx = zf_rx_window(w)
        y = _rand_grid(rng, GfdmParams(params.N, 1))[:, 0]
        dev = np.abs(demodulate_matrix(y, build_factors(w, params), w_rx, params) - demodulate_fd(y, w_rx)).max()
        yield CheckResult("rx-factor-path", float(dev), 1e-9)

    def modem_equivalence(self):
        rng = self.rng(2)
        worst = 0.0
        for K, M in ((2, 2), (4, 3), (8, 4), (32, 16)):
            params = GfdmParams(K, M)
            for kind, alpha in (("rc", 0.8), ("rect-td", 0), ("rect-fd", 0), ("chirp", 0)):
                pulse = make_pulse(kind, params, alpha)
                w = self.tx_window(pulse, params)
                D = _rand_grid(rng, params)
                ref = dft(modulate_reference_td(D, pulse))
                dense = build_modulation_matrix(pulse, params, fd=True) @ vec(D)
                fast = modulate_fd(D, w)
                worst = max(worst, _rel(fast, ref), _rel(dense, ref), _rel(fast, dense))
        yield CheckResult("modem-equivalence", worst, 1e-9)

    def orthogonality(self):
        configs = (
            ("gfdm-a0", GfdmParams(32, 16), "rc"),
            ("ofdm", GfdmParams(512, 1), "rect-td"),
            ("sc", GfdmParams(1, 512), "rect-fd"),
            ("chirp", GfdmParams(32, 16), "chirp"),
        )
        for label, params, kind in configs:
            A = build_modulation_matrix(make_pulse(kind, params), params)
            dev = np.abs(A.conj().T @ A - np.eye(params.N)).max()
            yield CheckResult(f"orthogonal-{label}", float(dev), 1e-10)

    def lmmse_routes(self):
        rng = self.rng(3)
        worst_paths = worst_forms = 0.0
        for i in range(20):
            K = int(rng.integers(4, 9))
            M = int(rng.integers(3, 5))
            params = GfdmParams(K, M)
            alpha = float(rng.choice([0.0, 0.5, 0.8]))
            pulse = make_pulse("rc", params, alpha)
            A_fd = build_modulation_matrix(pulse, params, fd=True)
            chan = draw_channel(ChannelModel(L=int(rng.integers(1, 5))), params, rng)
            snr = (0.0, 10.0, 30.0)[i % 3]
            spec = ReceiverSpec("full-lmmse", "zf", 1.0, 10 ** (-snr / 10))
            y = chan.h_fd * (A_fd @ vec(_rand_grid(rng, params)))
            y = y + dft(np.sqrt(spec.sigma2 / 2) * (rng.standard_normal(params.N) + 1j * rng.standard_normal(params.N)))
            paths = lmmse_paths(y, chan, A_fd, spec, params)
            chain = design_receiver(chan, self.tx_window(pulse, params), spec, params).demodulate_fd(y)
            ref = paths["joint"]
            worst_paths = max(
                worst_paths,
                np.abs(paths["ceq_then_zf"] - ref).max(),
                np.abs(paths["zf_then_demod"] - ref).max(),
                np.abs(chain - ref).max(),
            )
            W1 = joint_lmmse_matrix(chan, A_fd, spec, params, form=1)
            W2 = joint_lmmse_matrix(chan, A_fd, spec, params, form=2)
            worst_forms = max(worst_forms, np.abs(W1 - W2).max())
        yield CheckResult("lmmse-three-way", float(worst_paths), 1e-8)
        yield CheckResult("lmmse-two-forms", float(worst_forms), 1e-9)

    def equal_sinr(self):
        # Per-symbol SINR from the dense end-to-end chain, so the m-independence
        # is measured rather than built in.
        worst_eq = worst_cf = 0.0
        params = GfdmParams(8, 4)
        pulse = make_pulse("rc", params, 0.5)
        w = self.tx_window(pulse, params)
        for c in range(10):
            chan = draw_channel(ChannelModel(L=4), params, self.rng(100 + c))
            for name in RECEIVER_NAMES:
                spec = ReceiverSpec.from_name(name, 1.0, 0.05)
                s = dense_sinr(chan, w, spec, params)
                worst_eq = max(worst_eq, np.max(np.abs(s - s[:, :1]) / s[:, :1]))
                cf = receiver_sinr(chan, w, spec, params).sinr
                worst_cf = max(worst_cf, np.max(np.abs(cf - s) / s))
        yield CheckResult("equal-sinr-per-subcarrier", float(worst_eq), 1e-9)
        yield CheckResult("closed-form-sinr", float(worst_cf), 1e-9)
        sc = GfdmParams(1, 512)
        w_sc = self.tx_window(make_pulse("rect-fd", sc), sc)
        worst = 0.0
        for c in range(3):
            chan = draw_channel(ChannelModel(L=24), sc, self.rng(200 + c))
            for name in RECEIVER_NAMES:
                s = dense_sinr(chan, w_sc, ReceiverSpec.from_name(name, 1.0, 0.05), sc)
                worst = max(worst, (s.max() - s.min()) / s.min())
        yield CheckResult("equal-sinr-single-carrier", float(worst), 1e-9)

    def zf_identity(self):
        params = GfdmParams(8, 4)
        w = self.tx_window(make_pulse("rc", params, 0.5), params)
        chan = draw_channel(ChannelModel(L=3), params, self.rng(4))
        eff = effective_matrices(chan, w, ReceiverSpec("zf", "zf", 1.0, 0.1), params)
        dev = np.abs(eff.C - np.eye(params.K)).max()
        yield CheckResult("zf-zf-effective-identity", float(dev), 1e-9)

    def diag_equals_full(self):
        worst = 0.0
        configs = (
            (GfdmParams(8, 4), "rc"),
            (GfdmParams(32, 16), "rc"),
            (GfdmParams(64, 1), "rect-td"),
            (GfdmParams(1, 64), "rect-fd"),
            (GfdmParams(16, 8), "chirp"),
        )
        for j, (params, kind) in enumerate(configs):
            w = self.tx_window(make_pulse(kind, params), params)
            if not equal_amplitude_columns(w).all():
                worst = np.inf
                continue
            rng = self.rng(300 + j)
            chan = draw_channel(ChannelModel(L=min(4, params.N)), params, rng)
            y = rng.standard_normal(params.N) + 1j * rng.standard_normal(params.N)
            full = design_receiver(chan, w, ReceiverSpec("full-lmmse", "zf", 1.0, 0.1), params).demodulate_fd(y)
            diag = design_receiver(chan, w, ReceiverSpec("diag-lmmse", "zf", 1.0, 0.1), params).demodulate_fd(y)
            worst = max(worst, np.abs(full - diag).max())
        yield CheckResult("diag-equals-full-lmmse", float(worst), 1e-10)

    def checks(self) -> list[Callable[[], Iterator[CheckResult]]]:
        return [
            self.dft_convention,
            self.decomposition,
            self.modem_equivalence,
            self.orthogonality,
            self.lmmse_routes,
            self.equal_sinr,
            self.zf_identity,
            self.diag_equals_full,
        ]

    def run(self) -> list[CheckResult]:
        return [result for check in self.checks() for result in check()]


def first_failure(results) -> str | None:
    for r in results:
        if not r.passed:
            return r.name
    return None
