"""Frequency-domain GFDM modem, linear receivers, and SINR/SER analysis."""

from .analysis import (
    QamConstellation,
    SinrGrid,
    analytic_ser_qam,
    closed_form_sinr,
    effective_matrices,
    empirical_ser,
    empirical_sinr,
    receiver_sinr,
)
from .channel import ChannelModel, ChannelRealization, draw_channel
from .core import GfdmParams, WindowMatrix, compute_tx_window, make_pulse, zf_rx_window
from .errors import ConfigError, GfdmError, SingularChannelError, SingularWindowError
from .modem import build_factors, build_modulation_matrix, demodulate_fd, modulate_fd
from .receivers import RECEIVER_NAMES, ReceiverSpec, design_receiver, run_receiver

__all__ = [
    "ChannelModel",
    "ChannelRealization",
    "ConfigError",
    "GfdmError",
    "GfdmParams",
    "QamConstellation",
    "RECEIVER_NAMES",
    "ReceiverSpec",
    "SingularChannelError",
    "SingularWindowError",
    "SinrGrid",
    "WindowMatrix",
    "analytic_ser_qam",
    "build_factors",
    "build_modulation_matrix",
    "closed_form_sinr",
    "compute_tx_window",
    "demodulate_fd",
    "design_receiver",
    "draw_channel",
    "effective_matrices",
    "empirical_ser",
    "empirical_sinr",
    "make_pulse",
    "modulate_fd",
    "receiver_sinr",
    "run_receiver",
    "zf_rx_window",
]
