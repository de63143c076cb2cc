"""Command-line interface: ``gfdmrx {sweep,verify,windows,sinr-map}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import receiver_sinr
from .channel import ChannelModel, ChannelRealization, draw_channel
from .errors import ConfigError, GfdmError
from .receivers import ReceiverSpec, demod_lmmse_window
from .sim import Scenario, Waveform, parse_snr_grid, rows_to_csv, run_sweep, snr_to_sigma2, stream
from .verify import Suite, first_failure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

SEED_ENV = "GFDMRX_SEED"

log = logging.getLogger("gfdmrx")


def load_config(path) -> dict:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


_KEYS = {
    "waveform", "K", "M", "alpha", "receiver", "pdp", "L", "snr", "n_channels",
    "n_blocks", "seed", "Mc", "Es", "name", "workers", "out",
}


def _settings(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if "seed" not in cfg and os.environ.get(SEED_ENV):
        cfg["seed"] = os.environ[SEED_ENV]
    return cfg


def _waveform(cfg) -> Waveform:
    return Waveform(
        name=str(cfg.get("waveform", "gfdm")),
        K=int(cfg["K"]) if "K" in cfg else None,
        M=int(cfg["M"]) if "M" in cfg else None,
        alpha=float(cfg.get("alpha", 0.0)),
    )


def _channel_model(cfg) -> ChannelModel:
    return ChannelModel.parse(str(cfg.get("pdp", "exp:1.0")), L=int(cfg.get("L", 24)))


def build_scenario(cfg: dict) -> Scenario:
    try:
        receivers = tuple(r.strip() for r in str(cfg.get("receiver", "diag-lmmse-zf")).split(",") if r.strip())
        return Scenario(
            waveform=_waveform(cfg),
            receivers=receivers,
            channel=_channel_model(cfg),
            snr_db_grid=parse_snr_grid(str(cfg.get("snr", "0:5:30"))),
            n_channels=int(cfg.get("n_channels", 200)),
            n_blocks_per_channel=int(cfg.get("n_blocks", 50)),
            seed=int(cfg.get("seed", 0)),
            Mc=int(cfg.get("Mc", 16)),
            Es=float(cfg.get("Es", 1.0)),
            name=cfg.get("name") or None,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    cfg = _settings(args)
    scenario = build_scenario(cfg)
    rows = run_sweep(scenario, workers=int(cfg.get("workers", 1)), timing=not args.no_timing)
    _emit(rows_to_csv(rows), cfg.get("out"))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = Suite(fault=args.inject_fault).run()
    failed = first_failure(results)
    if args.json:
        json.dump(
            {"passed": failed is None, "first_failure": failed, "checks": [r.to_dict() for r in results]},
            sys.stdout,
            indent=2,
        )
        sys.stdout.write("\n")
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.name:<{width}}  {r.value:.3e} < {r.tol:.0e}")
    if failed is not None:
        print(f"verification failed: {failed}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _load_or_draw_channel(cfg, args, params) -> ChannelRealization:
    if args.channel:
        return ChannelRealization.load(args.channel, params)
    seed = int(cfg.get("seed", 0))
    chan = draw_channel(_channel_model(cfg), params, stream(seed, 0, args.channel_index))
    if args.save_channel:
        chan.save(args.save_channel)
    return chan


def cmd_windows(args) -> int:
    cfg = _settings(args)
    wf = _waveform(cfg)
    params = wf.params()
    w_tx = wf.tx_window(params)
    w_rx = None
    if args.rx:
        if not args.channel:
            raise ConfigError("--rx needs --channel FILE (a saved channel realization)")
        chan = ChannelRealization.load(args.channel, params)
        snr = float(cfg.get("snr", "20"))
        spec = ReceiverSpec("zf", "lmmse", float(cfg.get("Es", 1.0)), snr_to_sigma2(snr))
        w_rx = demod_lmmse_window(chan, w_tx, spec, params)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["k", "m", "tx_mag", "tx_phase"] + (["rx_mag", "rx_phase"] if w_rx is not None else [])
    writer.writerow(header)
    for k in range(params.K):
        for m in range(params.M):
            row = [k, m, repr(float(abs(w_tx.w[k, m]))), repr(float(np.angle(w_tx.w[k, m])))]
            if w_rx is not None:
                row += [repr(float(abs(w_rx.w[k, m]))), repr(float(np.angle(w_rx.w[k, m])))]
            writer.writerow(row)
    _emit(buf.getvalue(), cfg.get("out"))
    return EXIT_OK


def cmd_sinr_map(args) -> int:
    cfg = _settings(args)
    wf = _waveform(cfg)
    model = _channel_model(cfg)
    params = wf.params(cp_len=model.L - 1)
    w_tx = wf.tx_window(params)
    chan = _load_or_draw_channel(cfg, args, params)
    snr = float(cfg.get("snr", "20"))
    report = {"waveform": wf.label, "snr_db": snr, "K": params.K, "M": params.M, "receivers": {}}
    for name in str(cfg.get("receiver", "diag-lmmse-zf")).split(","):
        spec = ReceiverSpec.from_name(name.strip(), float(cfg.get("Es", 1.0)), snr_to_sigma2(snr))
        grid = receiver_sinr(chan, w_tx, spec, params)
        report["receivers"][spec.name] = grid.to_dict()
    _emit(json.dumps(report) + "\n", cfg.get("out"))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--waveform", choices=["gfdm", "ofdm", "sc", "chirp"])
    p.add_argument("-K", dest="K", type=int, help="subcarriers (overrides the waveform default)")
    p.add_argument("-M", dest="M", type=int, help="subsymbols (overrides the waveform default)")
    p.add_argument("--alpha", type=float, help="raised-cosine roll-off for gfdm")
    p.add_argument("--receiver", help="chain name(s), comma separated, e.g. diag-lmmse-zf,zf-zf")
    p.add_argument("--pdp", help="power-delay profile: uniform or exp:<dB per tap>")
    p.add_argument("-L", dest="L", type=int, help="number of channel taps")
    p.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--Es", type=float, help="mean symbol energy")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfdmrx", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte-Carlo SER/SINR sweep, CSV output")
    _common(p)
    p.add_argument("--snr", help="SNR grid in dB: start:step:stop or a comma list")
    p.add_argument("--n-channels", dest="n_channels", type=int)
    p.add_argument("--n-blocks", dest="n_blocks", type=int, help="simulated blocks per channel and SNR")
    p.add_argument("--Mc", type=int, help="QAM constellation size")
    p.add_argument("--name", help="scenario id written to every row")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-timing", action="store_true", help="leave wall_time_s empty (byte-stable output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the identity checks")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("windows", help="dump transmit (and LMMSE receive) windows as CSV")
    _common(p)
    p.add_argument("--rx", action="store_true", help="also emit the LMMSE demodulator window")
    p.add_argument("--channel", help="channel JSON file (required with --rx)")
    p.add_argument("--snr", help="SNR in dB for the receive window")
    p.set_defaults(func=cmd_windows)

    p = sub.add_parser("sinr-map", help="closed-form per-symbol SINR as JSON")
    _common(p)
    p.add_argument("--snr", help="SNR in dB")
    p.add_argument("--channel", help="channel JSON file; otherwise one is drawn from the seed")
    p.add_argument("--channel-index", type=int, default=0, help="which seeded draw to use")
    p.add_argument("--save-channel", help="write the drawn channel to this JSON file")
    p.set_defaults(func=cmd_sinr_map)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GfdmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
