import json
import math

import numpy as np
import pytest

from conftest import reference_sweep
from gfdmrx import cli
from gfdmrx.analysis import analytic_ser_qam, empirical_ser
from gfdmrx.channel import ChannelModel, ChannelRealization, Pdp
from gfdmrx.core import GfdmParams, compute_tx_window, make_pulse
from gfdmrx.receivers import ReceiverSpec
from gfdmrx.errors import ConfigError
from gfdmrx.sim import (
    CSV_COLUMNS,
    ResultRow,
    Scenario,
    Waveform,
    parse_snr_grid,
    rows_from_csv,
    rows_to_csv,
    run_sweep,
    snr_to_sigma2,
    stream,
)

SMALL = dict(
    waveform=Waveform("gfdm", K=8, M=4, alpha=0.5),
    receivers=("zf-zf", "diag-lmmse-zf"),
    channel=ChannelModel(L=3),
    snr_db_grid=(0.0, 10.0, math.inf),
    n_channels=6,
    n_blocks_per_channel=10,
    seed=5,
)


class TestParsing:
    def test_snr_grid(self):
        assert parse_snr_grid("0:5:30") == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
        assert parse_snr_grid("0:10:20,inf") == (0.0, 10.0, 20.0, math.inf)
        assert parse_snr_grid(" 5, 7.5 ") == (5.0, 7.5)

    @pytest.mark.parametrize("text", ["x", "1:2", "0:0:10", "0:-1:10"])
    def test_bad_snr_grid(self, text):
        with pytest.raises(ConfigError):
            parse_snr_grid(text)

    def test_sigma2(self):
        assert snr_to_sigma2(math.inf) == 0.0
        assert snr_to_sigma2(10.0) == pytest.approx(0.1)
        assert snr_to_sigma2(0.0, Es=2.0) == 2.0


class TestWaveform:
    @pytest.mark.parametrize("name,shape", [("gfdm", (32, 16)), ("ofdm", (512, 1)), ("sc", (1, 512)), ("chirp", (32, 16))])
    def test_defaults(self, name, shape):
        wf = Waveform(name)
        assert (wf.K, wf.M) == shape
        assert wf.tx_window().shape == shape

    def test_ofdm_window_constant(self):
        w = Waveform("ofdm").tx_window().w
        assert np.ptp(np.abs(w)) < 1e-9

    def test_sc_window_is_pulse_spectrum(self):
        assert Waveform("sc").tx_window().w.shape == (1, 512)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            Waveform("fbmc")


class TestScenario:
    def test_validation(self):
        with pytest.raises(ConfigError):
            Scenario(receivers=("full-lmmse-lmmse",))
        with pytest.raises(ConfigError):
            Scenario(waveform=Waveform("gfdm", K=4, M=4, alpha=0.1))
        with pytest.raises(ConfigError):
            Scenario(n_channels=0)
        with pytest.raises(ConfigError):
            Scenario(waveform=Waveform("gfdm", K=2, M=4), channel=ChannelModel(L=9))

    def test_id_and_cp(self):
        s = Scenario(**SMALL)
        assert s.params.cp_len == 2
        assert s.scenario_id == "gfdm-K8-M4-a0.5-L3-exp1-s5"

    def test_streams_are_keyed(self):
        a = stream(1, 0, 3).standard_normal(4)
        np.testing.assert_array_equal(a, stream(1, 0, 3).standard_normal(4))
        assert not np.array_equal(a, stream(1, 0, 4).standard_normal(4))
        assert not np.array_equal(a, stream(2, 0, 3).standard_normal(4))


class TestCsv:
    def test_roundtrip(self):
        rows = [
            ResultRow("s", 0.0, "zf-zf", "gfdm", 0.1, 0.1 + 1e-17, 3.25, 0.5, 100, 0, 0.0125),
            ResultRow("s, quoted", math.inf, "zf-lmmse", "sc", None, None, None, None, 0, 3),
            ResultRow("s", 5.0, "zf-zf", "ofdm", 1 / 3, 2 / 3, math.inf, None, 7, 0),
        ]
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        assert rows_from_csv(text) == rows

    def test_header_checked(self):
        with pytest.raises(ConfigError):
            rows_from_csv("a,b\n1,2\n")


class TestSweep:
    def test_noiseless_row_has_no_errors(self):
        rows = run_sweep(Scenario(**SMALL))
        assert len(rows) == 6
        for r in rows:
            assert r.n_symbols == 6 * 10 * 32
            if math.isinf(r.snr_db):
                assert r.avg_ser_empirical == 0.0
                assert r.avg_ser_analytic == pytest.approx(0.0, abs=1e-12)

    def test_ser_decreases_with_snr(self):
        rows = run_sweep(Scenario(**SMALL), timing=False)
        for name in SMALL["receivers"]:
            sers = [r.avg_ser_analytic for r in rows if r.receiver == name]
            assert sers == sorted(sers, reverse=True)

    def test_worker_count_does_not_change_output(self):
        scenario = Scenario(**SMALL)
        one = rows_to_csv(run_sweep(scenario, workers=1, timing=False))
        eight = rows_to_csv(run_sweep(scenario, workers=8, timing=False))
        assert one == eight
        assert one == rows_to_csv(run_sweep(scenario, workers=1, timing=False))

    def test_failed_channels_are_counted(self):
        # A rect-td window with several subsymbols has zero entries: ZF demodulation is undefined.
        scenario = Scenario(
            waveform=Waveform("ofdm", K=8, M=2), receivers=("zf-zf",), channel=ChannelModel(L=2),
            snr_db_grid=(10.0,), n_channels=3, n_blocks_per_channel=1,
        )
        (row,) = run_sweep(scenario)
        assert row.n_failed_channels == 3
        assert row.avg_ser_analytic is None and row.avg_ser_empirical is None


class TestStandardError:
    def test_independent_errors_match_binomial(self):
        # Orthonormal modulation on a flat channel: post-ZF noise is white, errors independent.
        p = GfdmParams(8, 4)
        w = compute_tx_window(make_pulse("rc", p, 0.0), p)
        chan = ChannelRealization.from_taps([1.0], p)
        est = empirical_ser(ReceiverSpec("zf", "zf", 1.0, 0.1), chan, w, p, 32 * 20_000, np.random.default_rng(4))
        binomial = math.sqrt(est.ser * (1 - est.ser) / est.n_symbols)
        assert est.std_error == pytest.approx(binomial, rel=0.05)
        assert abs(est.ser - analytic_ser_qam(10.0)) < 3 * est.std_error

    def test_single_block(self):
        p = GfdmParams(8, 4)
        w = compute_tx_window(make_pulse("rc", p, 0.0), p)
        est = empirical_ser(ReceiverSpec("zf", "zf"), ChannelRealization.from_taps([1.0], p), w, p, 32,
                            np.random.default_rng(0))
        assert math.isnan(est.std_error)

    def test_sweep_reports_it(self):
        rows = run_sweep(Scenario(**SMALL), timing=False)
        for r in rows:
            assert r.ser_std_error is not None and r.ser_std_error >= 0
            if math.isinf(r.snr_db):
                assert r.ser_std_error == 0.0


def _reference_rows():
    return reference_sweep("gfdm", 0.8, ("zf-zf", "full-lmmse-zf"), "exp:1.0", "0:5:30").values()


def _deviations(se_of):
    out = {}
    for r in _reference_rows():
        if r.avg_ser_empirical > 10 / r.n_symbols:
            out[f"{r.receiver}@{r.snr_db:g}"] = abs(r.avg_ser_empirical - r.avg_ser_analytic) / se_of(r)
    return out


@pytest.mark.slow
class TestSweepAgreement:
    """Analytic vs empirical SER in every row of the full-size reference sweep."""

    def test_within_three_binomial_standard_errors(self):
        dev = _deviations(lambda r: math.sqrt(r.avg_ser_analytic * (1 - r.avg_ser_analytic) / r.n_symbols))
        bad = {k: round(v, 2) for k, v in dev.items() if v >= 3}
        assert not bad, f"rows beyond 3 binomial standard errors: {bad}"

    def test_within_three_block_standard_errors(self):
        dev = _deviations(lambda r: r.ser_std_error)
        bad = {k: round(v, 2) for k, v in dev.items() if v >= 3}
        assert not bad, f"rows beyond 3 block-level standard errors: {bad}"


class TestConfig:
    def test_load(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# sweep\nwaveform = sc\nn-channels = 4  # few\n\nsnr=0:10:20\n")
        assert cli.load_config(path) == {"waveform": "sc", "n_channels": "4", "snr": "0:10:20"}

    def test_bad_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("waveform sc\n")
        with pytest.raises(ConfigError):
            cli.load_config(path)

    def test_build_scenario(self):
        s = cli.build_scenario({"waveform": "gfdm", "K": "8", "M": "4", "alpha": "0.5", "pdp": "uniform", "L": "3",
                                "receiver": "zf-zf, zf-lmmse", "snr": "0,10", "n_channels": "2", "seed": "9"})
        assert s.receivers == ("zf-zf", "zf-lmmse")
        assert s.channel.pdp is Pdp.UNIFORM and s.channel.L == 3
        assert s.seed == 9 and s.n_channels == 2

    def test_build_scenario_errors(self):
        with pytest.raises(ConfigError):
            cli.build_scenario({"K": "eight"})


class TestCli:
    def test_verify(self, capsys):
        assert cli.main(["verify"]) == cli.EXIT_OK
        assert "FAIL" not in capsys.readouterr().out

    def test_verify_fault(self, capsys):
        assert cli.main(["verify", "--inject-fault", "1e-3"]) == cli.EXIT_VERIFY
        assert "fd-decomposition" in capsys.readouterr().err

    def test_verify_json(self, capsys):
        assert cli.main(["verify", "--json"]) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] and report["first_failure"] is None
        assert {c["name"] for c in report["checks"]} >= {"fd-decomposition", "modem-equivalence"}
        assert all(c["passed"] for c in report["checks"])

    def test_verify_json_fault(self, capsys):
        assert cli.main(["verify", "--json", "--inject-fault", "1e-3"]) == cli.EXIT_VERIFY
        assert json.loads(capsys.readouterr().out)["first_failure"] == "fd-decomposition"

    def test_sweep(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        argv = ["sweep", "-K", "8", "-M", "4", "--alpha", "0.5", "-L", "3", "--receiver", "zf-zf",
                "--snr", "10,inf", "--n-channels", "2", "--n-blocks", "5", "--no-timing", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_OK
        rows = rows_from_csv(out.read_text(encoding="utf-8"))
        assert [r.snr_db for r in rows] == [10.0, math.inf]
        assert rows[1].avg_ser_empirical == 0.0

    def test_sweep_config_and_env_seed(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("K = 8\nM = 4\nalpha = 0.5\nL = 3\nsnr = 10\nn_channels = 2\nn_blocks = 2\n")
        monkeypatch.setenv(cli.SEED_ENV, "77")
        assert cli.main(["sweep", "--config", str(cfg), "--no-timing"]) == cli.EXIT_OK
        (row,) = rows_from_csv(capsys.readouterr().out)
        assert row.scenario_id.endswith("-s77")
        assert cli.main(["sweep", "--config", str(cfg), "--no-timing", "--seed", "3"]) == cli.EXIT_OK
        assert rows_from_csv(capsys.readouterr().out)[0].scenario_id.endswith("-s3")

    @pytest.mark.parametrize(
        "argv",
        [
            ["sweep", "--receiver", "full-lmmse-lmmse"],
            ["sweep", "--snr", "a:b"],
            ["sweep", "--config", "/nonexistent.cfg"],
            ["windows", "--rx"],
            ["sinr-map", "--channel", "/nonexistent.json"],
        ],
    )
    def test_config_errors(self, argv, capsys):
        assert cli.main(argv) == cli.EXIT_CONFIG
        assert capsys.readouterr().err.startswith("error:")

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("colour = blue\n")
        assert cli.main(["sweep", "--config", str(cfg)]) == cli.EXIT_CONFIG

    def test_windows(self, capsys):
        assert cli.main(["windows", "--waveform", "ofdm", "-K", "16"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,m,tx_mag,tx_phase"
        assert len(lines) == 17
        assert {round(float(l.split(",")[2]), 9) for l in lines[1:]} == {4.0}

    def test_windows_rx_and_sinr_map(self, tmp_path, capsys):
        chan = tmp_path / "c.json"
        base = ["-K", "4", "-M", "3", "--alpha", "0.8", "-L", "2"]
        assert cli.main(["sinr-map", *base, "--snr", "15", "--save-channel", str(chan),
                         "--receiver", "zf-zf,diag-lmmse-zf"]) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert set(report["receivers"]) == {"zf-zf", "diag-lmmse-zf"}
        sinr = np.array(report["receivers"]["zf-zf"]["sinr"])
        assert sinr.shape == (4, 3)
        assert cli.main(["sinr-map", *base, "--snr", "15", "--channel", str(chan), "--receiver", "zf-zf"]) == 0
        again = json.loads(capsys.readouterr().out)
        np.testing.assert_array_equal(np.array(again["receivers"]["zf-zf"]["sinr"]), sinr)
        assert cli.main(["windows", *base, "--rx", "--channel", str(chan), "--snr", "15"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,m,tx_mag,tx_phase,rx_mag,rx_phase"
        assert len(lines) == 13
