import os

import pytest

from uwbthroughput import report
from uwbthroughput.cli import main


def read_summary(out):
    rows = [ln.split(",", 1) for ln in open(os.path.join(out, "summary.csv")).read().splitlines()
            if not ln.startswith("#")]
    return dict(rows[1:])


def test_run_c_band(tmp_path):
    out = str(tmp_path / "run")
    code = main(["run", "--bands", "C", "--channels", "full", "--spans", "1", "--plim-dbm", "inf",
                 "--accuracy", "32", "--out", out])
    assert code == 0
    s = read_summary(out)
    assert s["n_channels"] == "29" and float(s["tau"]) == 1.0
    for name in ("grid.csv", "launch_power.csv", "snr.csv", "summary.csv", "launch_power.svg",
                 "snr.svg"):
        assert os.path.exists(os.path.join(out, name))
    snr_header = [ln for ln in open(os.path.join(out, "snr.csv")) if not ln.startswith("#")][0]
    assert snr_header.strip() == "channel_index,frequency_THz,snr_dB,p_ase_mW,p_nli_mW"


def test_artifacts_carry_provenance_and_are_reproducible(tmp_path):
    args = ["--bands", "C", "--channels", "9", "--plim-dbm", "12", "--accuracy", "32",
            "--no-plots"]
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(args + ["--out", a]) == 0
    assert main(args + ["--out", b]) == 0
    for name in ("grid.csv", "launch_power.csv", "snr.csv", "summary.csv"):
        da = open(os.path.join(a, name), "rb").read()
        assert da == open(os.path.join(b, name), "rb").read()
        text = da.decode()
        assert text.startswith(f"# {report.ARTIFACT_VERSION}\n")
        assert "# plim_dbm = 12" in text and "# n_r = 32" in text


def test_missing_profile(tmp_path, capsys):
    code = main(["--fibre", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert f"profile not found: {tmp_path / 'nope.csv'}" in capsys.readouterr().err


def test_validation_errors(tmp_path, capsys):
    assert main(["--bands", "X", "--out", str(tmp_path)]) == 1
    assert main(["--spans", "0", "--bands", "C", "--out", str(tmp_path)]) == 1
    assert main(["sweep", "--schedule", "", "--out", str(tmp_path)]) == 1
    assert "empty channel-count schedule" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[channel_grid]\nbands = C\nchannels = 5\n[nli_engine]\nn_r = 32\n"
                   "[power_optimizer]\nplim_dbm = 10\n[cli_reporting]\nplots = no\n")
    out = str(tmp_path / "o")
    assert main(["--config", str(cfg), "--channels", "7", "--out", out]) == 0
    s = read_summary(out)
    assert s["n_channels"] == "7" and s["p_lim_dBm"] == "10"
    bad = tmp_path / "bad.ini"
    bad.write_text("[nonsense]\nx = 1\n")
    assert main(["--config", str(bad), "--out", out]) == 1


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("UWB_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["--bands", "C", "--channels", "3", "--accuracy", "32", "--no-plots"]) == 0
    assert os.path.exists(tmp_path / "root" / "run" / "summary.csv")


def test_non_convergence_exit_code(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[power_optimizer]\nmax_outer = 1\nouter_tol = 1e-12\n")
    code = main(["--config", str(cfg), "--bands", "C", "--channels", "5", "--accuracy", "32",
                 "--no-plots", "--out", str(tmp_path / "o")])
    assert code == 2
    assert os.path.exists(tmp_path / "o" / "summary.csv")


def test_plot_failure_does_not_fail_run(tmp_path, monkeypatch):
    def broken():
        raise RuntimeError("no backend")

    monkeypatch.setattr(report, "_pyplot", broken)
    out = str(tmp_path / "o")
    assert main(["--bands", "C", "--channels", "3", "--accuracy", "32", "--out", out]) == 0
    assert not os.path.exists(os.path.join(out, "snr.svg"))


def test_sweep_command(tmp_path):
    out = str(tmp_path / "sw")
    args = ["--sweep", "--bands", "C", "--schedule", "5,10,29", "--spans", "1",
            "--plim-dbm", "10,15", "--trx-snr-db", "20", "--accuracy", "32", "--out", out]
    assert main(args) in (0, 2)
    sat = [ln for ln in open(os.path.join(out, "saturation.csv")) if not ln.startswith("#")]
    assert sat[0].strip() == "scenario_id,saturation_bandwidth_THz,monotone"
    bw = {ln.split(",")[0]: float(ln.split(",")[1]) for ln in sat[1:]}
    assert bw["1span_10dBm_trx20dB"] <= bw["1span_15dBm_trx20dB"]
    assert os.path.exists(os.path.join(out, "throughput.svg"))
    # resumed run recomputes nothing and leaves the results untouched
    res_path = os.path.join(out, "sweep_results.csv")
    before = open(res_path).read()
    mtime = os.path.getmtime(res_path + ".state.jsonl")
    assert main(args) in (0, 2)
    assert open(res_path).read() == before
    assert os.path.getmtime(res_path + ".state.jsonl") == mtime


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "uwbthroughput" in capsys.readouterr().out
