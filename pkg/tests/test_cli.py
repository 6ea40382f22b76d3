import csv

import pytest

from nbiot_sls import cli
from nbiot_sls.config import SimConfig

SMALL = ["--terminals", "40", "--ttis", "200", "--num_sites", "7"]


def _table(text):
    out = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) >= 2:
            out[parts[0]] = parts[1:]
    return out


def test_mcl_defaults(capsys):
    assert cli.main(["mcl"]) == 0
    t = _table(capsys.readouterr().out)
    assert [float(x) for x in t["mcl_db"]] == [164.05, 164.04]
    assert [float(x) for x in t["effective_noise_power_dbm"]] == pytest.approx([-116.4, -129.2], abs=0.05)


def test_mcl_overrides(capsys, tmp_path):
    assert cli.main(["mcl", "--process-gain", "10", "--out", str(tmp_path)]) == 0
    t = _table(capsys.readouterr().out)
    assert [float(x) for x in t["mcl_db"]] == [174.05, 174.04]
    assert (tmp_path / "link_budget.csv").exists()
    assert cli.main(["mcl", "--bandwidth", "3750"]) == 0
    t = _table(capsys.readouterr().out)
    assert float(t["effective_noise_power_dbm"][1]) == pytest.approx(-135.26, abs=0.005)


def test_traffic(capsys):
    assert cli.main(["traffic"]) == 0
    t = _table(capsys.readouterr().out)
    assert float(t["report_rate_packets_per_s_per_terminal"][0]) == pytest.approx(1.296e-4, rel=1e-3)
    assert float(t["bit_rate_bps_per_terminal"][0]) == pytest.approx(33.2e-3, rel=1e-3)
    assert cli.main(["traffic", "--terminals", "52549"]) == 0
    t = _table(capsys.readouterr().out)
    assert float(t["bit_rate_bps_per_sector"][0]) == pytest.approx(1744.6, rel=1e-3)


def test_exit_codes(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run", "--no-such-flag"]) == 1
    assert cli.main(["run", "--edrx_k", "11"]) == 2
    assert cli.main(["run", "--edrx", "maybe"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense\n", encoding="utf-8")
    assert cli.main(["traffic", "--config", str(bad)]) == 2
    assert cli.main(["dump-layout", "--terminals", "5000", "--pixel_resolution", "100"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", *SMALL, "--out", str(blocker / "sub")]) == 3
    assert cli.main(["run", *SMALL, "--replicas", "0"]) == 1
    capsys.readouterr()


def test_help_lists_every_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for name in SimConfig.__dataclass_fields__:
        assert f"--{name}" in text
    for flag in ("--terminals", "--ttis", "--seed", "--scheduler", "--edrx", "--out", "--config",
                 "--replicas", "--jobs"):
        assert flag in text


def test_precedence_flag_over_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("num_terminals = 10\nnum_ttis = 7\n", encoding="utf-8")
    args = cli.build_parser().parse_args(["run", "--config", str(p), "--terminals", "20"])
    cfg = cli.make_config(args)
    assert (cfg.num_terminals, cfg.num_ttis) == (20, 7)
    args = cli.build_parser().parse_args(["run", "--scheduler", "pf", "--edrx", "off"])
    cfg = cli.make_config(args)
    assert (cfg.scheduler, cfg.edrx_enabled) == ("PF", False)


def test_run_writes_csvs_deterministically(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", *SMALL, "--scheduler", "rr", "--edrx", "on", "--out", str(a)]) == 0
    out = _table(capsys.readouterr().out)
    assert "median_dl_bps_per_hz" in out
    assert cli.main(["run", *SMALL, "--scheduler", "rr", "--edrx", "on", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["coupling_cdf.csv", "link_budget.csv", "summary.csv", "throughput.csv"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_replicas(tmp_path, capsys):
    assert cli.main(["run", *SMALL, "--replicas", "2", "--jobs", "2", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    with open(tmp_path / "summary.csv", encoding="utf-8") as fh:
        summary = dict(csv.reader(fh))
    assert summary["replicas"] == "2"
    rows = (tmp_path / "throughput.csv").read_text().splitlines()
    assert len(rows) - 1 <= 2 * 2 * 40


def test_dump_layout(tmp_path, capsys):
    assert cli.main(["dump-layout", "--terminals", "30", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    sites = (tmp_path / "sites.csv").read_text().splitlines()
    terms = (tmp_path / "terminals.csv").read_text().splitlines()
    assert len(sites) == 20 and len(terms) == 31
