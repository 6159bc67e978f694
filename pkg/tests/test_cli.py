import csv
import io
import json
import subprocess
import sys

import pytest

from twoway_dmt import cli
from twoway_dmt.montecarlo import SimResult, wilson_interval


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return [r for r in csv.reader(io.StringIO(text))]


def test_curve_fdd_iterative_siso(capsys):
    code, out, _ = run(["curve", "--protocol", "FDD_iterative", "--m", "1", "--n", "1", "--k", "3", "--r-step", "0.25"], capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["r", "d"]
    assert [float(r) for r, _ in table[1:]] == [0.0, 0.25, 0.5, 0.75, 1.0]
    for r, d in table[1:]:
        assert abs(float(d) - 3 * (1 - float(r))) < 1e-9


def test_curve_tdd_iterative_2x2(capsys):
    code, out, _ = run(["curve", "--protocol", "TDD_iterative", "--m", "2", "--n", "2", "--k", "2", "--r-step", "0.5"], capsys)
    assert code == 0
    for r, d in rows(out)[1:]:
        assert abs(float(d) - (20 - 3 * float(r))) < 1e-9


def test_curve_no_feedback_knots(capsys):
    code, out, _ = run(["curve", "--protocol", "NoCSIT", "--m", "2", "--n", "2", "--r-step", "1.0"], capsys)
    assert out == "r,d\n0.0,4.0\n1.0,1.0\n2.0,0.0\n"


def test_curve_unknown_protocol(capsys):
    code, _, err = run(["curve", "--protocol", "Bogus"], capsys)
    assert code == 2
    assert "unknown protocol" in err


def test_oracle_single_case(capsys):
    code, out, _ = run(["oracle", "noisy-pc-outage", "p=1", "m=n=1", "r=0.5"], capsys)
    assert code == 0
    line = [ln for ln in out.splitlines() if ln.startswith("noisy-pc-outage")][0]
    assert line.split()[1:3] == ["1.5", "1.5"] and line.endswith("pass")


def test_oracle_all(capsys):
    code, out, _ = run(["oracle", "all"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) - 1 >= 10


def test_oracle_unknown_case(capsys):
    code, _, err = run(["oracle", "no-such-case"], capsys)
    assert code == 2
    assert "known cases" in err


@pytest.mark.parametrize("sub", ["curve", "oracle", "simulate", "sweep", "fit", "audit"])
def test_help_every_subcommand(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([sub, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


SIM = ["--protocol", "FDD_1bit", "--r", "0.5", "--epsilon", "0.1", "--delta", "0.05", "--trials", "2000", "--seed", "7"]


def test_simulate_requires_seed(capsys):
    code, _, err = run(["simulate", "--protocol", "NoCSIT", "--trials", "10"], capsys)
    assert code == 2 and "--seed" in err


def test_simulate_rejects_invalid_config(capsys):
    code, _, err = run(["simulate", "--protocol", "FDD_1bit", "--r", "0.5", "--epsilon", "0.01",
                        "--delta", "0.05", "--seed", "1"], capsys)
    assert code == 2


def test_one_point_sweep(tmp_path, capsys):
    out = tmp_path / "res.csv"
    code, _, _ = run(["sweep", *SIM, "--snr-grid-db", "20", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and "10^(snr_db/10)" in lines[0]
    assert lines[1].split(",") == cli.RESULT_COLUMNS
    assert len(lines) == 3


def test_sweep_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run(["sweep", *SIM, "--snr-grid-db", "15,25", "--out", str(path)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_csv_round_trip(tmp_path, capsys):
    out = tmp_path / "res.csv"
    run(["sweep", *SIM, "--snr-grid-db", "15,17.5,20", "--out", str(out)], capsys)
    text = out.read_text()
    assert cli.results_to_csv(cli.parse_results(text)) == text


def test_json_mirrors_csv(tmp_path, capsys):
    c, j = tmp_path / "r.csv", tmp_path / "r.json"
    run(["sweep", *SIM, "--snr-grid-db", "15,20", "--out", str(c)], capsys)
    run(["sweep", *SIM, "--snr-grid-db", "15,20", "--out", str(j), "--format", "json"], capsys)
    records = json.loads(j.read_text())
    assert [list(r) for r in records] == [cli.RESULT_COLUMNS] * 2
    assert cli.parse_results(j.read_text()) == cli.parse_results(c.read_text())
    assert cli.results_to_json(cli.parse_results(j.read_text())) == j.read_text()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nprotocol = FDD_1bit\nr = 0.5\nepsilon = 0.1\ndelta = 0.05\n"
                   "trials = 500\nseed = 3\nsnr-grid-db = 15, 20\n")
    out = tmp_path / "r.csv"
    code, _, _ = run(["sweep", "--config", str(cfg), "--trials", "700", "--out", str(out)], capsys)
    assert code == 0
    res = cli.read_results(str(out))
    assert [r.trials for r in res] == [700, 700]
    assert [r.protocol for r in res] == ["FDD_1bit"] * 2
    assert [r.snr_db for r in res] == [15.0, 20.0]


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(["sweep", "--config", str(cfg), "--seed", "1"], capsys)
    assert code == 2 and "unknown key" in err


def test_dump_transcripts(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, _, _ = run(["simulate", *SIM, "--snr-db", "20", "--out", str(out), "--dump-transcripts", "3"], capsys)
    assert code == 0
    lines = (tmp_path / "r.csv.transcripts.jsonl").read_text().splitlines()
    assert len(lines) == 3
    for ln in lines:
        rec = json.loads(ln)
        for rd in rec["rounds"]:
            assert set(rd) == {"round", "direction", "power_exponent", "q", "q_hat"}


def _write_results(path, points):
    res = []
    for db, k, n in points:
        lo, hi = wilson_interval(k, n)
        res.append(SimResult("NoCSIT", 1, 1, 2, 0.5, 0.05, 0.01, 10 ** (db / 10), n, k, k / n, lo, hi,
                             10 ** (db / 10), 0.0, 1, snr_db=db))
    path.write_text(cli.results_to_csv(res))


def test_fit_exact_power_law(tmp_path, capsys):
    # rates 10^-1, 10^-2.5, 10^-4 at 10, 20, 30 dB: slope -1.5
    path, plot = tmp_path / "r.csv", tmp_path / "plot.csv"
    _write_results(path, [(10.0, 10, 100), (20.0, 10, 100), (30.0, 10, 100)])
    res = cli.read_results(str(path))
    exact = [SimResult(**{**r.__dict__, "rate": rate}) for r, rate in zip(res, (1e-1, 10**-2.5, 1e-4))]
    path.write_text(cli.results_to_csv(exact))
    code, out, _ = run(["fit", str(path), "--out", str(plot), "--expect", "1.5", "--tol", "1e-9"], capsys)
    assert code == 0
    assert out.startswith("d_hat = 1.5")
    table = rows(plot.read_text())
    assert table[0] == ["log10_snr", "log10_rate", "fit"]
    assert len(table) == 4


def test_fit_insufficient(tmp_path, capsys):
    path = tmp_path / "r.csv"
    _write_results(path, [(10.0, 0, 1000), (20.0, 0, 1000)])
    code, _, err = run(["fit", str(path)], capsys)
    assert code == 1 and "insufficient" in err


def test_audit_exit_codes(tmp_path, capsys):
    path = tmp_path / "r.csv"
    _write_results(path, [(20.0, 5, 1000), (30.0, 2, 1000), (40.0, 1, 1000)])
    code, out, _ = run(["audit", str(path), "--node", "transmitter"], capsys)
    assert code == 0 and "pass" in out
    res = cli.read_results(str(path))
    greedy = [SimResult(**{**r.__dict__, "tx_energy_mean": r.snr ** 2}) for r in res]
    path.write_text(cli.results_to_csv(greedy))
    code, out, _ = run(["audit", str(path), "--node", "transmitter"], capsys)
    assert code == 1 and "FAIL" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "twoway_dmt.cli", "curve", "--protocol", "NoCSIT",
                           "--m", "2", "--n", "2", "--r-step", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "r,d"
