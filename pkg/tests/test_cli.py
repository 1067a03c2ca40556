import json
import subprocess
import sys

import pytest

from sdqcsim.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, [json.loads(line) for line in out.out.splitlines()], out.err


def test_sdqc_example(capsys):
    code, lines, err = run(["sdqc", "--graph", "c4.edges", "--pattern", "id.angles", "--N", "100", "--d", "50",
                            "--w", "5", "--prover", "honest", "--seed", "7"], capsys)
    assert code == 0
    summary = lines[-1]
    assert summary["type"] == "summary" and summary["accept_rate"] == 1.0
    assert summary["config"]["N"] == 100 and summary["config"]["seed"] == 7
    assert lines[0]["type"] == "record" and lines[0]["output"] == "00"
    assert "check passed" in err


def test_budget_example(capsys):
    code, lines, _ = run(["budget", "--N", "100", "--V", "9", "--p-c", "0.001", "--p-0", "0.01",
                          "--eta", "1e-6"], capsys)
    assert code == 0 and len(lines) == 1 and lines[0]["k"] == 3 and lines[0]["within_2eta"]


def test_budget_overhead_flags(capsys):
    code, lines, _ = run(["budget", "--N", "10", "--V", "4", "--p-c", "0.001", "--p-0", "0.01", "--eta", "1e-6",
                          "--L", "1000", "--D", "10"], capsys)
    assert code == 0 and lines[0]["ft_overhead"]["k_min"] == 3


@pytest.mark.parametrize("argv", [
    ["plugged-rsp", "--p-leak", "1.5", "--seed", "1"],
    ["plugged-rsp", "--trials", "10"],
    ["plugged-rsp", "--nope", "--seed", "1"],
    ["threshold-mc", "--k", "0", "--seed", "1"],
    ["sdqc", "--prover", "wizard", "--seed", "1"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_check_failure_exit_1(capsys):
    argv = ["sdqc", "--prover", "constantz", "--support", "1", "--N", "30", "--d", "10", "--w", "1",
            "--seed", "3", "--check"]
    assert main(argv) == 1
    assert main(argv[:-1]) == 0


def test_jobs_do_not_change_bytes(capsys):
    base = ["plugged-rsp", "--kappa", "3", "--p-leak", "0.5", "--trials", "300", "--seed", "5", "--records"]
    main(base + ["--jobs", "1"])
    one = capsys.readouterr().out
    main(base + ["--jobs", "3"])
    three = capsys.readouterr().out
    assert one.replace('"jobs":1', '"jobs":3') == three
    rec = json.loads(one.splitlines()[0])
    assert set(rec) >= {"trial", "leaked", "valid", "fidelity"}


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nN = 12\nd = 6\nw = 2\nprover = honest\nseed = 9\ngraph = line3.edges\n"
                   "pattern = quarter.angles\n")
    code, lines, _ = run(["sdqc", "--config", str(cfg), "--N", "14"], capsys)
    assert code == 0
    conf = lines[-1]["config"]
    assert conf["N"] == 14 and conf["d"] == 6 and conf["seed"] == 9 and conf["graph"] == "line3.edges"
    cfg.write_text("colour = blue\n")
    assert main(["sdqc", "--config", str(cfg), "--seed", "1"]) == 2


def test_out_resolves_against_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SDQCSIM_OUTPUT_DIR", str(tmp_path))
    assert main(["traps", "--graph", "c4.edges", "--out", "sub/traps.jsonl"]) == 0
    lines = (tmp_path / "sub" / "traps.jsonl").read_text().splitlines()
    assert len(lines) == 8 and json.loads(lines[-1])["epsilon"] == pytest.approx(2 / 7)
    assert capsys.readouterr().out == ""


def test_level1_and_threshold_subcommands(capsys):
    code, lines, _ = run(["level1-rsp", "--p-c", "0.02", "--trials", "3", "--seed", "2", "--verify"], capsys)
    assert code == 0 and len(lines) == 4
    code, lines, _ = run(["threshold-mc", "--k", "1", "--trials", "2000", "--seed", "2", "--ga", "3",
                          "--ec", "2"], capsys)
    assert code == 0 and lines[-1]["exact"] > 0


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "sdqcsim.cli", "appendixb"], capture_output=True, text=True)
    assert proc.returncode == 0
    summary = json.loads(proc.stdout.splitlines()[-1])
    assert summary["flips_cases_1_to_4"] and summary["invariant_cases_5_to_8"]
