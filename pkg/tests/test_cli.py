import csv
import io

import pytest

from stockflow.cli import cli_main


def run_cli(capsys, *argv):
    code = cli_main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "base.csv"
    code, _, _ = run_cli(capsys, "run", "pharma-baseline", "-o", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 962
    assert lines[0].startswith("Time,")


def test_run_zero_time_step_is_model_error(capsys):
    code, _, err = run_cli(capsys, "run", "pharma-baseline", "--set", "TIME STEP=0")
    assert code == 2
    assert "TIME STEP" in err


def test_usage_error_exit_code(capsys):
    assert run_cli(capsys, "run")[0] == 1
    assert run_cli(capsys, "bogus-command")[0] == 1
    assert run_cli(capsys, "run", "pharma-baseline", "--set", "oops")[0] == 1


def test_parse_error_reports_line_and_column(tmp_path, capsys):
    bad = tmp_path / "bad.sd"
    bad.write_text("x = MAX(1)\ny = 1 +\n")
    code, _, err = run_cli(capsys, "check", str(bad))
    assert code == 2
    assert "1:" in err and "2:" in err


def test_unknown_model_ref(capsys):
    code, _, err = run_cli(capsys, "run", "no-such-model")
    assert code == 2
    assert "no-such-model" in err


def test_runtime_abort_exit_code(tmp_path, capsys):
    src = tmp_path / "explode.sd"
    src.write_text("x = 1 / (5 - time)\nFINAL TIME = 10\nTIME STEP = 1\n")
    code, _, err = run_cli(capsys, "run", str(src))
    assert code == 3
    assert "x" in err


def test_check_tree_output(capsys):
    code, out, _ = run_cli(
        capsys,
        "check",
        "pharma-baseline",
        "--tree",
        "causes",
        "--var",
        "hiring rate",
        "--depth",
        "1",
    )
    assert code == 0
    assert "hiring rate" in out
    assert "  testers needed" in out
    assert "  HIRING DELAY" in out


def test_cli_deterministic(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run_cli(capsys, "run", "pharma-baseline", "--set", "A=1", "--seed", "9", "-o", str(a))[0] == 0
    assert run_cli(capsys, "run", "pharma-baseline", "--set", "A=1", "--seed", "9", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_var_selection(tmp_path, capsys):
    out = tmp_path / "sel.csv"
    code, _, _ = run_cli(
        capsys, "run", "pharma-baseline", "--vars", "order rate,production rate", "-o", str(out)
    )
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "Time,order rate,production rate"


def test_set_init_overrides_stock(tmp_path, capsys):
    out = tmp_path / "init.csv"
    code, _, _ = run_cli(
        capsys,
        "run",
        "pharma-baseline",
        "--set-init",
        "Trainee Testers=20",
        "--vars",
        "Trainee Testers",
        "-o",
        str(out),
    )
    assert code == 0
    first = out.read_text().splitlines()[1]
    assert first.split(",")[1] == "20.0"


def test_set_init_rejects_non_stock(capsys):
    code, _, err = run_cli(
        capsys, "run", "pharma-baseline", "--set-init", "HIRING DELAY=4"
    )
    assert code == 2
    assert "not a stock" in err


def test_sweep_writes_per_value_files(tmp_path, capsys):
    stem = tmp_path / "sweep.csv"
    code, out, _ = run_cli(
        capsys,
        "sweep",
        "pharma-baseline",
        "--param",
        "PRODUCTION DELAY",
        "--values",
        "3,6",
        "--vars",
        "quality perceived by customers",
        "-o",
        str(stem),
    )
    assert code == 0
    assert (tmp_path / "sweep_3.csv").exists()
    assert (tmp_path / "sweep_6.csv").exists()
    assert "3" in out and "6" in out


def test_compare_report(tmp_path, capsys):
    report = tmp_path / "report.csv"
    code, out, _ = run_cli(
        capsys,
        "compare",
        "pharma-baseline",
        "pharma-improved",
        "--vars",
        "Trainee Testers",
        "--window",
        "5:120",
        "-o",
        str(report),
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(report.read_text())))
    means = {r["run"]: float(r["mean"]) for r in rows}
    assert means["pharma-improved"] < means["pharma-baseline"]


def test_compare_same_model_with_sets(capsys):
    code, out, _ = run_cli(
        capsys,
        "compare",
        "pharma-baseline",
        "pharma-baseline",
        "--set-b",
        "HIRING DELAY=4",
        "--vars",
        "quitting rate",
        "--window",
        "5:120",
    )
    assert code == 0
    assert "pharma-baseline:a" in out and "pharma-baseline:b" in out


def test_unknown_var_selection_is_model_error(capsys):
    code, _, err = run_cli(capsys, "run", "pharma-baseline", "--vars", "flux capacitor")
    assert code == 2
    assert "flux capacitor" in err


def test_unknown_tree_var_is_model_error(capsys):
    code, _, err = run_cli(
        capsys, "check", "pharma-baseline", "--tree", "uses", "--var", "ghost"
    )
    assert code == 2


def test_serve_port_env_default(monkeypatch):
    from stockflow.cli import _build_parser

    monkeypatch.setenv("STOCKFLOW_PORT", "9321")
    # Parser defaults are read at construction time.
    args = _build_parser().parse_args(["serve"])
    assert args.port == 9321
