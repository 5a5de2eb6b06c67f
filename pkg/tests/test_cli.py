import io
import json
import subprocess
import sys

import pytest

from conftest import PROGRAMS
from lazystep.cli import main


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def prog(name):
    return str(PROGRAMS / name)


def test_run_both_modes(capsys):
    code, out, _ = run(["run", prog("ex1.lzy"), "--mode", "both"], capsys)
    assert code == 0
    assert "value: 12" in out and "5 steps (both)" in out
    assert "both paths agree on 5 steps" in out


def test_run_text_is_plain_off_a_terminal(capsys):
    code, out, _ = run(["run", prog("ex1.lzy"), "--text"], capsys)
    assert code == 0
    assert "\x1b[" not in out
    assert "(+ «(+ 1 5)» «(+ 1 5)»)" in out and "→ ‹12›" in out


@pytest.mark.parametrize(
    "name,mode,code,needle",
    [
        ("div0.lzy", "reference", 2, "stuck"),
        ("div0.lzy", "instrumented", 2, "stuck"),
        ("ex2.lzy", "both", 0, "value: 3"),
        ("ex3.lzy", "both", 0, "value: 5"),
        ("fib.lzy", "instrumented", 0, "value: 21"),
    ],
)
def test_run_exit_codes(capsys, name, mode, code, needle):
    got, out, _ = run(["run", prog(name), "--mode", mode], capsys)
    assert got == code and needle in out


def test_zero_budget_times_out(capsys):
    code, out, _ = run(["run", prog("ex1.lzy"), "--budget", "0"], capsys)
    assert code == 3 and "timeout" in out


def test_budget_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("LAZYSTEP_BUDGET", "2")
    code, _, _ = run(["run", prog("ex1.lzy")], capsys)
    assert code == 3
    monkeypatch.setenv("LAZYSTEP_BUDGET", "lots")
    with pytest.raises(SystemExit):
        main(["run", prog("ex1.lzy")])


def test_input_errors(capsys, tmp_path):
    code, _, err = run(["run", str(tmp_path / "missing.lzy")], capsys)
    assert code == 1 and "cannot read" in err
    bad = tmp_path / "bad.lzy"
    bad.write_text("(car)")
    code, _, err = run(["run", str(bad)], capsys)
    assert code == 1 and "arity error" in err


def test_trace_then_view(capsys, monkeypatch, tmp_path):
    path = tmp_path / "ex1.json"
    assert run(["run", prog("ex1.lzy"), "--trace", str(path)], capsys)[0] == 0
    assert json.loads(path.read_text())["verdict"] == "value"
    before = path.read_bytes()
    code, out, _ = run(["view", str(path), "--no-color", "--layout", "stacked"], capsys, "n\nn\nn\nn\nq\n", monkeypatch)
    assert code == 0
    assert out.rstrip().endswith("→ ‹12›")
    assert path.read_bytes() == before  # the viewer never writes


def test_live_trace_and_view(capsys, monkeypatch, tmp_path):
    path = tmp_path / "ex3.ndjson"
    assert run(["run", prog("ex3.lzy"), "--trace", str(path)], capsys)[0] == 0
    lines = path.read_text().splitlines()
    assert json.loads(lines[0])["format"] == "lazystep-live/1"
    assert json.loads(lines[-1])["verdict"] == "value"
    code, out, _ = run(["view", str(path), "--no-color"], capsys, "G\np\n/999\n", monkeypatch)
    assert code == 0 and "clamped to step" in out


def test_view_rejects_garbage(capsys, tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{}")
    code, _, err = run(["view", str(path)], capsys)
    assert code == 1 and "lacks" in err


def test_check_commands(capsys):
    code, out, _ = run(["check", "--fuzz", "0"], capsys)
    assert code == 0 and "failures: 0" in out
    code, out, _ = run(["check", "--fuzz", "20", "--seed", "7"], capsys)
    assert code == 0 and "programs: 20" in out and "failures: 0" in out
    code, out, _ = run(["check", "--bench", "--bench-n", "5"], capsys)
    assert code == 0 and out.startswith("fib 5: steps")


def test_calc(capsys):
    code, out, _ = run(["calc", "--max-size", "5", "--max-depth", "6"], capsys)
    assert code == 0 and "normal-form counterexamples: 0" in out


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "lazystep", "run", prog("ex2.lzy")], capture_output=True, text=True, timeout=60
    )
    assert res.returncode == 0 and "value: 3" in res.stdout
