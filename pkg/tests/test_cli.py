import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sdpl.cli import Config, main
from sdpl.parser import parse_program

ROOT = Path(__file__).resolve().parent.parent
PROG = ROOT / "programs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_square(capsys):
    code, out, _ = run(capsys, "check", PROG / "square.sdpl")
    assert code == 0 and out.strip() == "real → real"


def test_check_reports_type_error(capsys, tmp_path):
    f = tmp_path / "bad.sdpl"
    f.write_text("input x: real;\nfst(x)")
    code, _, err = run(capsys, "check", f)
    assert code == 1 and "2:1" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "check", "no/such.sdpl")
    assert code == 1 and "cannot read" in err


def test_usage_error_exit(capsys):
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "run", PROG / "square.sdpl", "1,2")[0] == 1
    assert run(capsys, "run", PROG / "square.sdpl", "3", "--budget", "0")[0] == 1


def test_run_and_json(capsys):
    code, out, _ = run(capsys, "run", PROG / "pairs.sdpl", "2,3")
    assert code == 0 and out.strip() == "(6.0, -1.0)"
    code, out, _ = run(capsys, "run", PROG / "square.sdpl", "3", "--json")
    assert json.loads(out) == {"value": 9.0}


def test_run_error_kind(capsys):
    code, out, _ = run(capsys, "run", PROG / "partial.sdpl", "-1")
    assert code == 1 and out.startswith("UndefinedPrimitive")


def test_trace_parses_back(capsys):
    code, out, _ = run(capsys, "trace", PROG / "rd-while.sdpl", "5")
    assert code == 0
    parse_program("input a: real;\n" + out)
    assert "while" not in out
    code, out2, _ = run(capsys, "trace", PROG / "rd-while.sdpl", "5", "--json")
    assert json.loads(out2)["value"] == pytest.approx(0.125)


def test_denote(capsys):
    assert run(capsys, "denote", PROG / "factorial.sdpl", "5")[1].strip() == "120.0"
    assert run(capsys, "denote", PROG / "factorial.sdpl", "5", "--fuel", "3")[1].strip() == "undefined"
    code, out, _ = run(capsys, "denote", PROG / "partial.sdpl", "-1", "--json")
    assert code == 0 and json.loads(out) == {"defined": False, "value": None}


def test_diff_stats(capsys):
    code, out, _ = run(capsys, "diff", PROG / "rd-sin-sq.sdpl", "--stats", "--mode", "standard")
    assert code == 0 and "recursive_call_count=" in out and ".rd(" not in out
    code, out, _ = run(capsys, "diff", PROG / "rd-sin-sq.sdpl", "--json")
    d = json.loads(out)
    assert d["mode"] == "optimized" and d["stats"]["recursive_call_count"] > 0
    assert d["term"]["kind"] == "Let"


def test_diff_rejects_control_flow(capsys):
    assert run(capsys, "diff", PROG / "rd-if.sdpl")[0] == 1


def test_transform_output_typechecks(capsys, tmp_path):
    code, out, _ = run(capsys, "transform", PROG / "rd-while.sdpl", "--rule", "while-rd")
    assert code == 0
    f = tmp_path / "t.sdpl"
    f.write_text(out)
    assert run(capsys, "check", f)[1].strip() == "real → real"


def test_verify_transform(capsys):
    code, out, _ = run(capsys, "verify-transform", PROG / "rd-if.sdpl", "--rule", "if-rd",
                       "--samples", "20", "--json")
    d = json.loads(out)
    assert code == 0 and d["passed"] and d["points"] == 20 and d["type_preserved"]
    assert run(capsys, "verify-transform", PROG / "square.sdpl", "--rule", "if-rd")[0] == 1


def test_soundness_and_axioms_small(capsys):
    code, out, _ = run(capsys, "soundness", "--program", "abs", "--samples", "5", "--json")
    d = json.loads(out)
    assert code == 0 and d["passed"] and d["results"][0]["name"] == "sound:abs"
    code, out, _ = run(capsys, "axioms", "--samples", "20", "--maps", "4", "--seed", "7")
    assert code == 0 and "RD.7" in out
    assert all(line.split()[1] == "pass" for line in out.splitlines()[1:])


def test_bench_blowup_csv(capsys):
    code, out, _ = run(capsys, "bench-blowup", "--depths", "6,4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["depth"] for r in rows] == ["4", "6"]
    assert {"depth", "standard_calls", "optimized_calls"} <= set(rows[0])
    assert int(rows[1]["standard_calls"]) > int(rows[1]["optimized_calls"])


def test_deterministic_output(capsys):
    a = run(capsys, "trace", PROG / "rd-nested.sdpl", "0.3", "--seed", "4")[1]
    b = run(capsys, "trace", PROG / "rd-nested.sdpl", "0.3", "--seed", "4")[1]
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        Config(budget=0)
    with pytest.raises(ValueError):
        Config(tol=0.0)
    with pytest.raises(ValueError):
        Config(mode="fast")


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "sdpl.cli", "check", str(PROG / "trig.sdpl")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "real, real → real"
