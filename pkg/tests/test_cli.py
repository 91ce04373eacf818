import io
import json
import shutil
import subprocess
import sys

import pytest

from terminfer import pos
from terminfer.cli import Config, read_sidecar, run

from conftest import BENCH, ROOT

WORKED = BENCH / "worked"
GOLDEN = ROOT / "tests" / "golden"


def cli(*argv):
    out = io.StringIO()
    code = run(list(map(str, argv)), out)
    return code, out.getvalue()


def test_infer_text():
    code, out = cli(WORKED / "split.pl")
    assert code == 0
    assert out == "split(x1,x2,x3) <- x1 | (x2 & x3)    % modes: split(b,f,f) split(f,b,b)\n"


GOLDEN_RUNS = [("append", []), ("sets", []), ("split", []),
               ("mergesort_ll", ["--norm", "listlength", "--widen-every", "4"])]


@pytest.mark.parametrize("name, flags", GOLDEN_RUNS)
def test_json_matches_golden_bytes(name, flags):
    src = WORKED / f"{name}.pl"
    if not src.exists():
        src = BENCH / "block1" / f"{name}.pl"
    code, out = cli("--json", *flags, src)
    assert code == 0
    assert out == (GOLDEN / f"{name}.json").read_text()


@pytest.mark.parametrize("name, flags", GOLDEN_RUNS)
def test_golden_files_agree_with_sidecars(name, flags):
    src = WORKED / f"{name}.pl"
    if not src.exists():
        src = BENCH / "block1" / f"{name}.pl"
    expected, _ = read_sidecar(src.with_suffix(".expected"))
    rows = json.loads((GOLDEN / f"{name}.json").read_text())
    got = {(r["predicate"], r["arity"]): pos.parse(r["condition"]) for r in rows}
    for key, want in expected.items():
        assert got[key] == want


def test_check_exit_codes(capsys):
    code, out = cli("--check", "append(b,b,f)", WORKED / "append.pl")
    assert code == 0 and out.startswith("append(b,b,f): terminates")
    code, out = cli("--check", "append(f,b,f)", WORKED / "append.pl")
    assert code == 2 and out.startswith("append(f,b,f): unknown")
    code, out = cli("--json", "--check", "s(b,b,b)", WORKED / "sets.pl")
    assert code == 0 and json.loads(out)["verdict"] == "terminates"


def test_every_inferred_mode_checks():
    for name in ("append", "sets", "split"):
        rows = json.loads(cli("--json", WORKED / f"{name}.pl")[1])
        for r in rows:
            for m in r["minimal_modes"]:
                assert cli("--check", m, WORKED / f"{name}.pl")[0] == 0, m


@pytest.mark.parametrize("argv", [
    [],
    ["--widen-every", "0", "x.pl"],
    ["--norm", "depth", "x.pl"],
    ["--check", "append(b,x)", str(WORKED / "append.pl")],
    ["--check", "nope(b)", str(WORKED / "append.pl")],
    ["--infer", "--dump-binary", "x.pl"],
    [str(ROOT / "no-such-file.pl")],
])
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = run(argv, io.StringIO())
    except SystemExit as e:  # argparse-level errors
        code = e.code
    assert code == 1
    assert capsys.readouterr().err


def test_parse_error_reports_position(tmp_path, capsys):
    f = tmp_path / "bad.pl"
    f.write_text("p(a).\nq(X) :- \\+ p(X).\n")
    assert cli(f)[0] == 1
    assert f"{f}:2:9:" in capsys.readouterr().err


def test_unknown_predicate_is_an_error(tmp_path, capsys):
    f = tmp_path / "u.pl"
    f.write_text("p(X) :- q(X).\n")
    assert cli(f)[0] == 1
    assert "q/1" in capsys.readouterr().err


def test_empty_program(tmp_path):
    f = tmp_path / "empty.pl"
    f.write_text("% nothing here\n")
    assert cli(f) == (0, "")
    assert cli("--json", f) == (0, "[]\n")


def test_dump_commands():
    code, out = cli("--dump-binary", WORKED / "append.pl")
    assert out == "append(x1,x2,x3) :- [y1<x1, x2=y2, y3<x3], append(y1,y2,y3).\n"
    code, out = cli("--dump-success", WORKED / "append.pl")
    assert out == "append(x1,x2,x3) <- (x3 -> x1) & (x3 -> x2) & (x1 & x2 -> x3)\n"
    code, out = cli("--dump-calls", "s(b,b,b)", WORKED / "sets.pl")
    assert "subset(x1,x2) <- x1 & x2" in out.splitlines()
    code, out = cli("--json", "--dump-binary", WORKED / "split.pl")
    assert len(json.loads(out)) == 3


def test_widening_notice(tmp_path):
    code, out = cli(WORKED / "sets.pl")
    assert out.rstrip().endswith("size relations may be approximate")


def test_bench_worked():
    code, out = cli("--bench", WORKED)
    assert code == 0
    assert out.splitlines()[-1] == "6/6 conditions match across 3 program(s)"
    code, out = cli("--json", "--bench", WORKED)
    rows = json.loads(out)
    assert [r["program"] for r in rows] == ["append", "sets", "split"]
    assert all(not r["mismatches"] and not r["modes_not_checked"] for r in rows)


def test_bench_empty_and_missing_sidecar(tmp_path, caplog):
    code, out = cli("--bench", tmp_path)
    assert code == 0 and out.splitlines()[-1] == "0/0 conditions match across 0 program(s)"
    shutil.copy(WORKED / "append.pl", tmp_path / "a.pl")
    shutil.copy(WORKED / "split.pl", tmp_path / "b.pl")
    shutil.copy(WORKED / "split.expected", tmp_path / "b.expected")
    code, out = cli("--bench", tmp_path)
    assert code == 0 and "1/1 conditions match across 1 program(s)" in out
    assert "no sidecar" in caplog.text


def test_bench_reports_mismatch(tmp_path):
    shutil.copy(WORKED / "append.pl", tmp_path / "a.pl")
    (tmp_path / "a.expected").write_text("append/3: x1\n")
    code, out = cli("--bench", tmp_path)
    assert "append/3: expected x1, inferred x1 | x3" in out
    assert out.splitlines()[-1].startswith("0/1")


def test_sidecar_directives(tmp_path):
    f = tmp_path / "x.expected"
    f.write_text("% norm: listlength\n% widen-every: 4\n% a comment: ignored\np/2: x1 & x2\n")
    expected, directives = read_sidecar(f)
    assert directives == {"norm": "listlength", "widen-every": "4"}
    assert expected == {("p", 2): pos.parse("x1 & x2")}
    f.write_text("garbage line\n")
    with pytest.raises(ValueError):
        read_sidecar(f)


def test_config_validation():
    with pytest.raises(ValueError):
        Config(widen_every=0)
    with pytest.raises(ValueError):
        Config(norm="depth")


def test_console_script_entry_point():
    exe = shutil.which("terminfer")
    cmd = [exe] if exe else [sys.executable, "-m", "terminfer.cli"]
    res = subprocess.run(cmd + [str(WORKED / "append.pl")], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("append(x1,x2,x3) <- x1 | x3")
