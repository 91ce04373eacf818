import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "benchmarks"

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def bench_programs(suite: str | None = None):
    """(path, expected, directives) for every benchmark with a sidecar."""
    from terminfer.cli import read_sidecar

    dirs = [BENCH / suite] if suite else sorted(p for p in BENCH.iterdir() if p.is_dir())
    out = []
    for d in dirs:
        for prog in sorted(d.glob("*.pl")):
            side = prog.with_suffix(".expected")
            if side.exists():
                expected, directives = read_sidecar(side)
                out.append((prog, expected, directives))
    return out


@pytest.fixture
def seed() -> int:
    return int(os.environ.get("TERMINFER_SEED", "20021"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
