"""How the widening period and the join operator affect precision.

For each period N and join (hull / common constraints) every benchmark is
analysed with N forced (sidecar directives ignored) and the number of
conditions equal to the expectation is reported.
"""
import argparse
import time
from pathlib import Path

from terminfer.cli import read_sidecar
from terminfer.frontend import load
from terminfer.infer import infer_termination

ROOT = Path(__file__).resolve().parent.parent


def sweep(periods, suites):
    programs = []
    for suite in suites:
        for prog in sorted((ROOT / "benchmarks" / suite).glob("*.pl")):
            side = prog.with_suffix(".expected")
            if side.exists():
                expected, directives = read_sidecar(side)
                programs.append((prog, load(prog), expected, directives.get("norm", "termsize")))
    total = sum(len(e) for _, _, e, _ in programs)
    print(f"{'period':>6} {'join':<8} {'match':>9} {'time/s':>8}  lost")
    for n in periods:
        for hull in (True, False):
            t0 = time.perf_counter()
            good, lost = 0, []
            for path, prog, expected, norm in programs:
                got = infer_termination(prog, norm, n, hull=hull).conditions
                for key, want in expected.items():
                    if got.get(key) == want:
                        good += 1
                    else:
                        lost.append(f"{path.stem}:{key[0]}")
            dt = time.perf_counter() - t0
            print(f"{n:>6} {'hull' if hull else 'common':<8} {good:>4}/{total:<4} {dt:>8.2f}  {' '.join(lost)}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", default="1,2,3,4,5,6")
    ap.add_argument("--suite", action="append")
    args = ap.parse_args(argv)
    sweep([int(p) for p in args.periods.split(",")], args.suite or ["worked", "block1"])


if __name__ == "__main__":
    main()
