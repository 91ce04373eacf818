"""Run the benchmark suites and write one JSON record per program.

    python3 scripts/run_block1.py [--suite block1] [--out results/block1.json]
"""
import argparse
import json
import sys
from pathlib import Path

from terminfer.cli import Config, bench

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suite", action="append", help="subdirectory of benchmarks/ (repeatable)")
    ap.add_argument("--widen-every", type=int, default=3)
    ap.add_argument("--no-hull", action="store_true")
    ap.add_argument("--out", type=Path, help="write the JSON rows here")
    args = ap.parse_args(argv)

    suites = args.suite or ["worked", "block1"]
    cfg = Config(widen_every=args.widen_every, hull=not args.no_hull)
    all_rows = {}
    for suite in suites:
        print(f"== {suite}")
        all_rows[suite] = bench(ROOT / "benchmarks" / suite, cfg, sys.stdout)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(all_rows, indent=2) + "\n")
        print(f"wrote {args.out}")
    bad = sum(len(r["mismatches"]) + len(r["modes_not_checked"]) for rows in all_rows.values() for r in rows)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
