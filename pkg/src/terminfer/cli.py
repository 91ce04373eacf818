"""Command-line interface: ``terminfer [options] FILE`` or ``terminfer --bench DIR``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import pos
from .analysis import binary_semantics, call_analysis, get_norm, success_analysis
from .check import check_termination, parse_mode
from .frontend import FrontendError, ParseError, arg_names, load, normalize
from .infer import TerminationReport, infer_termination

log = logging.getLogger("terminfer")

EXIT_OK, EXIT_USAGE, EXIT_UNKNOWN = 0, 1, 2


@dataclass(frozen=True)
class Config:
    norm: str = "termsize"
    widen_every: int = 3
    action: str = "infer"  # infer | check | dump-binary | dump-success | dump-calls | bench
    mode: str | None = None
    output: str = "text"  # text | json
    hull: bool = True

    def __post_init__(self):
        if self.widen_every < 1:
            raise ValueError("widen_every must be >= 1")
        get_norm(self.norm)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="terminfer",
                description="Infer and check left-termination of pure logic programs.")
    act = p.add_mutually_exclusive_group()
    act.add_argument("--infer", action="store_true", help="infer termination conditions (default)")
    act.add_argument("--check", metavar="MODE", help='check a mode, e.g. "append(b,b,f)"')
    act.add_argument("--dump-binary", action="store_true", help="print the abstract loops")
    act.add_argument("--dump-success", action="store_true", help="print groundness success patterns")
    act.add_argument("--dump-calls", metavar="MODE", help="print call patterns reachable from MODE")
    act.add_argument("--bench", metavar="DIR", help="run every *.pl in DIR against its .expected sidecar")
    p.add_argument("--norm", choices=["termsize", "listlength"], default="termsize")
    p.add_argument("--widen-every", type=int, default=3, metavar="N")
    p.add_argument("--hull", dest="hull", action="store_true", default=True,
                   help="join size relations by convex hull (default)")
    p.add_argument("--no-hull", dest="hull", action="store_false",
                   help="join size relations by common constraints only")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("file", nargs="?", help="program file")
    return p


def config_from_args(ns: argparse.Namespace) -> Config:
    if ns.check:
        action, mode = "check", ns.check
    elif ns.dump_calls:
        action, mode = "dump-calls", ns.dump_calls
    elif ns.dump_binary:
        action, mode = "dump-binary", None
    elif ns.dump_success:
        action, mode = "dump-success", None
    elif ns.bench:
        action, mode = "bench", None
    else:
        action, mode = "infer", None
    return Config(ns.norm, ns.widen_every, action, mode, "json" if ns.json else "text", ns.hull)


# -- formatting -------------------------------------------------------------------------


def report_json(report: TerminationReport) -> list[dict]:
    return [{"predicate": r.pred,
             "arity": r.arity,
             "condition": pos.render(r.condition),
             "minimal_modes": [str(m) for m in r.modes or []],
             "loops": len(r.loops)}
            for r in report.predicates]


def report_text(report: TerminationReport) -> str:
    lines = []
    for r in report.predicates:
        line = str(r)
        if r.modes:
            line += "    % modes: " + " ".join(str(m) for m in r.modes)
        lines.append(line)
        if r.notice:
            lines.append(f"% {r.notice}")
    if report.widenings:
        lines.append(f"% widening fired {report.widenings} time(s); size relations may be approximate")
    return "\n".join(lines)


def _head(key) -> str:
    name, n = key
    return f"{name}({','.join(arg_names(n))})" if n else name


def _emit(text: str, out):
    if text:
        print(text, file=out)


# -- bench --------------------------------------------------------------------------------


def read_sidecar(path: Path) -> tuple[dict, dict]:
    """Expected conditions ``{(pred, arity): PosFormula}`` plus directives
    (``% norm: listlength``, ``% widen-every: 4``)."""
    expected, directives = {}, {}
    for n, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line[0] in "%#":
            body = line[1:].strip()
            key, sep, val = body.partition(":")
            if sep and key.strip() in ("norm", "widen-every"):
                directives[key.strip()] = val.strip()
            continue
        head, sep, cond = line.partition(":")
        name, slash, ar = head.strip().rpartition("/")
        if not sep or not slash or not ar.isdigit():
            raise ValueError(f"{path}:{n}: expected 'pred/arity: condition'")
        expected[(name, int(ar))] = pos.parse(cond.strip())
    return expected, directives


def bench(directory: Path, config: Config, out=sys.stdout) -> list[dict]:
    rows = []
    for prog in sorted(directory.glob("*.pl")):
        side = prog.with_suffix(".expected")
        if not side.exists():
            log.warning("%s: no sidecar %s, skipped", prog.name, side.name)
            continue
        expected, directives = read_sidecar(side)
        cfg = replace(config, norm=directives.get("norm", config.norm),
                      widen_every=int(directives.get("widen-every", config.widen_every)))
        program = normalize(load(prog))
        t0 = time.perf_counter()
        report = infer_termination(program, cfg.norm, cfg.widen_every, hull=cfg.hull)
        elapsed = time.perf_counter() - t0
        got = report.conditions
        mismatches = []
        for key, want in expected.items():
            have = got.get(key)
            if have is None or have != want:
                mismatches.append({"predicate": f"{key[0]}/{key[1]}", "expected": pos.render(want),
                                   "inferred": None if have is None else pos.render(have)})
        loops = binary_semantics(program, cfg.norm, cfg.widen_every, cfg.hull)
        unchecked = []
        for r in report.predicates:
            for m in r.modes or []:
                if not check_termination(program, m, cfg.norm, cfg.widen_every,
                                         hull=cfg.hull, loops=loops).terminates:
                    unchecked.append(str(m))
        rows.append({"program": prog.stem, "norm": cfg.norm, "widen_every": cfg.widen_every,
                     "expected": len(expected), "matched": len(expected) - len(mismatches),
                     "mismatches": mismatches, "modes_not_checked": unchecked,
                     "conditions": {f"{k[0]}/{k[1]}": pos.render(v) for k, v in got.items()},
                     "seconds": round(elapsed, 3)})
    if config.output == "json":
        print(json.dumps(rows, indent=2), file=out)
    else:
        print(f"{'program':<16}{'norm':<12}{'match':>8}{'checked':>9}{'time/s':>9}", file=out)
        for row in rows:
            checked = "ok" if not row["modes_not_checked"] else f"{len(row['modes_not_checked'])} bad"
            print(f"{row['program']:<16}{row['norm']:<12}"
                  f"{row['matched']:>4}/{row['expected']:<3}{checked:>9}{row['seconds']:>9.2f}", file=out)
            for mm in row["mismatches"]:
                print(f"    {mm['predicate']}: expected {mm['expected']}, inferred {mm['inferred']}",
                      file=out)
        total = sum(r["expected"] for r in rows)
        good = sum(r["matched"] for r in rows)
        print(f"{good}/{total} conditions match across {len(rows)} program(s)", file=out)
    return rows


# -- entry point ----------------------------------------------------------------------------


def run(argv: Sequence[str] | None = None, out=sys.stdout) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except ValueError as e:
        parser.error(str(e))
    if cfg.action == "bench":
        if ns.file:
            parser.error("--bench takes a directory, not a file")
        d = Path(ns.bench)
        if not d.is_dir():
            parser.error(f"{d} is not a directory")
        try:
            bench(d, cfg, out)
        except (FrontendError, ValueError, OSError) as e:
            print(f"terminfer: {e}", file=sys.stderr)
            return EXIT_USAGE
        return EXIT_OK
    if not ns.file:
        parser.error("a program file is required")
    try:
        program = normalize(load(ns.file)).validate()
        return _dispatch(cfg, program, out)
    except ParseError as e:
        print(f"{ns.file}:{e.line}:{e.column}: {e.message}", file=sys.stderr)
    except (FrontendError, ValueError, OSError) as e:
        print(f"terminfer: {e}", file=sys.stderr)
    return EXIT_USAGE


def _dispatch(cfg: Config, program, out) -> int:
    as_json = cfg.output == "json"
    if cfg.action == "infer":
        report = infer_termination(program, cfg.norm, cfg.widen_every, hull=cfg.hull)
        _emit(json.dumps(report_json(report), indent=2) if as_json else report_text(report), out)
        for r in report.predicates:
            if r.notice:
                log.warning("%s/%d: %s", r.pred, r.arity, r.notice)
        return EXIT_OK
    if cfg.action == "check":
        rep = check_termination(program, parse_mode(cfg.mode), cfg.norm, cfg.widen_every,
                                hull=cfg.hull)
        if as_json:
            _emit(json.dumps({"mode": str(rep.mode), "verdict": rep.verdict,
                              "items": [str(i) for i in rep.items]}, indent=2), out)
        else:
            _emit(str(rep), out)
        return EXIT_OK if rep.terminates else EXIT_UNKNOWN
    if cfg.action == "dump-binary":
        loops = binary_semantics(program, cfg.norm, cfg.widen_every, cfg.hull)
        if as_json:
            _emit(json.dumps([{"predicate": b.pred, "arity": b.arity, "constraints": str(b.pi)}
                              for b in loops], indent=2), out)
        else:
            _emit("\n".join(str(b) for b in loops), out)
        return EXIT_OK
    if cfg.action == "dump-success":
        succ = success_analysis(program, cfg.norm)
        _emit_map(succ, as_json, out)
        return EXIT_OK
    if cfg.action == "dump-calls":
        mode = parse_mode(cfg.mode)
        calls = call_analysis(program, mode, cfg.norm)
        _emit_map({k: v for k, v in calls.items() if not v.is_bottom}, as_json, out)
        return EXIT_OK
    raise AssertionError(cfg.action)


def _emit_map(m, as_json, out):
    if as_json:
        _emit(json.dumps([{"predicate": k[0], "arity": k[1], "formula": pos.render(v)}
                          for k, v in m.items()], indent=2), out)
    else:
        _emit("\n".join(f"{_head(k)} <- {pos.render(v)}" for k, v in m.items()), out)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
