"""Termination checking for a given mode of an initial query."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import pos, size
from .analysis import (TERM_SIZE, BinaryClause, BinarySemantics, Norm,
                       binary_semantics, call_analysis, get_norm,
                       success_analysis)
from .frontend import PredKey, Program, UnknownPredicate, arg_names, normalize

ArgSet = frozenset  # of 1-based argument positions
CheckProcedure = Callable[[ArgSet, BinaryClause], bool]


@dataclass(frozen=True)
class Mode:
    pred: str
    flags: tuple[str, ...]

    def __post_init__(self):
        bad = [f for f in self.flags if f not in ("b", "f")]
        if bad:
            raise ValueError(f"mode flags must be 'b' or 'f', got {bad}")

    @property
    def arity(self) -> int:
        return len(self.flags)

    @property
    def key(self) -> PredKey:
        return (self.pred, self.arity)

    @property
    def bound(self) -> ArgSet:
        return frozenset(i + 1 for i, f in enumerate(self.flags) if f == "b")

    def formula(self) -> pos.PosFormula:
        names = arg_names(self.arity)
        return pos.conj_all(pos.mk_var(names[i - 1]) for i in sorted(self.bound))

    @classmethod
    def from_bound(cls, pred: str, arity: int, bound: Iterable[int]) -> "Mode":
        b = set(bound)
        return cls(pred, tuple("b" if i in b else "f" for i in range(1, arity + 1)))

    def __str__(self):
        return f"{self.pred}({','.join(self.flags)})" if self.flags else self.pred


_MODE = re.compile(r"\s*([a-z][A-Za-z0-9_]*)\s*(?:\(\s*([bf](?:\s*,\s*[bf])*)\s*\))?\s*\Z")


def parse_mode(text: str) -> Mode:
    """``"append(b,b,f)"`` -> Mode."""
    m = _MODE.match(text)
    if not m:
        raise ValueError(f"cannot parse mode {text!r}; expected e.g. 'append(b,b,f)'")
    flags = tuple(f.strip() for f in m.group(2).split(",")) if m.group(2) else ()
    return Mode(m.group(1), flags)


def instantiated_set(phi: pos.PosFormula, args: Sequence[str]) -> ArgSet:
    """Positions (1-based) of ``args`` that ``phi`` forces to be ground."""
    return frozenset(i for i, a in enumerate(args, 1) if pos.entails(phi, pos.mk_var(a)))


MAX_MODEL_ARITY = 12


def minimal_instantiations(kappa: pos.PosFormula, arity: int) -> list[ArgSet]:
    """Subset-minimal sets of ground arguments among the models of a merged
    call pattern.  Above ``MAX_MODEL_ARITY`` only the arguments ground in
    every model are returned (a single, weaker set)."""
    names = arg_names(arity)
    if kappa.is_bottom:
        return []
    if arity > MAX_MODEL_ARITY:
        return [instantiated_set(kappa, names)]
    found: list[ArgSet] = []
    for k in range(arity + 1):
        for combo in itertools.combinations(range(1, arity + 1), k):
            s = frozenset(combo)
            if any(f <= s for f in found):
                continue
            if kappa.evaluate(names[i - 1] for i in combo):
                found.append(s)
    return found


def chk_fast(I: Iterable[int], beta: BinaryClause) -> bool:
    """True ("yes") when no solution of the loop lets every argument in ``I``
    keep or grow its size, so at least one of them strictly decreases."""
    I = sorted(set(I))
    if not I:
        return False
    if beta.pi.unsat:
        return True
    extra = [size.make_constraint({f"x{i}": 1, f"y{i}": -1}, 0, size.LE) for i in I]
    return not size.satisfiable(tuple(beta.pi.constraints) + tuple(extra))


@dataclass(frozen=True)
class CheckItem:
    pred: PredKey
    call_pattern: pos.PosFormula
    instantiated: tuple[ArgSet, ...]
    loop: BinaryClause
    answers: tuple[bool, ...]

    @property
    def verdict(self) -> bool:
        return all(self.answers)

    def __str__(self):
        name = f"{self.pred[0]}/{self.pred[1]}"
        sets = ", ".join("{" + ",".join(f"x{i}" for i in sorted(I)) + "}"
                         + ("" if ok else " unknown") for I, ok in zip(self.instantiated, self.answers))
        v = "yes" if self.verdict else "unknown"
        return f"{name} called with {pos.render(self.call_pattern)} [I: {sets}]: {v} for {self.loop}"


@dataclass
class CheckReport:
    mode: Mode
    terminates: bool
    items: list[CheckItem] = field(default_factory=list)
    calls: dict[PredKey, pos.PosFormula] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "terminates" if self.terminates else "unknown"

    def __str__(self):
        lines = [f"{self.mode}: {self.verdict}"]
        lines += [f"  {item}" for item in self.items]
        return "\n".join(lines)


def check_termination(program: Program, mode: Mode | str, norm: Norm | str = TERM_SIZE,
                      widen_every: int = 3, chk: CheckProcedure = chk_fast,
                      hull: bool = True, loops: BinarySemantics | None = None) -> CheckReport:
    """Check every reachable call pattern against every loop of its predicate.

    Call patterns are merged per predicate by disjunction; each minimal model
    of the merged formula is checked on its own, so an alternative such as
    ``x3 | (x1 & x2)`` needs a decreasing set inside ``{3}`` and inside
    ``{1,2}``.
    """
    if isinstance(mode, str):
        mode = parse_mode(mode)
    norm = get_norm(norm)
    program = normalize(program).validate()
    if mode.key not in program.predicates:
        raise UnknownPredicate([mode.key])
    succ = success_analysis(program, norm)
    calls = call_analysis(program, mode, norm, succ)
    if loops is None:
        loops = binary_semantics(program, norm, widen_every, hull)
    items = []
    for key in program.predicates:
        kappa = calls[key]
        if kappa.is_bottom:
            continue
        sets = tuple(minimal_instantiations(kappa, key[1]))
        for beta in loops.loops_of(key):
            answers = tuple(bool(I) and chk(I, beta) for I in sets)
            items.append(CheckItem(key, kappa, sets, beta, answers))
    return CheckReport(mode, all(i.verdict for i in items), items, calls)
