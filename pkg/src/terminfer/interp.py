"""A small depth-bounded SLD interpreter (leftmost selection, depth-first,
occurs check) and random query generation, used for smoke-testing inferred
modes against concrete runs."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator

from .frontend import (Clause, Compound, Constant, Program, Term,
                       Variable, make_list)

FINISHED = "finished"
DEPTH_EXCEEDED = "depth_exceeded"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class RunResult:
    status: str
    solutions: int
    steps: int
    max_depth: int
    calls: list = field(default_factory=list)

    @property
    def terminated(self) -> bool:
        return self.status == FINISHED


class _Store:
    def __init__(self):
        self.bindings: dict[str, Term] = {}
        self.trail: list[str] = []

    def deref(self, t: Term) -> Term:
        while isinstance(t, Variable) and t.name in self.bindings:
            t = self.bindings[t.name]
        return t

    def resolve(self, t: Term) -> Term:
        t = self.deref(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(self.resolve(a) for a in t.args))
        return t

    def bind(self, v: Variable, t: Term):
        self.bindings[v.name] = t
        self.trail.append(v.name)

    def undo(self, mark: int):
        while len(self.trail) > mark:
            del self.bindings[self.trail.pop()]

    def occurs(self, name: str, t: Term) -> bool:
        stack = [t]
        while stack:
            s = self.deref(stack.pop())
            if isinstance(s, Variable):
                if s.name == name:
                    return True
            elif isinstance(s, Compound):
                stack.extend(s.args)
        return False

    def unify(self, a: Term, b: Term) -> bool:
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            x, y = self.deref(x), self.deref(y)
            if x == y:
                continue
            if isinstance(x, Variable):
                if self.occurs(x.name, y):
                    return False
                self.bind(x, y)
            elif isinstance(y, Variable):
                if self.occurs(y.name, x):
                    return False
                self.bind(y, x)
            elif isinstance(x, Compound) and isinstance(y, Compound):
                if x.functor != y.functor or len(x.args) != len(y.args):
                    return False
                stack.extend(zip(x.args, y.args))
            else:
                return False
        return True


_anon = itertools.count()


def _rename(t: Term, suffix: str) -> Term:
    if isinstance(t, Variable):
        if t.name == "_":
            return Variable(f"_#{next(_anon)}")
        return Variable(f"{t.name}#{suffix}")
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_rename(a, suffix) for a in t.args))
    return t


def _key(t: Term):
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    if isinstance(t, Constant):
        return (t.symbol, 0)
    return None


def run(program: Program, goal: Term | list[Term], max_depth: int = 10_000,
        max_steps: int = 200_000, record_calls: bool = False) -> RunResult:
    """Explore the whole SLD tree of ``goal`` (all solutions).

    Depth counts resolution steps along the current branch.  Stops early with
    ``DEPTH_EXCEEDED`` or ``BUDGET_EXHAUSTED``.  With ``record_calls`` the
    instantiated selected atoms are collected as ``(depth, atom)`` pairs.
    """
    by_key: dict = {}
    for c in program.clauses:
        if not isinstance(c, Clause):
            raise TypeError("the interpreter runs source clauses, not normalized ones")
        by_key.setdefault(c.key, []).append(c)
    store = _Store()
    fresh = itertools.count()
    goals = list(goal) if isinstance(goal, list) else [goal]
    # goal list as a linked list of (atom, depth, rest)
    cur = None
    for g in reversed(goals):
        cur = (g, 0, cur)
    choices: list = []
    steps = solutions = deepest = 0
    calls = []

    def try_clauses(node, start: int) -> object | bool:
        atom, depth, rest = node
        cands = by_key.get(_key(store.deref(atom)), [])
        for idx in range(start, len(cands)):
            mark = len(store.trail)
            sfx = str(next(fresh))
            c = cands[idx]
            if store.unify(atom, _rename(c.head, sfx)):
                if idx + 1 < len(cands):
                    choices.append((node, idx + 1, mark))
                new = rest
                for b in reversed(c.body):
                    new = (_rename(b, sfx), depth + 1, new)
                return new
            store.undo(mark)
        return False

    def backtrack():
        while choices:
            node, idx, mark = choices.pop()
            store.undo(mark)
            nxt = try_clauses(node, idx)
            if nxt is not False:
                return nxt
        return False

    while True:
        if cur is None:
            solutions += 1
            cur = backtrack()
            if cur is False:
                return RunResult(FINISHED, solutions, steps, deepest, calls)
            continue
        atom, depth, rest = cur
        deepest = max(deepest, depth)
        if depth > max_depth:
            return RunResult(DEPTH_EXCEEDED, solutions, steps, deepest, calls)
        steps += 1
        if steps > max_steps:
            return RunResult(BUDGET_EXHAUSTED, solutions, steps, deepest, calls)
        a = store.deref(atom)
        if isinstance(a, Compound) and a.functor == "=" and len(a.args) == 2:
            mark = len(store.trail)
            if store.unify(a.args[0], a.args[1]):
                cur = rest
            else:
                store.undo(mark)
                cur = backtrack()
        else:
            if record_calls:
                calls.append((depth, store.resolve(a)))
            cur = try_clauses(cur, 0)
            if cur is False:
                cur = backtrack()
        if cur is False:
            return RunResult(FINISHED, solutions, steps, deepest, calls)


# -- random queries ---------------------------------------------------------------------


def _collect(t: Term, out: set):
    if isinstance(t, Compound):
        if t.functor != "=":
            out.add((t.functor, len(t.args)))
        for a in t.args:
            _collect(a, out)
    elif isinstance(t, Constant):
        out.add((t.symbol, 0))


def data_functors(program: Program) -> list[tuple[str, int]]:
    """Function symbols occurring inside argument positions of the program."""
    out: set = set()
    for c in program.clauses:
        for atom in (c.head, *c.body):
            if isinstance(atom, Compound):
                for a in atom.args:
                    _collect(a, out)
    out.add(("[]", 0))
    return sorted(out)


class QueryGenerator:
    """Random ground data built from the program's own function symbols.

    ``rigid_lists`` produces lists of fresh variables instead of ground
    lists for half the bound arguments (rigid under the list-length norm).
    """

    def __init__(self, program: Program, seed: int = 0, max_size: int = 6,
                 rigid_lists: bool = False):
        self.rng = random.Random(seed)
        self.functors = data_functors(program)
        self.constants = [f for f, n in self.functors if n == 0] or ["[]"]
        self.compounds = [(f, n) for f, n in self.functors if n > 0 and f != "."]
        self.max_size = max_size
        self.rigid_lists = rigid_lists
        self._vars = itertools.count()

    def fresh(self) -> Variable:
        return Variable(f"Q{next(self._vars)}")

    def ground(self, budget: int | None = None) -> Term:
        budget = self.max_size if budget is None else budget
        r = self.rng.random()
        if budget <= 0 or r < 0.3:
            return Constant(self.rng.choice(self.constants))
        if r < 0.75 or not self.compounds:
            n = self.rng.randint(0, min(budget, 4))
            return make_list([self.ground(budget // 2 - 1) for _ in range(n)])
        f, n = self.rng.choice(self.compounds)
        return Compound(f, tuple(self.ground((budget - 1) // n) for _ in range(n)))

    def rigid(self) -> Term:
        if self.rigid_lists and self.rng.random() < 0.5:
            n = self.rng.randint(0, 4)
            return make_list([self.fresh() for _ in range(n)])
        return self.ground()

    def query(self, mode) -> Term:
        args = tuple(self.rigid() if f == "b" else self.fresh() for f in mode.flags)
        return Compound(mode.pred, args) if args else Constant(mode.pred)

    def queries(self, mode, n: int) -> Iterator[Term]:
        for _ in range(n):
            yield self.query(mode)

