"""Positive Boolean functions (Pos) plus bottom, on reduced ordered BDDs.

All formulas live in one shared node table, so two formulas are logically
equivalent iff their ``node`` ids are equal.  Variables are ordered by first
use.  Every public operation returns either a positive function (true at the
all-true point) or the bottom element ``FALSE``.
"""
from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

_TERMINAL_LEVEL = 1 << 30


class _Manager:
    """Hash-consed node table.  Node 0 is false, node 1 is true."""

    def __init__(self):
        self.lock = threading.RLock()
        self.level_of: dict[str, int] = {}
        self.names: list[str] = []
        self.nodes: list[tuple[int, int, int]] = [
            (_TERMINAL_LEVEL, 0, 0),
            (_TERMINAL_LEVEL, 1, 1),
        ]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.apply_cache: dict[tuple, int] = {}
        self.quant_cache: dict[tuple, int] = {}

    def level(self, name: str) -> int:
        lvl = self.level_of.get(name)
        if lvl is None:
            lvl = len(self.names)
            self.level_of[name] = lvl
            self.names.append(name)
        return lvl

    def mk(self, lvl: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (lvl, lo, hi)
        node = self.unique.get(key)
        if node is None:
            node = len(self.nodes)
            self.nodes.append(key)
            self.unique[key] = node
        return node

    def var(self, name: str) -> int:
        return self.mk(self.level(name), 0, 1)

    def apply(self, op: str, u: int, v: int) -> int:
        if u <= 1 and v <= 1:
            return _OPS[op](u, v)
        if op == "and":
            if u == 0 or v == 0:
                return 0
            if u == 1 or u == v:
                return v
            if v == 1:
                return u
        elif op == "or":
            if u == 1 or v == 1:
                return 1
            if u == 0 or u == v:
                return v
            if v == 0:
                return u
        elif op == "imp":
            if u == 0 or v == 1 or u == v:
                return 1
            if u == 1:
                return v
        elif op == "iff" and u == v:
            return 1
        if op in ("and", "or", "iff", "xor") and u > v:
            u, v = v, u
        key = (op, u, v)
        hit = self.apply_cache.get(key)
        if hit is not None:
            return hit
        lu, lo_u, hi_u = self.nodes[u]
        lv, lo_v, hi_v = self.nodes[v]
        lvl = min(lu, lv)
        u0, u1 = (lo_u, hi_u) if lu == lvl else (u, u)
        v0, v1 = (lo_v, hi_v) if lv == lvl else (v, v)
        res = self.mk(lvl, self.apply(op, u0, v0), self.apply(op, u1, v1))
        self.apply_cache[key] = res
        return res

    def neg(self, u: int) -> int:
        return self.apply("xor", u, 1)

    def ite(self, f: int, g: int, h: int) -> int:
        return self.apply("or", self.apply("and", f, g),
                          self.apply("and", self.neg(f), h))

    def quantify(self, u: int, levels: frozenset, universal: bool) -> int:
        if u <= 1 or not levels:
            return u
        key = (universal, u, levels)
        hit = self.quant_cache.get(key)
        if hit is not None:
            return hit
        lvl, lo, hi = self.nodes[u]
        if lvl > max(levels):
            res = u
        else:
            lo_q = self.quantify(lo, levels, universal)
            hi_q = self.quantify(hi, levels, universal)
            if lvl in levels:
                res = self.apply("and" if universal else "or", lo_q, hi_q)
            else:
                res = self.mk(lvl, lo_q, hi_q)
        self.quant_cache[key] = res
        return res

    def compose(self, u: int, mapping: Mapping[int, int], memo: dict) -> int:
        """Substitute variable levels by the variable nodes in ``mapping``."""
        if u <= 1:
            return u
        hit = memo.get(u)
        if hit is not None:
            return hit
        lvl, lo, hi = self.nodes[u]
        repl = mapping.get(lvl)
        x = repl if repl is not None else self.mk(lvl, 0, 1)
        res = self.ite(x, self.compose(hi, mapping, memo),
                       self.compose(lo, mapping, memo))
        memo[u] = res
        return res

    def evaluate(self, u: int, value: Callable[[str], bool]) -> bool:
        while u > 1:
            lvl, lo, hi = self.nodes[u]
            u = hi if value(self.names[lvl]) else lo
        return u == 1

    def support(self, u: int) -> set[int]:
        seen, out, stack = set(), set(), [u]
        while stack:
            n = stack.pop()
            if n <= 1 or n in seen:
                continue
            seen.add(n)
            lvl, lo, hi = self.nodes[n]
            out.add(lvl)
            stack.extend((lo, hi))
        return out


_OPS = {
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "imp": lambda a, b: int((not a) or b),
    "iff": lambda a, b: int(a == b),
    "xor": lambda a, b: a ^ b,
}

_M = _Manager()


def _top_positive(u: int) -> bool:
    return _M.evaluate(u, lambda _name: True)


def _close(u: int) -> "PosFormula":
    """Largest element of Pos + bottom below the Boolean function ``u``."""
    return PosFormula(u) if _top_positive(u) else FALSE


@dataclass(frozen=True)
class PosFormula:
    """An element of Pos augmented with bottom.

    Equality is logical equivalence, since nodes are canonical.
    """

    node: int

    # -- connectives ------------------------------------------------------
    def __and__(self, other: "PosFormula") -> "PosFormula":
        return conj(self, other)

    def __or__(self, other: "PosFormula") -> "PosFormula":
        return disj(self, other)

    def implies(self, other: "PosFormula") -> "PosFormula":
        return pseudo_complement(self, other)

    @property
    def is_bottom(self) -> bool:
        return self.node == 0

    @property
    def is_true(self) -> bool:
        return self.node == 1

    @property
    def vars(self) -> frozenset[str]:
        with _M.lock:
            return frozenset(_M.names[lvl] for lvl in _M.support(self.node))

    def evaluate(self, true_vars: Iterable[str]) -> bool:
        """Truth value under the assignment making exactly ``true_vars`` true."""
        tv = set(true_vars)
        with _M.lock:
            return _M.evaluate(self.node, tv.__contains__)

    def models(self, variables: Iterable[str]) -> list[frozenset[str]]:
        vs = list(variables)
        out = []
        for bits in itertools.product((False, True), repeat=len(vs)):
            tv = frozenset(v for v, b in zip(vs, bits) if b)
            if self.evaluate(tv):
                out.append(tv)
        return out

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"PosFormula({render(self)!r})"


TRUE = PosFormula(1)
FALSE = PosFormula(0)


def mk_true() -> PosFormula:
    return TRUE


def mk_false() -> PosFormula:
    return FALSE


def mk_var(name: str) -> PosFormula:
    with _M.lock:
        return PosFormula(_M.var(name))


def conj(f: PosFormula, g: PosFormula) -> PosFormula:
    with _M.lock:
        return PosFormula(_M.apply("and", f.node, g.node))


def disj(f: PosFormula, g: PosFormula) -> PosFormula:
    with _M.lock:
        return PosFormula(_M.apply("or", f.node, g.node))


def iff(f: PosFormula, g: PosFormula) -> PosFormula:
    with _M.lock:
        return _close(_M.apply("iff", f.node, g.node))


def conj_all(fs: Iterable[PosFormula]) -> PosFormula:
    out = TRUE
    for f in fs:
        out = conj(out, f)
    return out


def disj_all(fs: Iterable[PosFormula]) -> PosFormula:
    out = FALSE
    for f in fs:
        out = disj(out, f)
    return out


def pseudo_complement(psi: PosFormula, e: PosFormula) -> PosFormula:
    """Weakest sigma in Pos + bottom with ``sigma & psi |= e``."""
    with _M.lock:
        return _close(_M.apply("imp", psi.node, e.node))


def entails(f: PosFormula, g: PosFormula) -> bool:
    with _M.lock:
        return _M.apply("imp", f.node, g.node) == 1


def _levels(names: Iterable[str]) -> frozenset:
    return frozenset(_M.level_of[n] for n in names if n in _M.level_of)


def exists(f: PosFormula, var: str | Iterable[str]) -> PosFormula:
    names = [var] if isinstance(var, str) else list(var)
    with _M.lock:
        return PosFormula(_M.quantify(f.node, _levels(names), False))


def forall_project(f: PosFormula, variables: Iterable[str]) -> PosFormula:
    """Largest positive function implying ``forall variables. f``; bottom if none."""
    with _M.lock:
        return _close(_M.quantify(f.node, _levels(variables), True))


def substitute(f: PosFormula, mapping: Mapping[str, str]) -> PosFormula:
    """Replace variables by variables; the mapping may merge variables."""
    if f.node <= 1 or not mapping:
        return f
    with _M.lock:
        lmap = {}
        for old, new in mapping.items():
            if old in _M.level_of and old != new:
                lmap[_M.level_of[old]] = _M.var(new)
        if not lmap:
            return f
        return PosFormula(_M.compose(f.node, lmap, {}))


def rename(f: PosFormula, mapping: Mapping[str, str]) -> PosFormula:
    relevant = {v: mapping.get(v, v) for v in f.vars}
    if len(set(relevant.values())) != len(relevant):
        raise ValueError(f"renaming is not injective on {sorted(relevant)}")
    return substitute(f, mapping)


def from_models(variables: Iterable[str], models: Iterable[Iterable[str]]) -> PosFormula:
    """Build the function whose models (restricted to ``variables``) are given.

    The result is closed into Pos + bottom.
    """
    vs = list(variables)
    with _M.lock:
        out = 0
        for m in models:
            ms = set(m)
            cube = 1
            for v in vs:
                lit = _M.var(v)
                cube = _M.apply("and", cube, lit if v in ms else _M.neg(lit))
            out = _M.apply("or", out, cube)
        return _close(out)


def is_monotone(f: PosFormula) -> bool:
    with _M.lock:
        for lvl in _M.support(f.node):
            f0 = _restrict(f.node, lvl, 0)
            f1 = _restrict(f.node, lvl, 1)
            if _M.apply("imp", f0, f1) != 1:
                return False
        return True


def _restrict(u: int, lvl: int, val: int) -> int:
    if u <= 1:
        return u
    ulvl, lo, hi = _M.nodes[u]
    if ulvl > lvl:
        return u
    if ulvl == lvl:
        return hi if val else lo
    return _M.mk(ulvl, _restrict(lo, lvl, val), _restrict(hi, lvl, val))


# -- rendering ---------------------------------------------------------------

def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def _cubes(u: int, target: int) -> list[dict[int, int]]:
    """Paths from ``u`` to terminal ``target`` as partial assignments."""
    out: list[dict[int, int]] = []

    def walk(n, path):
        if n <= 1:
            if n == target:
                out.append(dict(path))
            return
        lvl, lo, hi = _M.nodes[n]
        path[lvl] = 0
        walk(lo, path)
        path[lvl] = 1
        walk(hi, path)
        del path[lvl]

    walk(u, {})
    return out


def _cube_node(cube: Mapping[int, int]) -> int:
    n = 1
    for lvl, val in cube.items():
        lit = _M.mk(lvl, 0, 1) if val else _M.mk(lvl, 1, 0)
        n = _M.apply("and", n, lit)
    return n


def _prime_cover(u: int, target: int, order: Callable[[int], object]) -> list[dict[int, int]]:
    """Irredundant cover of u (target=1) or not-u (target=0) by prime cubes."""
    goal = u if target == 1 else _M.neg(u)
    primes: list[dict[int, int]] = []
    for cube in _cubes(u, target):
        cube = dict(cube)
        # drop negative literals first so monotone functions get positive primes
        for lvl in sorted(cube, key=lambda l: (cube[l], order(l))):
            trial = {k: v for k, v in cube.items() if k != lvl}
            if _M.apply("imp", _cube_node(trial), goal) == 1:
                cube = trial
        if cube not in primes:
            primes.append(cube)
    primes.sort(key=lambda c: (len(c), sorted(order(l) for l in c)))
    kept = list(primes)
    for c in list(primes):
        rest = [d for d in kept if d is not c]
        cover = 0
        for d in rest:
            cover = _M.apply("or", cover, _cube_node(d))
        if _M.apply("imp", _cube_node(c), cover) == 1:
            kept = rest
    return kept


def render(f: PosFormula) -> str:
    """Deterministic text form: minimal DNF when monotone, else a CNF of
    implications ``a & b -> c | d``."""
    if f.node == 0:
        return "false"
    if f.node == 1:
        return "true"
    with _M.lock:
        def order(lvl):
            return _natural_key(_M.names[lvl])

        def names(lvls):
            return [_M.names[l] for l in sorted(lvls, key=order)]

        if is_monotone(f):
            terms = []
            for cube in _prime_cover(f.node, 1, order):
                vs = names(l for l, v in cube.items() if v)
                terms.append(vs)
            parts = [" & ".join(t) if len(t) == 1 or len(terms) == 1
                     else "(" + " & ".join(t) + ")" for t in terms]
            return " | ".join(parts)
        clauses = []
        for cube in _prime_cover(f.node, 0, order):
            # a cube of not-f is the negation of a clause of f
            pos = names(l for l, v in cube.items() if v)
            neg = names(l for l, v in cube.items() if not v)
            body = " & ".join(pos) if pos else ""
            head = " | ".join(neg) if neg else "false"
            clauses.append(f"{body} -> {head}" if body else head)
        if len(clauses) == 1:
            return clauses[0]
        return " & ".join(f"({c})" if "->" in c or "|" in c else c for c in clauses)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(<->|->|[&|()]|[A-Za-z_][A-Za-z0-9_']*)")


class FormulaSyntaxError(ValueError):
    pass


def parse(text: str) -> PosFormula:
    """Parse the rendering grammar: true, false, names, &, |, ->, <->, ( )."""
    pos = 0
    tokens = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"bad formula at {pos}: {text!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    toks = tokens
    i = 0

    def peek():
        return toks[i] if i < len(toks) else None

    def eat(tok=None):
        nonlocal i
        t = peek()
        if t is None or (tok is not None and t != tok):
            raise FormulaSyntaxError(f"expected {tok or 'token'} in {text!r}")
        i += 1
        return t

    # raw (possibly non-positive) nodes while parsing; close at the end
    def p_iff():
        u = p_imp()
        while peek() == "<->":
            eat()
            u = _M.apply("iff", u, p_imp())
        return u

    def p_imp():
        u = p_or()
        if peek() == "->":
            eat()
            return _M.apply("imp", u, p_imp())
        return u

    def p_or():
        u = p_and()
        while peek() == "|":
            eat()
            u = _M.apply("or", u, p_and())
        return u

    def p_and():
        u = p_atom()
        while peek() == "&":
            eat()
            u = _M.apply("and", u, p_atom())
        return u

    def p_atom():
        t = eat()
        if t == "(":
            u = p_iff()
            eat(")")
            return u
        if t == "true":
            return 1
        if t == "false":
            return 0
        if t in ("&", "|", "->", "<->", ")"):
            raise FormulaSyntaxError(f"unexpected {t!r} in {text!r}")
        return _M.var(t)

    with _M.lock:
        u = p_iff()
        if peek() is not None:
            raise FormulaSyntaxError(f"trailing input in {text!r}")
        return _close(u)
