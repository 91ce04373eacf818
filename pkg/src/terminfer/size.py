"""Size relations: conjunctions of linear constraints over non-negative sizes.

A constraint ``sum(a_v * v) + k  rel  0`` with ``rel`` one of ``=``, ``<=``,
``<`` is kept with integer, gcd-reduced coefficients.  Every variable is
implicitly ``>= 0``; this is never stored but is built into satisfiability,
entailment and projection.  All arithmetic is exact.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from . import lp

EQ, LE, LT = "=", "<=", "<"


def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


@dataclass(frozen=True, order=True)
class LinearConstraint:
    coeffs: tuple[tuple[str, int], ...]
    const: int
    rel: str

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, var: str) -> int:
        for v, a in self.coeffs:
            if v == var:
                return a
        return 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def __str__(self) -> str:
        return render_constraint(self)


def make_constraint(coeffs: Mapping[str, object], const: object = 0, rel: str = LE):
    """Canonical constraint, or a bool when no variable is left."""
    cs = {v: Fraction(a) for v, a in coeffs.items() if a != 0}
    k = Fraction(const)
    if rel not in (EQ, LE, LT):
        raise ValueError(f"unknown relation {rel!r}")
    if not cs:
        return {EQ: k == 0, LE: k <= 0, LT: k < 0}[rel]
    dens = [a.denominator for a in cs.values()] + [k.denominator]
    lcm = 1
    for d in dens:
        lcm = lcm * d // math.gcd(lcm, d)
    ints = {v: int(a * lcm) for v, a in cs.items()}
    ik = int(k * lcm)
    g = 0
    for a in list(ints.values()) + [ik]:
        g = math.gcd(g, a)
    ints = {v: a // g for v, a in ints.items()}
    ik //= g
    items = tuple(sorted(ints.items(), key=lambda t: _natural_key(t[0])))
    if rel == EQ and items[0][1] < 0:
        items = tuple((v, -a) for v, a in items)
        ik = -ik
    return LinearConstraint(items, ik, rel)


def _flip(c: LinearConstraint) -> tuple[dict[str, int], int]:
    return {v: -a for v, a in c.coeffs}, -c.const


def negations(c: LinearConstraint) -> list[LinearConstraint | bool]:
    """Constraints whose disjunction is the negation of ``c``."""
    neg, nk = _flip(c)
    if c.rel == LE:
        return [make_constraint(neg, nk, LT)]
    if c.rel == LT:
        return [make_constraint(neg, nk, LE)]
    return [make_constraint(c.as_dict(), c.const, LT), make_constraint(neg, nk, LT)]


def closure(c: LinearConstraint) -> LinearConstraint:
    """Non-strict version of a constraint."""
    return LinearConstraint(c.coeffs, c.const, LE) if c.rel == LT else c


# -- satisfiability ------------------------------------------------------------

_SAT_CACHE: dict[frozenset, bool] = {}
_SAT_CACHE_MAX = 200_000


def satisfiable(constraints: Iterable[LinearConstraint]) -> bool:
    """Exact satisfiability over non-negative rationals."""
    cs = frozenset(constraints)
    hit = _SAT_CACHE.get(cs)
    if hit is not None:
        return hit
    res = _satisfiable(cs)
    if len(_SAT_CACHE) >= _SAT_CACHE_MAX:
        _SAT_CACHE.clear()
    _SAT_CACHE[cs] = res
    return res


def _satisfiable(cs: frozenset) -> bool:
    if not cs:
        return True
    variables = sorted({v for c in cs for v in c.vars}, key=_natural_key)
    idx = {v: i for i, v in enumerate(variables)}
    strict = any(c.rel == LT for c in cs)
    n = len(variables) + (1 if strict else 0)
    rows = []
    for c in cs:
        row = [0] * n
        for v, a in c.coeffs:
            row[idx[v]] = a
        if c.rel == LT:
            row[-1] = 1
        rows.append((row, EQ if c.rel == EQ else LE, -c.const))
    if not strict:
        return lp.maximize([0] * n, rows) is not lp.INFEASIBLE
    rows.append(([0] * (n - 1) + [1], LE, 1))
    best = lp.maximize([0] * (n - 1) + [1], rows)
    return best is not lp.INFEASIBLE and best > 0


# -- conjunctions --------------------------------------------------------------

@dataclass(frozen=True)
class LinearConjunction:
    constraints: tuple[LinearConstraint, ...] = ()
    unsat: bool = False

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(v for c in self.constraints for v in c.vars)

    def __str__(self) -> str:
        return render(self)

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)


TOP = LinearConjunction()
UNSAT = LinearConjunction((), True)


def _canonical(cs: Iterable[LinearConstraint | bool]) -> tuple[LinearConstraint, ...] | None:
    """Drop trivial/duplicate constraints, keep the tightest inequality per
    direction and fuse opposite inequalities into equalities.  None if a
    trivially false constraint is present."""
    eqs: set[LinearConstraint] = set()
    ineq: dict[tuple, tuple[int, str]] = {}
    for c in cs:
        if c is True:
            continue
        if c is False:
            return None
        if c.rel == EQ:
            eqs.add(c)
            continue
        old = ineq.get(c.coeffs)
        # e + k rel 0: a larger k is tighter; at equal k strict is tighter
        if old is None or c.const > old[0] or (c.const == old[0] and c.rel == LT):
            ineq[c.coeffs] = (c.const, c.rel)
    out = set(eqs)
    done = set()
    for key, (k, rel) in ineq.items():
        if key in done:
            continue
        neg = tuple((v, -a) for v, a in key)
        other = ineq.get(neg)
        if other is not None and rel == LE and other[1] == LE and other[0] == -k:
            out.add(make_constraint(dict(key), k, EQ))
            done.update((key, neg))
            continue
        out.add(LinearConstraint(key, k, rel))
    return tuple(sorted(out, key=_sort_key))


def _sort_key(c: LinearConstraint):
    return ([_natural_key(v) for v, _ in c.coeffs], [a for _, a in c.coeffs], c.rel, c.const)


def conjunction(cs: Iterable[LinearConstraint | bool]) -> LinearConjunction:
    canon = _canonical(cs)
    if canon is None or not satisfiable(canon):
        return UNSAT
    return LinearConjunction(canon)


def meet(a: LinearConjunction, b: LinearConjunction) -> LinearConjunction:
    if a.unsat or b.unsat:
        return UNSAT
    return conjunction(a.constraints + b.constraints)


def entails(pi: LinearConjunction, c: LinearConstraint | bool) -> bool:
    """True iff every non-negative model of ``pi`` satisfies ``c``."""
    if pi.unsat or c is True:
        return True
    if c is False:
        return False
    for n in negations(c):
        if n is False:
            continue
        extra = () if n is True else (n,)
        if satisfiable(pi.constraints + extra):
            return False
    return True


def entails_all(a: LinearConjunction, b: LinearConjunction) -> bool:
    if a.unsat:
        return True
    if b.unsat:
        return False
    return all(entails(a, c) for c in b.constraints)


def equivalent(a: LinearConjunction, b: LinearConjunction) -> bool:
    return entails_all(a, b) and entails_all(b, a)


def remove_redundant(cs: tuple[LinearConstraint, ...]) -> tuple[LinearConstraint, ...]:
    kept = list(cs)
    for c in sorted(cs, key=_sort_key, reverse=True):
        rest = LinearConjunction(tuple(d for d in kept if d is not c))
        if entails(rest, c):
            kept.remove(c)
    return tuple(sorted(kept, key=_sort_key))


# -- projection ----------------------------------------------------------------

def _substitute_eq(c: LinearConstraint, var: str, expr: dict[str, Fraction], k: Fraction):
    """Replace ``var`` by ``expr + k`` in ``c``."""
    a = c.coeff(var)
    if a == 0:
        return c
    coeffs = {v: Fraction(b) for v, b in c.coeffs if v != var}
    for v, e in expr.items():
        coeffs[v] = coeffs.get(v, 0) + a * e
    return make_constraint(coeffs, c.const + a * k, c.rel)


def _eliminate_equalities(cs: list, todo: set) -> list | None:
    """Substitute away every variable of ``todo`` occurring in an equality
    (removing it from ``todo``).  None if the result is unsatisfiable."""
    while True:
        pick = None
        for c in cs:
            if c.rel != EQ:
                continue
            hits = [v for v, _ in c.coeffs if v in todo]
            if hits:
                cand = (len(c.coeffs), _natural_key(hits[0]), c, hits[0])
                if pick is None or cand[:2] < pick[:2]:
                    pick = cand
        if pick is None:
            return cs
        _, _, eq, var = pick
        a = Fraction(eq.coeff(var))
        expr = {v: -Fraction(b) / a for v, b in eq.coeffs if v != var}
        k = -Fraction(eq.const) / a
        cs = [_substitute_eq(c, var, expr, k) for c in cs if c is not eq]
        # var >= 0 becomes expr + k >= 0
        cs.append(make_constraint({v: -e for v, e in expr.items()}, -k, LE))
        todo.discard(var)
        canon = _canonical(cs)
        if canon is None:
            return None
        cs = list(canon)


def project(pi: LinearConjunction, keep: Iterable[str]) -> LinearConjunction:
    """Exact projection onto ``keep`` (non-negativity of the eliminated
    variables is accounted for)."""
    if pi.unsat:
        return UNSAT
    keep = set(keep)
    elim = sorted(pi.vars - keep, key=_natural_key)
    if not elim:
        return pi
    todo = set(elim)
    cs = _eliminate_equalities(list(pi.constraints), todo)
    if cs is None:
        return UNSAT

    # Fourier-Motzkin on the rest
    for v in todo:
        cs.append(make_constraint({v: -1}, 0, LE))
    canon = _canonical(cs)
    if canon is None:
        return UNSAT
    cs = _eliminate_equalities(list(canon), todo)
    if cs is None:
        return UNSAT
    while todo:
        def cost(v):
            pos = sum(1 for c in cs if c.coeff(v) > 0)
            neg = sum(1 for c in cs if c.coeff(v) < 0)
            return (pos * neg - pos - neg, _natural_key(v))
        var = min(todo, key=cost)
        todo.discard(var)
        pos = [c for c in cs if c.coeff(var) > 0]
        neg = [c for c in cs if c.coeff(var) < 0]
        rest = [c for c in cs if c.coeff(var) == 0]
        for p in pos:
            ap = p.coeff(var)
            for q in neg:
                aq = -q.coeff(var)
                coeffs: dict[str, int] = {}
                for u, b in p.coeffs:
                    coeffs[u] = coeffs.get(u, 0) + aq * b
                for u, b in q.coeffs:
                    coeffs[u] = coeffs.get(u, 0) + ap * b
                coeffs.pop(var, None)
                rel = LT if LT in (p.rel, q.rel) else LE
                rest.append(make_constraint(coeffs, aq * p.const + ap * q.const, rel))
        canon = _canonical(rest)
        if canon is None:
            return UNSAT
        cs = _eliminate_equalities(list(canon), todo)
        if cs is None:
            return UNSAT
        if len(cs) > 12:
            if not satisfiable(cs):
                return UNSAT
            # pruning treats every variable as non-negative and may drop the
            # explicit bounds that elimination still needs
            pruned = list(remove_redundant(tuple(cs)))
            pruned += [make_constraint({v: -1}, 0, LE) for v in todo]
            cs = list(_canonical(pruned))
    if not satisfiable(cs):
        return UNSAT
    return LinearConjunction(remove_redundant(tuple(cs)))


# -- lattice operations ---------------------------------------------------------

def _hull(a: LinearConjunction, b: LinearConjunction) -> LinearConjunction:
    universe = sorted(a.vars | b.vars, key=_natural_key)
    lam = "#lambda"
    copy = {v: f"#a.{v}" for v in universe}
    cs: list = []
    for c in a.constraints:
        c = closure(c)
        coeffs = {copy[v]: x for v, x in c.coeffs}
        coeffs[lam] = c.const
        cs.append(make_constraint(coeffs, 0, c.rel))
    for c in b.constraints:
        c = closure(c)
        coeffs: dict[str, int] = {}
        for v, x in c.coeffs:
            coeffs[v] = coeffs.get(v, 0) + x
            coeffs[copy[v]] = coeffs.get(copy[v], 0) - x
        coeffs[lam] = coeffs.get(lam, 0) - c.const
        cs.append(make_constraint(coeffs, c.const, c.rel))
    for v in universe:
        cs.append(make_constraint({copy[v]: 1, v: -1}, 0, LE))
    cs.append(make_constraint({lam: 1}, -1, LE))
    hull = project(conjunction(cs), universe)
    out = []
    for c in hull.constraints:
        if c.rel == LE:
            strict = LinearConstraint(c.coeffs, c.const, LT)
            if entails(a, strict) and entails(b, strict):
                c = strict
        out.append(c)
    return conjunction(out)


def join(a: LinearConjunction, b: LinearConjunction, hull: bool = True) -> LinearConjunction:
    """Least upper bound.  ``hull=False`` keeps only mutually entailed
    constraints (cheaper, less precise)."""
    if a.unsat:
        return b
    if b.unsat:
        return a
    if entails_all(a, b):
        return b
    if entails_all(b, a):
        return a
    keep = [c for c in a.constraints if entails(b, c)]
    keep += [c for c in b.constraints if entails(a, c)]
    if hull:
        # the closed hull can miss strict bounds both sides share
        h = _hull(a, b)
        extra = [c for c in keep if not entails(h, c)]
        return conjunction(h.constraints + tuple(extra)) if extra else h
    return conjunction(keep)


def _split_eqs(pi: LinearConjunction) -> list[LinearConstraint]:
    out = []
    for c in pi.constraints:
        if c.rel == EQ:
            out.append(make_constraint(c.as_dict(), c.const, LE))
            neg, nk = _flip(c)
            out.append(make_constraint(neg, nk, LE))
        else:
            out.append(c)
    return out


def widen(old: LinearConjunction, new: LinearConjunction) -> LinearConjunction:
    """Keep exactly the constraints of ``old`` (equalities split into two
    halves) that ``new`` entails."""
    if old.unsat:
        return new
    if new.unsat:
        return old
    kept = [c for c in _split_eqs(old) if entails(new, c) and not entails(TOP, c)]
    return conjunction(kept)


def substitute(pi: LinearConjunction, mapping: Mapping[str, str]) -> LinearConjunction:
    """Variable-for-variable substitution; may merge variables."""
    if pi.unsat:
        return UNSAT
    out = []
    for c in pi.constraints:
        coeffs: dict[str, int] = {}
        for v, a in c.coeffs:
            w = mapping.get(v, v)
            coeffs[w] = coeffs.get(w, 0) + a
        out.append(make_constraint(coeffs, c.const, c.rel))
    return conjunction(out)


def rename(pi: LinearConjunction, mapping: Mapping[str, str]) -> LinearConjunction:
    relevant = {v: mapping.get(v, v) for v in pi.vars}
    if len(set(relevant.values())) != len(relevant):
        raise ValueError(f"renaming is not injective on {sorted(relevant)}")
    return substitute(pi, mapping)


# -- text --------------------------------------------------------------------------

def _side(terms: list[tuple[str, int]], k: int) -> str:
    parts = [v if a == 1 else f"{a}*{v}" for v, a in terms]
    if k:
        parts.append(str(k))
    return " + ".join(parts) if parts else "0"


def render_constraint(c: LinearConstraint, compact: bool = True) -> str:
    lhs = [(v, a) for v, a in c.coeffs if a > 0]
    rhs = [(v, -a) for v, a in c.coeffs if a < 0]
    lk, rk = (c.const, 0) if c.const > 0 else (0, -c.const)
    left, right = _side(lhs, lk), _side(rhs, rk)
    if c.rel == EQ and not lhs:
        left, right = right, left
    sep = c.rel if compact else f" {c.rel} "
    text = f"{left}{sep}{right}"
    return text.replace(" ", "") if compact else text


def render(pi: LinearConjunction) -> str:
    if pi.unsat:
        return "false"
    return "[" + ", ".join(render_constraint(c) for c in pi.constraints) + "]"


_TERM = re.compile(r"([+-]?)\s*(\d+(?:/\d+)?)?\s*\*?\s*([A-Za-z_][A-Za-z0-9_']*)?")


def _parse_expr(text: str) -> tuple[dict[str, Fraction], Fraction]:
    text = text.strip()
    coeffs: dict[str, Fraction] = {}
    k = Fraction(0)
    pos = 0
    if not text:
        raise ValueError("empty linear expression")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad linear expression: {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        num = Fraction(m.group(2)) if m.group(2) else None
        var = m.group(3)
        if var is None and num is None:
            raise ValueError(f"bad linear expression: {text!r}")
        if var is None:
            k += sign * num
        else:
            coeffs[var] = coeffs.get(var, 0) + sign * (num if num is not None else 1)
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos < len(text) and text[pos] not in "+-":
            raise ValueError(f"bad linear expression: {text!r}")
    return coeffs, k


_REL = re.compile(r"(<=|=<|>=|=>|<|>|=)")


def parse_constraint(text: str) -> LinearConstraint | bool:
    """Parse ``lhs rel rhs`` with rel in =, <=, <, >=, >."""
    parts = _REL.split(text)
    if len(parts) != 3:
        raise ValueError(f"expected exactly one relation in {text!r}")
    lhs, rel, rhs = parts
    lc, lk = _parse_expr(lhs)
    rc, rk = _parse_expr(rhs)
    if rel in (">=", "=>", ">"):
        lc, lk, rc, rk = rc, rk, lc, lk
        rel = {">=": LE, "=>": LE, ">": LT}[rel]
    rel = {"=<": LE}.get(rel, rel)
    coeffs = dict(lc)
    for v, a in rc.items():
        coeffs[v] = coeffs.get(v, 0) - a
    return make_constraint(coeffs, lk - rk, rel)


def parse(text: str) -> LinearConjunction:
    """Parse ``[c1, c2, ...]`` (brackets optional) or ``false``."""
    body = text.strip()
    if body == "false":
        return UNSAT
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    if not body.strip():
        return TOP
    return conjunction(parse_constraint(p) for p in body.split(","))
