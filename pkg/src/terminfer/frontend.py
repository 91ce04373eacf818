"""Parsing and normalisation of pure logic programs (Edinburgh syntax subset).

Supported: facts, rules, compound terms, atoms, integers, lists, explicit
``=`` goals and ``%`` / ``/* */`` comments.  Cut, negation, arithmetic and
other built-ins are rejected with :class:`UnsupportedConstruct`.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Union

from . import pos

# -- terms ---------------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple["Term", ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self):
        return format_term(self)


Term = Union[Variable, Constant, Compound]

NIL = Constant("[]")


def cons(head: Term, tail: Term) -> Compound:
    return Compound(".", (head, tail))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = cons(item, out)
    return out


def term_vars(t: Term) -> list[str]:
    """Variables of ``t`` in left-to-right first-occurrence order."""
    out: list[str] = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Variable):
            if s.name not in out:
                out.append(s.name)
        elif isinstance(s, Compound):
            stack.extend(reversed(s.args))
    return out


def is_list_cell(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == "." and t.arity == 2


_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def _format_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) or name in ("[]",) or re.fullmatch(r"-?\d+", name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        return _format_atom(t.symbol)
    if is_list_cell(t):
        items = []
        while is_list_cell(t):
            items.append(format_term(t.args[0]))
            t = t.args[1]
        tail = "" if t == NIL else "|" + format_term(t)
        return "[" + ",".join(items) + tail + "]"
    return _format_atom(t.functor) + "(" + ",".join(format_term(a) for a in t.args) + ")"


# -- clauses and programs ----------------------------------------------------------


@dataclass(frozen=True)
class Unify:
    var: str
    term: Term

    def __str__(self):
        return f"{self.var}={format_term(self.term)}"


@dataclass(frozen=True)
class Call:
    pred: str
    args: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, len(self.args))

    def __str__(self):
        if not self.args:
            return _format_atom(self.pred)
        return f"{_format_atom(self.pred)}({','.join(self.args)})"


Literal = Union[Call, Unify]


@dataclass(frozen=True)
class Clause:
    """A parsed clause.  Body goals are atoms (Constant/Compound) or ``Unify``
    pairs kept as ``('=', lhs, rhs)`` compounds."""

    head: Term
    body: tuple[Term, ...] = ()
    line: int = 0

    @property
    def key(self) -> tuple[str, int]:
        return _pred_key(self.head)

    def __str__(self):
        head = format_term(self.head)
        if not self.body:
            return head + "."
        return head + " :- " + ", ".join(_format_goal(g) for g in self.body) + "."


@dataclass(frozen=True)
class NormalizedClause:
    pred: str
    head: tuple[str, ...]
    body: tuple[Literal, ...]
    assertion: pos.PosFormula | None = None
    line: int = 0

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, len(self.head))

    @property
    def calls(self) -> list[Call]:
        return [lit for lit in self.body if isinstance(lit, Call)]

    @property
    def variables(self) -> list[str]:
        out = list(self.head)
        for lit in self.body:
            vs = lit.args if isinstance(lit, Call) else [lit.var] + term_vars(lit.term)
            out.extend(v for v in vs if v not in out)
        return out

    def __str__(self):
        head = f"{_format_atom(self.pred)}({','.join(self.head)})" if self.head else _format_atom(self.pred)
        parts = [str(lit) for lit in self.body]
        if self.assertion is not None:
            head += f" :- {{{pos.render(self.assertion)}}} <>"
            return head + (" " + ", ".join(parts) if parts else "") + "."
        return head + (" :- " + ", ".join(parts) if parts else "") + "."


def _pred_key(t: Term) -> tuple[str, int]:
    if isinstance(t, Constant):
        return (t.symbol, 0)
    if isinstance(t, Compound):
        return (t.functor, t.arity)
    raise TypeError(f"not a callable term: {t}")


def _format_goal(g: Term) -> str:
    if isinstance(g, Compound) and g.functor == "=" and g.arity == 2:
        return f"{format_term(g.args[0])} = {format_term(g.args[1])}"
    return format_term(g)


PredKey = tuple[str, int]


@dataclass(frozen=True)
class Program:
    clauses: tuple[Union[Clause, NormalizedClause], ...] = ()

    @property
    def predicates(self) -> list[PredKey]:
        """Defined predicates in first-occurrence order."""
        seen: dict[PredKey, None] = {}
        for c in self.clauses:
            seen.setdefault(c.key, None)
        return list(seen)

    def clauses_of(self, key: PredKey) -> list:
        return [c for c in self.clauses if c.key == key]

    def called(self, clause) -> list[PredKey]:
        if isinstance(clause, NormalizedClause):
            return [c.key for c in clause.calls]
        return [_pred_key(g) for g in clause.body if not _is_unify_goal(g)]

    @property
    def dependencies(self) -> dict[PredKey, list[PredKey]]:
        deps: dict[PredKey, list[PredKey]] = {p: [] for p in self.predicates}
        for c in self.clauses:
            for q in self.called(c):
                if q not in deps[c.key]:
                    deps[c.key].append(q)
        return deps

    def unknown_predicates(self) -> list[PredKey]:
        defined = set(self.predicates)
        out: list[PredKey] = []
        for c in self.clauses:
            for q in self.called(c):
                if q not in defined and q not in out:
                    out.append(q)
        return out

    def validate(self) -> "Program":
        unknown = self.unknown_predicates()
        if unknown:
            raise UnknownPredicate(unknown)
        return self

    def __str__(self):
        return "\n".join(str(c) for c in self.clauses)


# -- errors ----------------------------------------------------------------------


class FrontendError(Exception):
    pass


class ParseError(FrontendError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message, self.line, self.column = message, line, column


class UnsupportedConstruct(ParseError):
    """A well-formed but unsupported construct (cut, negation, arithmetic...)."""


class UnknownPredicate(FrontendError):
    def __init__(self, preds: Iterable[PredKey]):
        self.preds = list(preds)
        names = ", ".join(f"{n}/{a}" for n, a in self.preds)
        super().__init__(f"call to undefined predicate(s): {names}")


# -- tokenizer / parser ------------------------------------------------------------

_SYMBOL_CHARS = "+-*/\\^<>=~:.?@#&$"
_UNSUPPORTED_GOALS = {
    ("!", 0), ("\\+", 1), ("not", 1), ("call", 1), ("is", 2), ("<", 2), (">", 2),
    ("=<", 2), (">=", 2), ("=:=", 2), ("=\\=", 2), ("\\=", 2), ("==", 2),
    ("\\==", 2), (";", 2), ("->", 2), ("var", 1), ("nonvar", 1), ("atom", 1),
    ("integer", 1), ("number", 1), ("atomic", 1), ("functor", 3), ("arg", 3),
    ("=..", 2), ("copy_term", 2), ("findall", 3), ("bagof", 3), ("setof", 3),
    ("assert", 1), ("asserta", 1), ("assertz", 1), ("retract", 1), ("write", 1),
    ("nl", 0), ("fail", 0), ("false", 0),
}


@dataclass
class _Tok:
    kind: str  # var, atom, int, punct, sym, end, str
    text: str
    line: int
    col: int
    width: int = 0  # source length when it differs from len(text)


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def adv(k):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch.isspace():
            adv(1)
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                adv(1)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated block comment", line, col)
            adv(end + 2 - i)
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "var" if (word[0].isupper() or word[0] == "_") else "atom"
            toks.append(_Tok(kind, word, start_line, start_col))
            adv(j - i)
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], start_line, start_col))
            adv(j - i)
        elif ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ParseError("unterminated quoted atom", start_line, start_col)
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            toks.append(_Tok("atom", "".join(buf), start_line, start_col, j + 1 - i))
            adv(j + 1 - i)
        elif ch in "()[]|,":
            toks.append(_Tok("punct", ch, start_line, start_col))
            adv(1)
        elif ch == "!" or ch == ";":
            toks.append(_Tok("sym", ch, start_line, start_col))
            adv(1)
        elif ch in _SYMBOL_CHARS:
            j = i
            while j < n and text[j] in _SYMBOL_CHARS:
                j += 1
            sym = text[i:j]
            if sym == "." and (j >= n or text[j].isspace() or text[j] == "%"):
                toks.append(_Tok("end", ".", start_line, start_col))
            else:
                toks.append(_Tok("sym", sym, start_line, start_col))
            adv(j - i)
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or t.kind
            raise ParseError(f"expected {want!r}, found {got!r}", t.line, t.col)
        return t

    def program(self) -> Program:
        clauses = []
        while self.peek().kind != "eof":
            clauses.append(self.clause())
        return Program(tuple(clauses))

    def clause(self) -> Clause:
        start = self.peek()
        head = self.term()
        if isinstance(head, Variable) or (isinstance(head, Constant) and head.symbol.isdigit()):
            raise ParseError("clause head must be an atom or compound term", start.line, start.col)
        self._reject_unsupported(head, start)
        body: list[Term] = []
        t = self.peek()
        if t.kind == "sym" and t.text == ":-":
            self.next()
            body = self.body()
        elif t.kind == "sym":
            raise UnsupportedConstruct(f"operator {t.text!r} is not supported", t.line, t.col)
        self.expect("end")
        body = [g for g in body if g != Constant("true")]
        return Clause(head, tuple(body), start.line)

    def body(self) -> list[Term]:
        goals = [self.goal()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            goals.append(self.goal())
        t = self.peek()
        if t.kind == "sym" and t.text in (";", "->"):
            raise UnsupportedConstruct(f"control construct {t.text!r} is not supported", t.line, t.col)
        return goals

    def goal(self) -> Term:
        t = self.peek()
        if t.kind == "sym":
            raise UnsupportedConstruct(f"{t.text!r} is not supported", t.line, t.col)
        lhs = self.term()
        nt = self.peek()
        if nt.kind == "sym":
            if nt.text == "=":
                self.next()
                rhs = self.term()
                return Compound("=", (lhs, rhs))
            raise UnsupportedConstruct(f"operator {nt.text!r} is not supported", nt.line, nt.col)
        if nt.kind == "atom" and nt.text in ("is", "mod", "rem", "xor"):
            raise UnsupportedConstruct(f"arithmetic {nt.text!r} is not supported", nt.line, nt.col)
        if isinstance(lhs, Variable):
            raise UnsupportedConstruct("variable goals (meta-calls) are not supported", t.line, t.col)
        if isinstance(lhs, Constant) and lhs.symbol.lstrip("-").isdigit():
            raise ParseError("a number is not a goal", t.line, t.col)
        self._reject_unsupported(lhs, t)
        return lhs

    def _reject_unsupported(self, g: Term, at: _Tok) -> None:
        key = _pred_key(g)
        if key in _UNSUPPORTED_GOALS:
            raise UnsupportedConstruct(f"built-in {key[0]}/{key[1]} is not supported", at.line, at.col)

    def term(self) -> Term:
        t = self.next()
        if t.kind == "var":
            return Variable(t.text)
        if t.kind == "int":
            return Constant(t.text)
        if t.kind == "sym" and t.text == "-" and self.peek().kind == "int":
            return Constant("-" + self.next().text)
        if t.kind == "atom":
            nt = self.peek()
            if nt.kind == "punct" and nt.text == "(" and nt.line == t.line and nt.col == t.col + (t.width or len(t.text)):
                self.next()
                args = [self.term()]
                while self.peek().kind == "punct" and self.peek().text == ",":
                    self.next()
                    args.append(self.term())
                self.expect("punct", ")")
                return Compound(t.text, tuple(args))
            return Constant(t.text)
        if t.kind == "punct" and t.text == "[":
            if self.peek().kind == "punct" and self.peek().text == "]":
                self.next()
                return NIL
            items = [self.term()]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                items.append(self.term())
            tail: Term = NIL
            if self.peek().kind == "punct" and self.peek().text == "|":
                self.next()
                tail = self.term()
            self.expect("punct", "]")
            return make_list(items, tail)
        if t.kind == "punct" and t.text == "(":
            inner = self.term()
            nt = self.peek()
            if nt.kind == "sym" and nt.text in (";", "->"):
                raise UnsupportedConstruct(f"control construct {nt.text!r} is not supported",
                                           nt.line, nt.col)
            self.expect("punct", ")")
            return inner
        if t.kind == "sym":
            raise UnsupportedConstruct(f"operator {t.text!r} is not supported", t.line, t.col)
        got = t.text or t.kind
        raise ParseError(f"unexpected {got!r}", t.line, t.col)


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.expect("eof")
    return t


# -- normalisation ------------------------------------------------------------------


def _is_unify_goal(g: Term) -> bool:
    return isinstance(g, Compound) and g.functor == "=" and g.arity == 2


def _fresh_names(used: set[str]):
    for n in itertools.count():
        for letter in "ABCDEFGHIJKLMNOPQRSTUVWXYZ":
            name = letter if n == 0 else f"{letter}{n}"
            if name not in used:
                used.add(name)
                yield name


def _rename_anonymous(t: Term, counter) -> Term:
    if isinstance(t, Variable):
        return Variable(f"_{next(counter)}") if t.name == "_" else t
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_rename_anonymous(a, counter) for a in t.args))
    return t


def normalize_clause(clause: Clause) -> NormalizedClause:
    counter = itertools.count(1)
    head = _rename_anonymous(clause.head, counter)
    body = [_rename_anonymous(g, counter) for g in clause.body]
    used = set(term_vars(head))
    for g in body:
        used.update(term_vars(g))
    fresh = _fresh_names(used)
    name, _ = _pred_key(head)
    head_args = head.args if isinstance(head, Compound) else ()
    head_vars = tuple(next(fresh) for _ in head_args)
    lits: list[Literal] = [Unify(v, a) for v, a in zip(head_vars, head_args)]
    for g in body:
        if _is_unify_goal(g):
            lhs, rhs = g.args
            if isinstance(lhs, Variable):
                lits.append(Unify(lhs.name, rhs))
            elif isinstance(rhs, Variable):
                lits.append(Unify(rhs.name, lhs))
            else:
                v = next(fresh)
                lits.extend([Unify(v, lhs), Unify(v, rhs)])
            continue
        gname, _ = _pred_key(g)
        args = g.args if isinstance(g, Compound) else ()
        call_args = []
        for a in args:
            if isinstance(a, Variable):
                call_args.append(a.name)
            else:
                v = next(fresh)
                lits.append(Unify(v, a))
                call_args.append(v)
        lits.append(Call(gname, tuple(call_args)))
    return NormalizedClause(name, head_vars, tuple(lits), None, clause.line)


def normalize(program: Program) -> Program:
    return Program(tuple(normalize_clause(c) if isinstance(c, Clause) else c
                         for c in program.clauses))


def arg_names(arity: int) -> tuple[str, ...]:
    """Canonical formal argument names ``x1..xn``."""
    return tuple(f"x{i}" for i in range(1, arity + 1))


def attach_assertions(program: Program, assertions: Mapping[PredKey, pos.PosFormula]) -> Program:
    """Attach per-predicate assertions, expressed over ``x1..xn``, to every
    clause of that predicate.  Predicates not in the map get ``true``."""
    defined = set(program.predicates)
    unknown = [k for k in assertions if k not in defined]
    if unknown:
        raise UnknownPredicate(unknown)
    out = []
    for c in program.clauses:
        if not isinstance(c, NormalizedClause):
            raise TypeError("attach_assertions needs a normalized program")
        mu = assertions.get(c.key, pos.TRUE)
        mu = pos.rename(mu, dict(zip(arg_names(len(c.head)), c.head)))
        out.append(replace(c, assertion=mu))
    return Program(tuple(out))


def load(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())
