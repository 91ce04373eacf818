"""Whole-program abstractions: groundness success patterns, call patterns and
size loops (abstract binary clauses).

All predicate-level formulas and size relations are expressed over the
canonical argument names ``x1..xn`` (and ``y1..yn`` for the body call of a
binary clause).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import networkx as nx

from . import pos
from . import size
from .frontend import (Call, Compound, NormalizedClause, PredKey, Program, Term,
                       Unify, UnknownPredicate, Variable, arg_names, is_list_cell,
                       normalize, term_vars)

log = logging.getLogger(__name__)

LinearExpr = tuple[dict[str, int], int]


# -- norms ---------------------------------------------------------------------


def term_size_measure(t: Term) -> LinearExpr:
    """Variables map to themselves, constants to 0, f(t1..tn) to 1 + sum."""
    coeffs: dict[str, int] = {}
    k = 0
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Variable):
            coeffs[s.name] = coeffs.get(s.name, 0) + 1
        elif isinstance(s, Compound):
            k += 1
            stack.extend(s.args)
    return coeffs, k


def list_length_measure(t: Term) -> LinearExpr:
    """[H|T] maps to 1 + |T|, variables to themselves, anything else to 0."""
    k = 0
    while is_list_cell(t):
        k += 1
        t = t.args[1]
    if isinstance(t, Variable):
        return {t.name: 1}, k
    return {}, k


def _term_size_rigid(t: Term) -> list[str]:
    return term_vars(t)


def _list_length_rigid(t: Term) -> list[str]:
    while is_list_cell(t):
        t = t.args[1]
    return [t.name] if isinstance(t, Variable) else []


@dataclass(frozen=True)
class Norm:
    name: str
    measure: Callable[[Term], LinearExpr]
    rigid_vars: Callable[[Term], list[str]]

    def size_constraint(self, u: Unify) -> size.LinearConstraint | bool:
        coeffs, k = self.measure(u.term)
        lhs = {v: -a for v, a in coeffs.items()}
        lhs[u.var] = lhs.get(u.var, 0) + 1
        return size.make_constraint(lhs, -k, size.EQ)

    def pos_abstraction(self, u: Unify) -> pos.PosFormula:
        return abstract_unification_pos(u, self)


TERM_SIZE = Norm("termsize", term_size_measure, _term_size_rigid)
LIST_LENGTH = Norm("listlength", list_length_measure, _list_length_rigid)
NORMS = {"termsize": TERM_SIZE, "listlength": LIST_LENGTH}


def get_norm(name: str | Norm) -> Norm:
    if isinstance(name, Norm):
        return name
    try:
        return NORMS[name.replace("_", "").replace("-", "").lower()]
    except KeyError:
        raise ValueError(f"unknown norm {name!r}; expected one of {sorted(NORMS)}") from None


def abstract_unification_pos(u: Unify, norm: Norm = TERM_SIZE) -> pos.PosFormula:
    """``x <-> (conjunction of the variables whose instantiation fixes the
    size of the term)``."""
    rhs = pos.conj_all(pos.mk_var(v) for v in norm.rigid_vars(u.term))
    return pos.iff(pos.mk_var(u.var), rhs)


# -- helpers -------------------------------------------------------------------


def _require_normalized(program: Program) -> Program:
    if all(isinstance(c, NormalizedClause) for c in program.clauses):
        return program
    return normalize(program)


def instantiate_pos(f: pos.PosFormula, args: Iterable[str]) -> pos.PosFormula:
    args = tuple(args)
    return pos.substitute(f, dict(zip(arg_names(len(args)), args)))


def instantiate_size(pi: size.LinearConjunction, args: Iterable[str]) -> size.LinearConjunction:
    args = tuple(args)
    return size.substitute(pi, dict(zip(arg_names(len(args)), args)))


def scc_order(program: Program) -> list[list[PredKey]]:
    """Strongly connected components of the call graph, callees first."""
    g = nx.DiGraph()
    preds = program.predicates
    g.add_nodes_from(preds)
    for p, qs in program.dependencies.items():
        for q in qs:
            if q in g:
                g.add_edge(p, q)
    cond = nx.condensation(g)
    rank = {p: i for i, p in enumerate(preds)}
    order = list(reversed(list(nx.lexicographical_topological_sort(
        cond, key=lambda n: min(rank[p] for p in cond.nodes[n]["members"])))))
    return [sorted(cond.nodes[n]["members"], key=rank.__getitem__) for n in order]


# -- groundness success ------------------------------------------------------------

SuccessMap = dict[PredKey, pos.PosFormula]


def clause_success(clause: NormalizedClause, succ: Mapping[PredKey, pos.PosFormula],
                   norm: Norm) -> pos.PosFormula:
    f = pos.TRUE
    for lit in clause.body:
        if isinstance(lit, Unify):
            f = pos.conj(f, norm.pos_abstraction(lit))
        else:
            f = pos.conj(f, instantiate_pos(succ[lit.key], lit.args))
        if f.is_bottom:
            return f
    f = pos.exists(f, f.vars - set(clause.head))
    return pos.rename(f, dict(zip(clause.head, arg_names(len(clause.head)))))


def success_analysis(program: Program, norm: Norm | str = TERM_SIZE) -> SuccessMap:
    """Least fixed point of the groundness immediate-consequence operator."""
    norm = get_norm(norm)
    program = _require_normalized(program)
    succ: SuccessMap = {p: pos.FALSE for p in program.predicates}
    for scc in scc_order(program):
        changed = True
        while changed:
            changed = False
            for p in scc:
                new = pos.disj_all(clause_success(c, succ, norm) for c in program.clauses_of(p))
                if new != succ[p]:
                    succ[p] = pos.disj(succ[p], new)
                    changed = True
    return succ


# -- call patterns -------------------------------------------------------------------


def call_analysis(program: Program, mode, norm: Norm | str = TERM_SIZE,
                  succ: SuccessMap | None = None) -> dict[PredKey, pos.PosFormula]:
    """Call patterns reachable from ``mode`` under leftmost selection, merged
    per predicate by disjunction.  Unreached predicates map to bottom."""
    norm = get_norm(norm)
    program = _require_normalized(program)
    program.validate()
    if mode.key not in program.predicates:
        raise UnknownPredicate([mode.key])
    if succ is None:
        succ = success_analysis(program, norm)
    calls = {p: pos.FALSE for p in program.predicates}
    calls[mode.key] = mode.formula()
    changed = True
    while changed:
        changed = False
        for p in program.predicates:
            kappa = calls[p]
            if kappa.is_bottom:
                continue
            for clause in program.clauses_of(p):
                state = pos.rename(kappa, dict(zip(arg_names(len(clause.head)), clause.head)))
                for lit in clause.body:
                    if state.is_bottom:
                        break
                    if isinstance(lit, Unify):
                        state = pos.conj(state, norm.pos_abstraction(lit))
                        continue
                    formals = arg_names(lit.arity)
                    link = pos.conj_all(pos.iff(pos.mk_var(x), pos.mk_var(a))
                                        for x, a in zip(formals, lit.args))
                    joined = pos.conj(state, link)
                    pattern = pos.exists(joined, joined.vars - set(formals))
                    merged = pos.disj(calls[lit.key], pattern)
                    if merged != calls[lit.key]:
                        calls[lit.key] = merged
                        changed = True
                    state = pos.conj(state, instantiate_pos(succ[lit.key], lit.args))
    return calls


# -- size success --------------------------------------------------------------------

SizeMap = dict[PredKey, size.LinearConjunction]


def clause_size(clause: NormalizedClause, sizes: Mapping[PredKey, size.LinearConjunction],
                norm: Norm, upto: int | None = None) -> size.LinearConjunction:
    """Size relation of the clause body prefix ``body[:upto]`` over the clause
    variables (no projection)."""
    cs: list = []
    for lit in clause.body[:upto]:
        if isinstance(lit, Unify):
            cs.append(norm.size_constraint(lit))
        else:
            inst = instantiate_size(sizes[lit.key], lit.args)
            if inst.unsat:
                return size.UNSAT
            cs.extend(inst.constraints)
    return size.conjunction(cs)


@dataclass
class SizeAnalysis:
    sizes: SizeMap
    widenings: dict[PredKey, int]
    iterations: dict[PredKey, int]


def size_success_analysis(program: Program, norm: Norm | str = TERM_SIZE,
                          widen_every: int = 3, hull: bool = True,
                          force_widen_after: int = 30) -> SizeAnalysis:
    """Least fixed point (with widening) of the size success relations.

    Each predicate is one widening slot.  Counting starts after the first
    non-bottom approximation; the slot is widened on every ``widen_every``-th
    update after that and on every update past ``force_widen_after``.
    """
    if widen_every < 1:
        raise ValueError("widen_every must be >= 1")
    norm = get_norm(norm)
    program = _require_normalized(program)
    sizes: SizeMap = {p: size.UNSAT for p in program.predicates}
    updates = {p: 0 for p in program.predicates}
    widenings = {p: 0 for p in program.predicates}
    for scc in scc_order(program):
        changed = True
        while changed:
            changed = False
            for p in scc:
                new = size.UNSAT
                for c in program.clauses_of(p):
                    body = clause_size(c, sizes, norm)
                    proj = size.project(body, c.head)
                    proj = size.rename(proj, dict(zip(c.head, arg_names(len(c.head)))))
                    new = size.join(new, proj, hull)
                old = sizes[p]
                cand = size.join(old, new, hull)
                if size.entails_all(cand, old):
                    continue
                if old.unsat:
                    # the first approximation is not an iteration step
                    sizes[p] = cand
                    changed = True
                    continue
                updates[p] += 1
                if updates[p] % widen_every == 0 or updates[p] > force_widen_after:
                    cand = size.widen(old, cand)
                    widenings[p] += 1
                    if size.entails_all(cand, old):
                        continue
                sizes[p] = cand
                changed = True
    return SizeAnalysis(sizes, widenings, updates)


# -- binary clauses --------------------------------------------------------------------

# A monotonicity graph: {(u, v): strict} meaning u < v (strict) or u <= v.
Edges = dict[tuple[str, str], bool]


def _close(edges: Edges, nodes: Iterable[str]) -> Edges | None:
    """Transitive closure; None when a strict cycle makes it unsatisfiable."""
    nodes = list(nodes)
    e = dict(edges)
    for k in nodes:
        for i in nodes:
            ik = e.get((i, k))
            if ik is None:
                continue
            for j in nodes:
                kj = e.get((k, j))
                if kj is None:
                    continue
                s = ik or kj
                old = e.get((i, j))
                if old is None or (s and not old):
                    e[(i, j)] = s
    for n in nodes:
        if e.get((n, n)):
            return None
        e.pop((n, n), None)
    return e


def pairwise_abstraction(pi: size.LinearConjunction, variables: Iterable[str]) -> Edges | None:
    """Strongest relations ``u < v`` / ``u <= v`` between variable pairs
    entailed by ``pi``.  None if ``pi`` is unsatisfiable."""
    if pi.unsat:
        return None
    vs = list(variables)
    edges: Edges = {}
    for u in vs:
        for v in vs:
            if u == v:
                continue
            le = size.make_constraint({u: 1, v: -1}, 0, size.LE)
            if size.entails(pi, le):
                lt = size.make_constraint({u: 1, v: -1}, 0, size.LT)
                edges[(u, v)] = size.entails(pi, lt)
    return edges


def edges_to_conjunction(edges: Edges) -> size.LinearConjunction:
    cs = [size.make_constraint({u: 1, v: -1}, 0, size.LT if s else size.LE)
          for (u, v), s in edges.items()]
    return size.conjunction(cs)


@dataclass(frozen=True)
class BinaryClause:
    """Abstract loop ``pred(x1..xn) <- pi, pred(y1..yn)``."""

    pred: str
    arity: int
    pi: size.LinearConjunction

    @property
    def key(self) -> PredKey:
        return (self.pred, self.arity)

    @property
    def xs(self) -> tuple[str, ...]:
        return arg_names(self.arity)

    @property
    def ys(self) -> tuple[str, ...]:
        return tuple(f"y{i}" for i in range(1, self.arity + 1))

    def __str__(self):
        xs, ys = ",".join(self.xs), ",".join(self.ys)
        head = f"{self.pred}({xs})" if self.arity else self.pred
        body = f"{self.pred}({ys})" if self.arity else self.pred
        return f"{head} :- {size.render(self.pi)}, {body}."


@dataclass(frozen=True)
class _Edge:
    """Binary clause between two predicates of one SCC."""

    src: PredKey
    dst: PredKey
    edges: frozenset  # of ((u, v), strict) over x*/y* names

    def as_dict(self) -> Edges:
        return dict(self.edges)


def _xs(n):
    return [f"x{i}" for i in range(1, n + 1)]


def _ys(n):
    return [f"y{i}" for i in range(1, n + 1)]


def _compose(a: _Edge, b: _Edge) -> _Edge | None:
    """(p <- pi1, q) o (q <- pi2, r) = p <- exists mid. pi1 & pi2, r."""
    na, nb, nc = a.src[1], a.dst[1], b.dst[1]
    ren_a = {y: f"m{y[1:]}" for y in _ys(nb)}
    ren_b = {x: f"m{x[1:]}" for x in _xs(nb)}
    ren_b.update({y: f"z{y[1:]}" for y in _ys(nc)})
    e: Edges = {}
    for (u, v), s in a.edges:
        e[(ren_a.get(u, u), ren_a.get(v, v))] = s
    for (u, v), s in b.edges:
        key = (ren_b.get(u, u), ren_b.get(v, v))
        e[key] = s or e.get(key, False)
    nodes = _xs(na) + [f"m{i}" for i in range(1, nb + 1)] + [f"z{i}" for i in range(1, nc + 1)]
    closed = _close(e, nodes)
    if closed is None:
        return None
    keep = set(_xs(na)) | {f"z{i}" for i in range(1, nc + 1)}
    out = {}
    for (u, v), s in closed.items():
        if u in keep and v in keep:
            out[(u.replace("z", "y"), v.replace("z", "y"))] = s
    return _Edge(a.src, b.dst, frozenset(out.items()))


@dataclass
class BinarySemantics:
    loops: list[BinaryClause]
    sizes: SizeMap
    widenings: dict[PredKey, int] = field(default_factory=dict)
    edges: int = 0

    def __iter__(self):
        return iter(self.loops)

    def __len__(self):
        return len(self.loops)

    def loops_of(self, key: PredKey) -> list[BinaryClause]:
        return [b for b in self.loops if b.key == key]


def direct_binary_clauses(program: Program, sizes: SizeMap, norm: Norm,
                          within: Callable[[PredKey, PredKey], bool]) -> list[_Edge]:
    out: list[_Edge] = []
    for clause in program.clauses:
        for i, lit in enumerate(clause.body):
            if not isinstance(lit, Call) or not within(clause.key, lit.key):
                continue
            prefix = clause_size(clause, sizes, norm, upto=i)
            if prefix.unsat:
                continue
            xs, ys = _xs(len(clause.head)), _ys(lit.arity)
            links = [size.make_constraint({x: 1, h: -1}, 0, size.EQ) for x, h in zip(xs, clause.head)]
            links += [size.make_constraint({y: 1, a: -1}, 0, size.EQ) for y, a in zip(ys, lit.args)]
            linked = size.conjunction(prefix.constraints + tuple(links))
            pi = size.project(linked, xs + ys)
            edges = pairwise_abstraction(pi, xs + ys)
            if edges is None:
                continue
            out.append(_Edge(clause.key, lit.key, frozenset(edges.items())))
    return out


def binary_semantics(program: Program, norm: Norm | str = TERM_SIZE, widen_every: int = 3,
                     hull: bool = True) -> BinarySemantics:
    """Loops of the program as abstract binary clauses.

    Size success relations (polyhedral, widened) feed the direct binary
    clauses of every call into the caller's SCC; these are abstracted to
    pairwise size relations and closed under composition, which is finite.
    Only same-predicate clauses are returned.
    """
    norm = get_norm(norm)
    program = _require_normalized(program)
    program.validate()
    sa = size_success_analysis(program, norm, widen_every, hull)
    comp = {}
    for i, scc in enumerate(scc_order(program)):
        for p in scc:
            comp[p] = i
    direct = direct_binary_clauses(program, sa.sizes, norm, lambda p, q: comp[p] == comp[q])

    seen: dict = {}
    by_src: dict[PredKey, list[_Edge]] = {}
    by_dst: dict[PredKey, list[_Edge]] = {}
    queue: list[_Edge] = []

    def add(e: _Edge | None):
        if e is None:
            return
        key = (e.src, e.dst, e.edges)
        if key in seen:
            return
        seen[key] = e
        by_src.setdefault(e.src, []).append(e)
        by_dst.setdefault(e.dst, []).append(e)
        queue.append(e)

    for e in direct:
        add(e)
    while queue:
        e = queue.pop(0)
        for f in list(by_src.get(e.dst, [])):
            add(_compose(e, f))
        for f in list(by_dst.get(e.src, [])):
            add(_compose(f, e))

    rank = {p: i for i, p in enumerate(program.predicates)}
    loops = []
    for e in seen.values():
        if e.src == e.dst:
            loops.append(BinaryClause(e.src[0], e.src[1], edges_to_conjunction(e.as_dict())))
    loops.sort(key=lambda b: (rank[b.key], str(b)))
    log.debug("binary semantics: %d edges, %d loops", len(seen), len(loops))
    return BinarySemantics(loops, sa.sizes, sa.widenings, len(seen))
