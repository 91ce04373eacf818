"""Termination inference: loops -> initial assertions -> backwards analysis."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from . import pos, size
from .analysis import (TERM_SIZE, BinaryClause, Norm, binary_semantics,
                       get_norm, instantiate_pos, success_analysis)
from .check import ArgSet, Mode
from .frontend import (NormalizedClause, PredKey, Program, Unify,
                       arg_names, attach_assertions, normalize)

InferProcedure = Callable[[BinaryClause], list[ArgSet]]

MAX_MODE_ARITY = 8


def _decreases(pi: size.LinearConjunction, positions: Iterable[int]) -> bool:
    coeffs: dict[str, int] = {}
    for i in positions:
        coeffs[f"y{i}"] = coeffs.get(f"y{i}", 0) + 1
        coeffs[f"x{i}"] = coeffs.get(f"x{i}", 0) - 1
    return size.entails(pi, size.make_constraint(coeffs, 0, size.LT))


def inf_fast(beta: BinaryClause) -> list[ArgSet]:
    """Singletons of the strictly decreasing arguments, plus the set of all
    remaining arguments when their sum decreases."""
    every = range(1, beta.arity + 1)
    dec = [i for i in every if _decreases(beta.pi, [i])]
    out = [frozenset([i]) for i in dec]
    rest = [i for i in every if i not in dec]
    if rest and _decreases(beta.pi, rest):
        out.append(frozenset(rest))
    return out


def initial_assertion(betas: Iterable[BinaryClause], arity: int | None = None,
                      inf: InferProcedure = inf_fast) -> pos.PosFormula:
    mu = pos.TRUE
    preds = set()
    for beta in betas:
        preds.add(beta.key)
        names = arg_names(beta.arity)
        mu_beta = pos.disj_all(pos.conj_all(pos.mk_var(names[i - 1]) for i in sorted(I))
                               for I in inf(beta))
        mu = pos.conj(mu, mu_beta)
    if len(preds) > 1:
        raise ValueError(f"loops of several predicates given: {sorted(preds)}")
    return mu


def backwards_step(clause: NormalizedClause, pre: Mapping[PredKey, pos.PosFormula],
                   succ: Mapping[PredKey, pos.PosFormula], norm: Norm = TERM_SIZE,
                   trace: list | None = None) -> pos.PosFormula:
    """New precondition contribution of one clause, over ``x1..xn``.

    If ``trace`` is a list it receives ``(i, phi_i, psi_i, e_i)`` for
    ``i = n..1`` followed by ``(0, mu, None, e_0)``.
    """
    e = pos.TRUE
    n = len(clause.body)
    for i in range(n, 0, -1):
        lit = clause.body[i - 1]
        if isinstance(lit, Unify):
            phi, psi = pos.TRUE, norm.pos_abstraction(lit)
        else:
            phi = instantiate_pos(pre[lit.key], lit.args)
            psi = instantiate_pos(succ[lit.key], lit.args)
        e = pos.conj(phi, pos.pseudo_complement(psi, e))
        if trace is not None:
            trace.append((i, phi, psi, e))
    mu = clause.assertion if clause.assertion is not None else pos.TRUE
    e0 = pos.conj(mu, e)
    if trace is not None:
        trace.append((0, mu, None, e0))
    out = pos.forall_project(e0, e0.vars - set(clause.head))
    return pos.rename(out, dict(zip(clause.head, arg_names(len(clause.head)))))


def backwards_analysis(program: Program, succ: Mapping[PredKey, pos.PosFormula],
                       norm: Norm | str = TERM_SIZE,
                       history: dict[PredKey, list[pos.PosFormula]] | None = None
                       ) -> dict[PredKey, pos.PosFormula]:
    """Greatest fixed point of the preconditions, round-robin over clauses."""
    norm = get_norm(norm)
    program = normalize(program)
    pre = {p: pos.TRUE for p in program.predicates}
    if history is not None:
        for p in pre:
            history.setdefault(p, []).append(pre[p])
    changed = True
    while changed:
        changed = False
        for clause in program.clauses:
            new = pos.conj(pre[clause.key], backwards_step(clause, pre, succ, norm))
            if new != pre[clause.key]:
                pre[clause.key] = new
                changed = True
                if history is not None:
                    history[clause.key].append(new)
    return pre


def terminating_modes(condition: pos.PosFormula, arity: int, pred: str = "p") -> list[Mode]:
    """All subset-minimal sets of bound arguments whose conjunction entails
    ``condition``, smallest first."""
    if condition.is_bottom:
        return []
    if arity > MAX_MODE_ARITY:
        raise ValueError(f"mode enumeration is limited to arity <= {MAX_MODE_ARITY}")
    names = arg_names(arity)
    found: list[frozenset] = []
    for k in range(arity + 1):
        for combo in itertools.combinations(range(1, arity + 1), k):
            s = frozenset(combo)
            if any(f <= s for f in found):
                continue
            if pos.entails(pos.conj_all(pos.mk_var(names[i - 1]) for i in combo), condition):
                found.append(s)
    return [Mode.from_bound(pred, arity, s) for s in found]


@dataclass
class PredicateResult:
    pred: str
    arity: int
    condition: pos.PosFormula
    modes: list[Mode] | None
    loops: list[BinaryClause]
    assertion: pos.PosFormula
    widenings: int = 0
    notice: str | None = None

    @property
    def key(self) -> PredKey:
        return (self.pred, self.arity)

    def head(self) -> str:
        return f"{self.pred}({','.join(arg_names(self.arity))})" if self.arity else self.pred

    def __str__(self):
        return f"{self.head()} <- {pos.render(self.condition)}"


@dataclass
class TerminationReport:
    norm: str
    widen_every: int
    predicates: list[PredicateResult]
    timings: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key) -> PredicateResult:
        if isinstance(key, str):
            name, _, ar = key.partition("/")
            key = (name, int(ar))
        for r in self.predicates:
            if r.key == key:
                return r
        raise KeyError(key)

    @property
    def conditions(self) -> dict[PredKey, pos.PosFormula]:
        return {r.key: r.condition for r in self.predicates}

    @property
    def widenings(self) -> int:
        return sum(r.widenings for r in self.predicates)

    def __str__(self):
        return "\n".join(str(r) for r in self.predicates)


def infer_termination(program: Program, norm: Norm | str = TERM_SIZE, widen_every: int = 3,
                      inf: InferProcedure = inf_fast, hull: bool = True) -> TerminationReport:
    norm = get_norm(norm)
    program = normalize(program).validate()
    timings = {}
    t0 = time.perf_counter()
    loops = binary_semantics(program, norm, widen_every, hull)
    t1 = time.perf_counter()
    assertions = {p: initial_assertion(loops.loops_of(p), p[1], inf) for p in program.predicates}
    annotated = attach_assertions(program, assertions)
    t2 = time.perf_counter()
    succ = success_analysis(annotated, norm)
    pre = backwards_analysis(annotated, succ, norm)
    t3 = time.perf_counter()
    timings.update(loops=t1 - t0, assertions=t2 - t1, backwards=t3 - t2, total=t3 - t0)

    results = []
    for p in program.predicates:
        cond = pre[p]
        if p[1] <= MAX_MODE_ARITY:
            modes, notice = terminating_modes(cond, p[1], p[0]), None
        else:
            modes, notice = None, f"arity {p[1]} exceeds {MAX_MODE_ARITY}: modes not enumerated"
        results.append(PredicateResult(p[0], p[1], cond, modes, loops.loops_of(p),
                                       assertions[p], loops.widenings.get(p, 0), notice))
    return TerminationReport(norm.name, widen_every, results, timings)
