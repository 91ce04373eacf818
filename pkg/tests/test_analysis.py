import pytest

from terminfer import pos, size
from terminfer.analysis import (LIST_LENGTH, TERM_SIZE, abstract_unification_pos,
                                binary_semantics, call_analysis, get_norm,
                                pairwise_abstraction, scc_order, size_success_analysis,
                                success_analysis)
from terminfer.check import parse_mode
from terminfer.frontend import (Compound, Constant, Unify, Variable, arg_names, load,
                                parse_program, parse_term)
from terminfer.interp import QueryGenerator, run

from conftest import BENCH, bench_programs

WORKED = BENCH / "worked"
P = pos.parse


def test_norm_measures():
    t = parse_term("[X|Xs]")
    assert TERM_SIZE.measure(t) == ({"X": 1, "Xs": 1}, 1)
    assert LIST_LENGTH.measure(t) == ({"Xs": 1}, 1)
    assert TERM_SIZE.measure(parse_term("f(a, g(b), X)")) == ({"X": 1}, 2)
    assert LIST_LENGTH.measure(parse_term("[a,b,c]")) == ({}, 3)
    assert LIST_LENGTH.measure(parse_term("f(X)")) == ({}, 0)
    with pytest.raises(ValueError):
        get_norm("depth")
    assert get_norm("list_length") is LIST_LENGTH


def test_abstract_unification_examples():
    u = Unify("A", parse_term("[X|Xs]"))
    assert abstract_unification_pos(u) == P("A <-> (X & Xs)")
    assert abstract_unification_pos(Unify("B", Variable("Ys"))) == P("B <-> Ys")
    assert abstract_unification_pos(u, LIST_LENGTH) == P("A <-> Xs")
    assert abstract_unification_pos(Unify("C", Constant("nil"))) == P("C")
    assert TERM_SIZE.size_constraint(u) == size.parse_constraint("A = X + Xs + 1")


def test_success_patterns():
    succ = success_analysis(load(WORKED / "sets.pl"))
    assert succ[("append", 3)] == P("(x1 & x2) <-> x3")
    assert succ[("member", 2)] == P("x2 -> x1")
    assert succ[("subset", 2)] == P("x2 -> x1")
    succ_ll = success_analysis(load(WORKED / "append.pl"), LIST_LENGTH)
    # the first argument always ends as a complete list
    assert succ_ll[("append", 3)] == P("x1 & (x2 <-> x3)")


def test_call_patterns():
    prog = load(WORKED / "sets.pl")
    calls = call_analysis(prog, parse_mode("append(b,b,f)"))
    assert calls[("append", 3)] == P("x1 & x2")
    assert calls[("subset", 2)].is_bottom
    calls = call_analysis(prog, parse_mode("s(b,b,b)"))
    assert pos.entails(calls[("subset", 2)], P("x2"))
    assert calls[("append", 3)] == P("(x1 & x2) | x3")


def test_scc_order_callees_first():
    order = scc_order(load(WORKED / "sets.pl"))
    flat = [p for scc in order for p in scc]
    assert flat.index(("append", 3)) < flat.index(("member", 2)) < flat.index(("subset", 2))
    assert flat[-1] == ("s", 3)
    prog = parse_program("even(s(X)) :- odd(X). even(0). odd(s(X)) :- even(X).")
    assert sorted(scc_order(prog)[0]) == [("even", 1), ("odd", 1)]


def test_size_success_examples():
    sa = size_success_analysis(load(WORKED / "append.pl"))
    assert size.equivalent(sa.sizes[("append", 3)], size.parse("[x1+x2=x3]"))
    sa = size_success_analysis(load(WORKED / "split.pl"), LIST_LENGTH, widen_every=4)
    assert size.equivalent(sa.sizes[("split", 3)], size.parse("[x1=x2+x3, x3<=x2, x2<=x3+1]"))


def test_pairwise_abstraction():
    pi = size.parse("[x1 = y1 + 1, x2 = y2, y3 + 1 = x3]")
    e = pairwise_abstraction(pi, ["x1", "x2", "x3", "y1", "y2", "y3"])
    assert e[("y1", "x1")] is True and e[("x2", "y2")] is False and e[("y2", "x2")] is False
    assert ("x1", "y1") not in e
    assert pairwise_abstraction(size.UNSAT, ["x"]) is None


GOLDEN_LOOPS = {
    "append": ["append(x1,x2,x3) :- [y1<x1, x2=y2, y3<x3], append(y1,y2,y3)."],
    "sets": ["append(x1,x2,x3) :- [y1<x1, x2=y2, y3<x3], append(y1,y2,y3).",
             "subset(x1,x2) :- [y1<x1, x2=y2], subset(y1,y2)."],
    "split": ["split(x1,x2,x3) :- [y1<x1, y2<x2, y3<x3], split(y1,y2,y3).",
              "split(x1,x2,x3) :- [y1<x1, y3<x2, x3=y2], split(y1,y2,y3).",
              "split(x1,x2,x3) :- [y1<x1, y3<x2, y2<x3], split(y1,y2,y3)."],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_LOOPS))
def test_golden_loops(name):
    loops = binary_semantics(load(WORKED / f"{name}.pl"))
    assert [str(b) for b in loops] == GOLDEN_LOOPS[name]


def test_mutual_recursion_loops():
    prog = parse_program("even(s(X)) :- odd(X). even(0). odd(s(X)) :- even(X).")
    loops = binary_semantics(prog)
    assert [str(b) for b in loops] == ["even(x1) :- [y1<x1], even(y1).",
                                       "odd(x1) :- [y1<x1], odd(y1)."]


def test_no_recursion_no_loops():
    assert len(binary_semantics(parse_program("p(X) :- q(X). q(a)."))) == 0


# -- concrete soundness ---------------------------------------------------------------------


def _rigid_args(atom, norm):
    """Arguments whose size under ``norm`` is fixed (ground, for term size)."""
    return {x for x, a in zip(arg_names(len(atom.args)), atom.args) if not norm.rigid_vars(a)}


def _sizes(atom, norm):
    out = {}
    for x, a in zip(arg_names(len(atom.args)), atom.args):
        coeffs, k = norm.measure(a)
        if not coeffs:
            out[x] = k
    return out


def _admits(pi, point):
    eqs = [size.make_constraint({v: 1}, -n, size.EQ) for v, n in point.items()]
    return not size.meet(pi, size.conjunction(eqs)).unsat


def _modes_with_programs():
    for path, expected, directives in bench_programs():
        norm = get_norm(directives.get("norm", "termsize"))
        prog = load(path)
        for key in expected:
            arity = key[1]
            for bound in range(1 << arity):
                flags = tuple("b" if bound >> i & 1 else "f" for i in range(arity))
                yield path, prog, norm, parse_mode(f"{key[0]}({','.join(flags)})" if arity else key[0])


def test_call_patterns_cover_concrete_calls(seed):
    """Every selected atom met while running random queries matches the
    predicted groundness call pattern."""
    checked = 0
    for n, (path, prog, norm, mode) in enumerate(_modes_with_programs()):
        if n % 3:
            continue  # a third of the modes keeps the test quick; the heavy run covers all
        calls = call_analysis(prog, mode, norm)
        gen = QueryGenerator(prog, seed + n, max_size=5)
        for q in gen.queries(mode, 3):
            res = run(prog, q, max_depth=60, max_steps=3000, record_calls=True)
            for _, atom in res.calls:
                if not isinstance(atom, Compound):
                    continue
                key = (atom.functor, len(atom.args))
                if key not in calls:
                    continue
                assert calls[key].evaluate(_rigid_args(atom, norm)), (path.name, mode, atom)
                checked += 1
    assert checked > 1000


def _answers(prog_text, goal_text, sink_arity):
    """Collect computed answers by appending a goal to a recording fact."""
    prog = parse_program(prog_text + f"\nsink({','.join(['_'] * sink_arity)}).")
    goal = parse_term(goal_text)
    sink = Compound("sink", goal.args)
    res = run(prog, [goal, sink], max_depth=200, record_calls=True)
    assert res.terminated
    return prog, [a for _, a in res.calls if isinstance(a, Compound) and a.functor == "sink"]


@pytest.mark.parametrize("path, goal", [
    (WORKED / "sets.pl", "member(X, [a,b,c])"),
    (WORKED / "sets.pl", "append(X, Y, [a,b,c])"),
    (WORKED / "split.pl", "split([a,b,c,d,e], X, Y)"),
    (BENCH / "block1" / "permute.pl", "perm([a,b,c], X)"),
])
def test_success_patterns_and_sizes_cover_answers(path, goal):
    text = path.read_text()
    key_name = goal.split("(")[0]
    prog, answers = _answers(text, goal, len(parse_term(goal).args))
    assert answers
    arity = len(answers[0].args)
    succ = success_analysis(prog)[(key_name, arity)]
    for norm in (TERM_SIZE, LIST_LENGTH):
        sizes = size_success_analysis(prog, norm).sizes[(key_name, arity)]
        for a in answers:
            assert succ.evaluate(_rigid_args(a, TERM_SIZE))
            assert _admits(sizes, _sizes(a, norm)), (norm.name, a)


@pytest.mark.parametrize("path, goal, norm", [
    (WORKED / "append.pl", "append([a,b,c,d],[e],X)", TERM_SIZE),
    (WORKED / "split.pl", "split([a,b,c,d,e,f,g],X,Y)", LIST_LENGTH),
    (BENCH / "block1" / "reverse.pl", "reverse([a,b,c,d],[],X)", TERM_SIZE),
])
def test_loops_cover_ancestor_pairs(path, goal, norm):
    """In a deterministic recursion every later call of the same predicate is
    a descendant of each earlier one, so some loop must admit the pair."""
    prog = load(path)
    res = run(prog, parse_term(goal), record_calls=True)
    g = parse_term(goal)
    atoms = [a for _, a in res.calls if a.functor == g.functor and len(a.args) == len(g.args)]
    assert len(atoms) >= 3
    loops = binary_semantics(prog, norm).loops_of((atoms[0].functor, len(atoms[0].args)))
    for i, anc in enumerate(atoms):
        for desc in atoms[i + 1:]:
            point = {**_sizes(anc, norm),
                     **{f"y{v[1:]}": n for v, n in _sizes(desc, norm).items()}}
            assert any(_admits(b.pi, point) for b in loops), (anc, desc)
