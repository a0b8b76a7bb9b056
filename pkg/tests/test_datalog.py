import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_model, naive_strata, random_program

from iggp.datalog import Database, compile_rule, entails, evaluate, evaluate_db, run_plan, stratify
from iggp.exceptions import UnsafeRuleError, UnstratifiableError
from iggp.logic import Atom
from iggp.parser import parse_program


def kif(text):
    return parse_program(text)


def A(p, *args):
    return Atom(p, tuple(args))


def test_transitive_closure():
    prog = kif("(<= (path ?x ?y) (edge ?x ?y)) (<= (path ?x ?z) (edge ?x ?y) (path ?y ?z))")
    edges = {A("edge", "a", "b"), A("edge", "b", "c"), A("edge", "c", "d")}
    model = evaluate(prog, edges)
    paths = {a.args for a in model if a.predicate == "path"}
    assert paths == {("a", "b"), ("b", "c"), ("c", "d"), ("a", "c"), ("b", "d"), ("a", "d")}
    assert model == naive_model(prog, edges)


def test_stratified_negation():
    prog = kif("(<= (reach ?y) (start ?y)) (<= (reach ?y) (reach ?x) (edge ?x ?y))"
               "(<= (unreached ?x) (node ?x) (not (reach ?x)))")
    facts = {A("node", n) for n in "abcd"} | {A("start", "a"), A("edge", "a", "b"), A("edge", "c", "d")}
    model = evaluate(prog, facts)
    assert {a.args[0] for a in model if a.predicate == "unreached"} == {"c", "d"}
    s = stratify(prog)
    assert s["unreached"] > s["reach"]


def test_negative_cycle_is_rejected():
    prog = kif("(<= (p ?x) (d ?x) (not (q ?x))) (<= (q ?x) (d ?x) (not (p ?x)))")
    with pytest.raises(UnstratifiableError):
        stratify(prog)
    with pytest.raises(UnstratifiableError):
        evaluate(prog, set())


def test_positive_recursion_is_allowed():
    stratify(kif("(<= (p ?x) (q ?x)) (<= (q ?x) (p ?x))"))


def test_distinct_and_constants():
    prog = kif("(<= (pair ?x ?y) (d ?x) (d ?y) (distinct ?x ?y)) (<= (hasb ?x) (e ?x b))")
    facts = {A("d", "1"), A("d", "2"), A("e", "k", "b"), A("e", "k", "c")}
    model = evaluate(prog, facts)
    assert {a.args for a in model if a.predicate == "pair"} == {("1", "2"), ("2", "1")}
    assert A("hasb", "k") in model


def test_repeated_variable_in_one_literal():
    prog = kif("(<= (loop ?x) (edge ?x ?x))")
    model = evaluate(prog, {A("edge", "a", "a"), A("edge", "a", "b")})
    assert {a for a in model if a.predicate == "loop"} == {A("loop", "a")}


def test_zero_arity_predicates():
    prog = kif("(<= done (flag on)) (<= (idle) (not done))")
    assert entails(prog, {A("flag", "on")}, A("done"))
    assert not entails(prog, {A("flag", "on")}, A("idle"))
    assert entails(prog, set(), A("idle"))


def test_program_facts_are_part_of_the_model():
    prog = kif("(succ 0 1) (<= (next1 ?y) (at ?x) (succ ?x ?y))")
    assert A("next1", "1") in evaluate(prog, {A("at", "0")})


def test_unsafe_rule_raises():
    r = kif("(<= (p ?x) (q ?y))").rules[0]
    with pytest.raises(UnsafeRuleError):
        compile_rule(r)


def test_input_facts_not_mutated():
    prog = kif("(<= (p ?x) (q ?x))")
    db = Database.from_atoms({A("q", "a")})
    out = evaluate_db(prog, db)
    assert A("p", "a") in out and A("p", "a") not in db


def test_entails_rejects_nonground_query():
    from iggp.logic import Var
    with pytest.raises(ValueError):
        entails(kif("(p a)"), set(), Atom("p", (Var("x"),)))


def test_run_plan_single_rule():
    r = kif("(<= (h ?y) (e ?x ?y) (f ?x))").rules[0]
    db = Database.from_atoms({A("e", "1", "2"), A("e", "3", "4"), A("f", "1")})
    assert run_plan(compile_rule(r), db) == [("2",)]


def test_strata_agree_with_oracle_on_random_programs():
    rng = random.Random(7)
    for _ in range(200):
        prog, _ = random_program(rng)
        mine = stratify(prog)
        theirs = naive_strata(prog)
        for r in prog.rules:
            for lit in r.body:
                q = lit.atom.predicate
                if q == "distinct":
                    continue
                assert mine[r.head.predicate] >= mine[q] + (1 if lit.negated else 0)
        assert mine.depth - 1 == max(theirs.values())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_semi_naive_matches_naive_oracle(seed):
    prog, facts = random_program(random.Random(seed))
    assert evaluate(prog, facts) == naive_model(prog, facts)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_model_is_monotone_in_facts_for_positive_programs(seed, seed2):
    rng = random.Random(seed)
    prog, facts = random_program(rng)
    from iggp.logic import Program, Rule
    positive = Program([Rule(r.head, tuple(l for l in r.body if not l.negated)) for r in prog.rules])
    more = facts | random_program(random.Random(seed2))[1]
    assert evaluate(positive, facts) <= evaluate(positive, more)
