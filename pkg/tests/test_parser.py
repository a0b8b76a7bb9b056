import pytest
from hypothesis import given, settings, strategies as st

from iggp.exceptions import GdlSyntaxError
from iggp.logic import Atom, Compound, Literal, Rule, Var, atom_is_flat, render_prolog, unparse
from iggp.parser import (flatten, parse_program, parse_prolog, parse_prolog_atom, rule_is_safe,
                         validate)


def test_fact_and_rule():
    prog = parse_program("(role x) (<= (p ?a) (q ?a) (not (r ?a)))")
    assert prog.rules[0] == Rule(Atom("role", ("x",)))
    r = prog.rules[1]
    assert r.head == Atom("p", (Var("a"),))
    assert r.body == (Literal(Atom("q", (Var("a"),))), Literal(Atom("r", (Var("a"),)), True))


def test_zero_arity_and_comments():
    prog = parse_program("; a comment\n(<= terminal (true (step 3))) ; trailing\n")
    assert prog.rules[0].head == Atom("terminal")
    assert prog.rules[0].body[0].atom == Atom("true", (Compound("step", ("3",)),))


def test_or_expands_to_one_rule_per_disjunct():
    prog = parse_program("(<= (p ?x) (s ?x) (or (q ?x) (r ?x)))")
    assert [r.body[1].atom.predicate for r in prog.rules] == ["q", "r"]


def test_case_folding():
    prog = parse_program("(ROLE White)")
    assert prog.rules[0].head == Atom("role", ("white",))


@pytest.mark.parametrize("text", ["(role x", "(role x))", "(<= (p))", "(<= (?x a) (q a))"])
def test_syntax_errors(text):
    with pytest.raises(GdlSyntaxError):
        parse_program(text)


def test_unbalanced_reports_position():
    with pytest.raises(GdlSyntaxError) as e:
        parse_program("(role x)\n  (init (cell 1 1 b)")
    assert "2" in str(e.value)


def test_unparse_roundtrip_on_bundled_games(games):
    for prog in games.values():
        again = parse_program(unparse(prog))
        assert again.structurally_equal(prog)


def test_flatten_compound_arguments():
    prog = parse_program("(init (cell 1 1 b)) (<= (next (cell ?m ?n x)) (does x (mark ?m ?n)))")
    flat = flatten(prog)
    assert flat.rules[0].head == Atom("init_cell", ("1", "1", "b"))
    assert flat.rules[1].head == Atom("next_cell", (Var("m"), Var("n"), "x"))
    assert flat.rules[1].body[0].atom == Atom("does_mark", ("x", Var("m"), Var("n")))
    fmap = flat.flattening
    assert fmap.unflatten_atom(Atom("does_mark", ("x", "1", "2"))) == \
        Atom("does", ("x", Compound("mark", ("1", "2"))))


def test_flatten_specialises_generic_fluent_variables():
    prog = parse_program("(init (a 1)) (init (b 2 3)) (<= (next ?f) (true ?f))")
    heads = sorted(r.head.predicate for r in flatten(prog).rules if r.body)
    assert heads == ["next_a", "next_b"]


def test_flattened_games_are_flat(games):
    for prog in games.values():
        for atom in flatten(prog).atoms():
            assert all(type(a) is not Compound for a in atom.args)


def test_safety_and_validation():
    prog = parse_program("(role r) (<= (p ?x) (q ?y)) (<= (true ?x) (q ?x)) (<= (goal r) (q a))")
    kinds = sorted(v.kind for v in validate(prog))
    assert kinds == ["reserved-arity", "reserved-head", "unsafe"]
    assert not rule_is_safe(prog.rules[1])
    neg_only = parse_program("(<= (p ?x) (q a) (not (r ?x)))").rules[0]
    assert not rule_is_safe(neg_only)
    distinct_only = parse_program("(<= (p ?x) (q a) (distinct ?x a))").rules[0]
    assert not rule_is_safe(distinct_only)


def test_bundled_games_validate(games):
    for prog in games.values():
        assert validate(flatten(prog)) == []


def test_prolog_rendering_roundtrip():
    r = parse_program("(<= (next_step ?n) (true_step ?m) (succ ?m ?n) (not (done ?n)))").rules[0]
    text = render_prolog([r])
    assert text.strip() == "next_step(N) :- true_step(M), succ(M,N), not done(N)."
    assert parse_prolog(text).rules[0] == r
    assert parse_prolog_atom("legal_mark(x,1,2)") == Atom("legal_mark", ("x", "1", "2"))


const = st.sampled_from(["a", "b", "c1", "0", "100"])
var = st.sampled_from([Var("x"), Var("y"), Var("z")])


@st.composite
def flat_rules(draw):
    nbody = draw(st.integers(0, 3))
    body = []
    seen = []
    for _ in range(nbody):
        args = tuple(draw(st.lists(st.one_of(const, var), max_size=3)))
        seen.extend(a for a in args if type(a) is Var)
        body.append(Literal(Atom(draw(st.sampled_from(["p", "q", "r_s"])), args)))
    pool = seen or ["a"]
    head_args = tuple(draw(st.lists(st.sampled_from(pool), max_size=2)))
    if nbody == 0:
        head_args = tuple(a for a in head_args if type(a) is str)
    neg = draw(st.booleans()) and body and seen
    if neg:
        body.append(Literal(Atom("t", (seen[0],)), True))
    return Rule(Atom("h", head_args), tuple(body))


@settings(max_examples=150, deadline=None)
@given(st.lists(flat_rules(), min_size=1, max_size=4))
def test_kif_and_prolog_roundtrip_property(rules):
    from iggp.logic import Program
    prog = Program(rules)
    assert parse_program(unparse(prog)).structurally_equal(prog)
    assert parse_prolog(render_prolog(rules)).rules == rules
    assert all(atom_is_flat(a) for a in prog.atoms())
