import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import SOLVED, puzzle_fluents, ttt_winner

from iggp.exceptions import IllegalMoveError, IllFormedGameError
from iggp.logic import Atom, Compound
from iggp.machine import GameMachine, GameState, machine_for
from iggp.parser import parse_program


def test_rps_initial_state(games):
    m = machine_for(games["rps"])
    assert m.roles == ("p1", "p2")
    s = m.initial_state()
    assert s.fluents == {Atom("true_step", ("0",)), Atom("true_score", ("p1", "0")),
                         Atom("true_score", ("p2", "0"))}
    assert not m.is_terminal(s)
    assert m.legal_moves(s) == {"p1": {"paper", "scissors", "stone"},
                                "p2": {"paper", "scissors", "stone"}}


def test_rps_scoring(games):
    m = machine_for(games["rps"])
    s = m.next_state(m.initial_state(), {"p1": "paper", "p2": "stone"})
    assert Atom("true_score", ("p1", "1")) in s.fluents
    assert Atom("true_score", ("p2", "0")) in s.fluents
    assert Atom("true_step", ("1",)) in s.fluents
    assert m.goal_values(s) == {"p1": 100, "p2": 0}
    s = m.next_state(s, ("stone", "stone"))
    s = m.next_state(s, ("scissors", "stone"))
    assert m.is_terminal(s)
    assert m.goal_values(s) == {"p1": 50, "p2": 50}


def test_illegal_move(games):
    m = machine_for(games["tictactoe"])
    with pytest.raises(IllegalMoveError):
        m.next_state(m.initial_state(), (Compound("mark", ("1", "1")), Compound("mark", ("1", "1"))))
    with pytest.raises(ValueError):
        m.next_state(m.initial_state(), {"x": "noop"})


def test_eightpuzzle_solution_reaches_goal(games):
    m = machine_for(games["eightpuzzle"])
    assert m.roles == ("player",)
    solved = GameState(puzzle_fluents(SOLVED), 0)
    assert m.is_terminal(solved) and m.goal_values(solved)["player"] == 100
    one_off = GameState(puzzle_fluents((1, 2, 3, 4, 5, 6, 7, 0, 8)), 0)
    assert m.goal_values(one_off)["player"] == 0
    assert m.legal_moves(one_off)["player"] == {Compound("move", ("3", "3")), Compound("move", ("2", "2")),
                                                Compound("move", ("3", "1"))}
    after = m.next_state(one_off, (Compound("move", ("3", "3")),))
    assert after.fluents == solved.fluents


def test_fizzbuzz_counts_right_answers(games):
    m = machine_for(games["fizzbuzz"])
    answers = ["number", "number", "fizz", "number", "buzz", "fizz", "number"]
    s = m.initial_state()
    for w in answers:
        s = m.next_state(s, (Compound("say", (w,)),))
    assert m.is_terminal(s) and m.goal_values(s)["player"] == 100
    s = m.initial_state()
    for _ in range(10):
        s = m.next_state(s, (Compound("say", ("fizz",)),))
    assert m.is_terminal(s) and m.goal_values(s)["player"] == 0


def ttt_board(fluents):
    board = ["b"] * 9
    for a in fluents:
        if a.predicate == "true_cell":
            board[(int(a.args[0]) - 1) * 3 + int(a.args[1]) - 1] = a.args[2]
    return tuple(board)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_tictactoe_matches_reference_rules(seed):
    """Random playouts agree with a direct implementation of the rules."""
    rng = random.Random(seed)
    m = machine_for(parse_program(open_game("tictactoe")))
    s = m.initial_state()
    mover = "x"
    while True:
        board = ttt_board(s.fluents)
        w = ttt_winner(board)
        over = w is not None or "b" not in board
        assert m.is_terminal(s) == over
        if over:
            g = m.goal_values(s)
            expect = {"x": 50, "o": 50} if w is None else {w: 100, ("o" if w == "x" else "x"): 0}
            assert g == expect
            break
        legal = m.legal_moves(s)
        other = "o" if mover == "x" else "x"
        free = {Compound("mark", (str(i // 3 + 1), str(i % 3 + 1))) for i in range(9) if board[i] == "b"}
        assert legal[mover] == free and legal[other] == {"noop"}
        a = rng.choice(sorted(free, key=repr))
        s = m.next_state(s, {mover: a, other: "noop"})
        mover = other


def open_game(name):
    from iggp.games import game_text
    return game_text(name)


def test_caching_is_transparent(games):
    g = games["tictactoe"]
    fresh = GameMachine(g)
    cached = machine_for(g)
    assert machine_for(g) is cached
    rng = random.Random(3)
    s1 = s2 = fresh.initial_state()
    while not fresh.is_terminal(s1):
        legal = fresh.legal_moves(s1)
        joint = {r: sorted(legal[r], key=repr)[rng.randrange(len(legal[r]))] for r in fresh.roles}
        s1 = fresh.next_state(s1, joint)
        s2 = cached.next_state(s2, joint)
        assert s1 == s2


def test_legal_depending_on_does_is_rejected():
    text = "(role r) (init (s 0)) (<= (legal r go) (does r go)) (<= terminal (true (s 1)))"
    with pytest.raises(IllFormedGameError):
        GameMachine(parse_program(text))


def test_missing_goal_is_reported():
    text = "(role a) (role b) (init (s 0)) (<= (legal ?r go) (role ?r)) (goal a 100)" \
           "(<= (next (s 1)) (true (s 0))) (<= terminal (true (s 1)))"
    m = GameMachine(parse_program(text))
    g = m.goal_values(m.initial_state())
    assert g["a"] == 100 and "b" in g.missing

