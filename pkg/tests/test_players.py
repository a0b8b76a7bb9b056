import random
from collections import Counter

import pytest

from oracles import apply_puzzle_moves, bfs_depth, puzzle_fluents, scrambled, ttt_value, SOLVED

from iggp.exceptions import UnsupportedGameError
from iggp.logic import Atom, Compound
from iggp.machine import GameState, machine_for
from iggp.players import (SearchBudget, astar_solve, derive_heuristics, goal_targets, make_player,
                          mcts_choose, mcts_search, random_move)


def ttt_state(board, mover):
    """A tic-tac-toe GameState from a 9-tuple over {x, o, b}."""
    fl = {Atom("true_cell", (str(i // 3 + 1), str(i % 3 + 1), s)) for i, s in enumerate(board)}
    fl.add(Atom("true_control", (mover,)))
    return GameState(frozenset(fl), 0)


def cell_of(action):
    return (int(action.args[0]) - 1) * 3 + int(action.args[1]) - 1


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_playouts=-1)
    with pytest.raises(ValueError):
        SearchBudget(max_playouts=None, max_millis=None)
    assert SearchBudget(max_playouts=0).is_zero


def test_random_move_is_uniform():
    rng = random.Random(0)
    counts = Counter(random_move({"r": {"a", "b", "c"}}, rng)["r"] for _ in range(6000))
    assert set(counts) == {"a", "b", "c"}
    assert all(abs(c - 2000) < 200 for c in counts.values())


def test_forced_move_ignores_budget(games):
    g = games["tictactoe"]
    s = ttt_state(("x", "o", "x", "o", "x", "o", "o", "x", "b"), "x")
    res = mcts_search(g, s, "x", SearchBudget(max_playouts=0))
    assert res.action == Compound("mark", ("3", "3")) and not res.flagged
    assert mcts_choose(g, s, "o", SearchBudget(5)) == "noop"


def test_zero_budget_is_flagged(games):
    g = games["tictactoe"]
    res = mcts_search(g, machine_for(g).initial_state(), "x", SearchBudget(max_playouts=0))
    assert res.flagged and res.action in machine_for(g).legal_moves(machine_for(g).initial_state())["x"]


def test_search_is_reproducible(games):
    g = games["tictactoe"]
    s = machine_for(g).initial_state()
    a = [mcts_choose(g, s, "x", SearchBudget(300, rng_seed=11)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_tree_invariants_hold(games):
    g = games["tictactoe"]
    res = mcts_search(g, machine_for(g).initial_state(), "x", SearchBudget(200), debug=True)
    assert res.root.visits == 200
    assert sum(res.action_visits.values()) + res.root.own_playouts == 200


@pytest.mark.parametrize("board,mover", [
    (("x", "x", "b", "o", "o", "b", "b", "b", "b"), "x"),   # win at 3
    (("x", "x", "b", "o", "b", "b", "o", "b", "b"), "o"),   # must block at 3
    (("o", "b", "b", "x", "x", "b", "o", "b", "b"), "x"),   # win at 6
])
def test_mcts_picks_a_minimax_optimal_move(games, board, mover):
    g = games["tictactoe"]
    a = mcts_choose(g, ttt_state(board, mover), mover, SearchBudget(3000, rng_seed=1))
    i = cell_of(a)
    assert board[i] == "b"
    other = "o" if mover == "x" else "x"
    after = board[:i] + (mover,) + board[i + 1:]
    vals = [ttt_value(board[:j] + (mover,) + board[j + 1:], other) for j in range(9) if board[j] == "b"]
    best = max(vals) if mover == "x" else min(vals)
    assert ttt_value(after, other) == best


def test_goal_targets_for_the_puzzle(games):
    targets = goal_targets(games["eightpuzzle"], "player")
    assert len(targets) == 1
    assert targets[0] == frozenset(a for a in puzzle_fluents(SOLVED) if a.args[2] != "b")


@pytest.mark.parametrize("walk_seed", range(6))
def test_astar_is_optimal_against_bfs(games, walk_seed):
    rng = random.Random(walk_seed)
    board = scrambled(rng, 14)
    depth = bfs_depth(board)
    path = astar_solve(games["eightpuzzle"], GameState(puzzle_fluents(board), 0), SearchBudget(200_000))
    assert len(path) == depth
    assert apply_puzzle_moves(board, path) == SOLVED


def test_astar_bundled_instance(games):
    m = machine_for(games["eightpuzzle"])
    path = astar_solve(games["eightpuzzle"], m.initial_state(), SearchBudget(200_000))
    s = m.initial_state()
    for a in path:
        s = m.next_state(s, (a,))
    assert m.goal_values(s)["player"] == 100
    assert len(path) == 10


def test_astar_unsolvable_parity_gives_none(games):
    board = (2, 1, 3, 4, 5, 6, 7, 8, 0)
    assert bfs_depth(board, limit=8) is None
    assert astar_solve(games["eightpuzzle"], GameState(puzzle_fluents(board), 0),
                       SearchBudget(max_playouts=3000)) is None


def test_astar_rejects_multi_role_games(games):
    with pytest.raises(UnsupportedGameError):
        astar_solve(games["rps"], machine_for(games["rps"]).initial_state(), SearchBudget(10))


def test_fizzbuzz_astar_answers_correctly(games):
    g = games["fizzbuzz"]
    path = astar_solve(g, machine_for(g).initial_state(), SearchBudget(10_000))
    assert [a.args[0] for a in path] == ["number", "number", "fizz", "number", "buzz", "fizz", "number"]


def test_derived_heuristics_are_well_formed(games):
    hs = derive_heuristics(games["tictactoe"], 40, 0.3, random.Random(5))
    assert hs
    for h in hs:
        assert -1 <= h.correlation <= 1
        assert h.enabled == (abs(h.correlation) >= 0.3)


def test_players_choose_legal_moves(games):
    g = games["tictactoe"]
    m = machine_for(g)
    s = m.initial_state()
    for kind in ("random", "mcts", "intelligent"):
        p = make_player(kind, playouts=50)
        assert p.choose(m, s, "x", random.Random(1)) in m.legal_moves(s)["x"]
    with pytest.raises(ValueError):
        make_player("minimax")
