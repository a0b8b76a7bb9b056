"""Independent reference implementations used as test oracles.

None of these share code with the package: the Datalog oracle grounds every
rule over the active domain and iterates naively, the puzzle oracle is a
plain breadth-first search over tile tuples, and the chi-squared oracle uses
exact fractions.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from fractions import Fraction

from iggp.logic import Atom, Literal, Program, Rule, Var


# -- Datalog -----------------------------------------------------------------

def naive_strata(program: Program) -> dict:
    """Stratum per predicate by relaxation: s(h) >= s(b), and > for negated b."""
    preds = set()
    for r in program.rules:
        preds.add(r.head.predicate)
        preds.update(l.atom.predicate for l in r.body if l.atom.predicate != "distinct")
    s = {p: 0 for p in preds}
    for _ in range(len(preds) + 1):
        changed = False
        for r in program.rules:
            for l in r.body:
                q = l.atom.predicate
                if q == "distinct":
                    continue
                need = s[q] + (1 if l.negated else 0)
                if s[r.head.predicate] < need:
                    s[r.head.predicate] = need
                    changed = True
        if not changed:
            return s
    raise ValueError("not stratifiable")


def naive_model(program: Program, facts) -> set:
    """Perfect model by grounding each rule over every constant, stratum by stratum."""
    model = set(facts) | {r.head for r in program.rules if not r.body}
    consts = {a for atom in model for a in atom.args}
    for r in program.rules:
        for atom in [r.head] + [l.atom for l in r.body]:
            consts.update(a for a in atom.args if type(a) is str)
    consts = sorted(consts)
    strata = naive_strata(program)
    rules = [r for r in program.rules if r.body]
    for level in sorted(set(strata.values()) | {0}):
        layer = [r for r in rules if strata[r.head.predicate] == level]
        while True:
            new = set()
            for r in layer:
                vs = sorted(r.variables(), key=lambda v: v.name)
                for combo in itertools.product(consts, repeat=len(vs)):
                    theta = dict(zip(vs, combo))

                    def g(atom):
                        return Atom(atom.predicate, tuple(theta.get(a, a) for a in atom.args))

                    ok = True
                    for l in r.body:
                        a = g(l.atom)
                        if a.predicate == "distinct":
                            holds = a.args[0] != a.args[1]
                        else:
                            holds = a in model
                        if holds == l.negated:
                            ok = False
                            break
                    if ok:
                        h = g(r.head)
                        if h not in model:
                            new.add(h)
            if not new:
                break
            model |= new
    return model


def random_program(rng: random.Random, n_idb=3, n_rules=5, consts=("a", "b", "c")):
    """A small, safe, stratifiable program plus an input fact set.

    Positive literals may refer to the head's own level or below, negated
    ones strictly below, which rules out cycles through negation.
    """
    edb = {"e0": 1, "e1": 2, "e2": 2}
    idb = {f"p{i}": rng.choice((1, 2)) for i in range(n_idb)}
    rules = []
    for _ in range(n_rules):
        j = rng.randrange(n_idb)
        head_pred = f"p{j}"
        vars_ = [Var(f"x{k}") for k in range(3)]
        body, bound = [], []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.6 or j == 0 and not bound:
                pred = rng.choice(list(edb))
                ar = edb[pred]
            else:
                pred = f"p{rng.randrange(j + 1)}"
                ar = idb[pred]
            args = tuple(rng.choice(vars_) if rng.random() < 0.85 else rng.choice(consts)
                         for _ in range(ar))
            body.append(Literal(Atom(pred, args)))
            bound.extend(a for a in args if type(a) is Var)
        if not bound:
            body.append(Literal(Atom("e0", (vars_[0],))))
            bound.append(vars_[0])
        bound = sorted(set(bound), key=lambda v: v.name)
        if rng.random() < 0.4:
            choices = list(edb) + [f"p{i}" for i in range(j)]
            pred = rng.choice(choices)
            ar = edb.get(pred) or idb[pred]
            args = tuple(rng.choice(bound) if rng.random() < 0.8 else rng.choice(consts)
                         for _ in range(ar))
            body.append(Literal(Atom(pred, args), True))
        if len(bound) >= 2 and rng.random() < 0.25:
            a, b = rng.sample(bound, 2)
            body.append(Literal(Atom("distinct", (a, b))))
        head_args = tuple(rng.choice(bound) if rng.random() < 0.9 else rng.choice(consts)
                          for _ in range(idb[head_pred]))
        rules.append(Rule(Atom(head_pred, head_args), tuple(body)))
    facts = set()
    for pred, ar in edb.items():
        for args in itertools.product(consts, repeat=ar):
            if rng.random() < 0.4:
                facts.add(Atom(pred, args))
    return Program(rules), facts


# -- eight puzzle --------------------------------------------------------------

SOLVED = (1, 2, 3, 4, 5, 6, 7, 8, 0)


def puzzle_neighbours(board):
    z = board.index(0)
    r, c = divmod(z, 3)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < 3 and 0 <= cc < 3:
            k = rr * 3 + cc
            b = list(board)
            b[z], b[k] = b[k], b[z]
            yield tuple(b)


def bfs_depth(board, limit=31):
    """Optimal number of moves to SOLVED, or None if unreachable within limit."""
    if board == SOLVED:
        return 0
    seen = {board}
    frontier = deque([(board, 0)])
    while frontier:
        b, d = frontier.popleft()
        if d >= limit:
            continue
        for nb in puzzle_neighbours(b):
            if nb in seen:
                continue
            if nb == SOLVED:
                return d + 1
            seen.add(nb)
            frontier.append((nb, d + 1))
    return None


def puzzle_fluents(board) -> frozenset:
    out = set()
    for i, t in enumerate(board):
        r, c = divmod(i, 3)
        out.add(Atom("true_cell", (str(r + 1), str(c + 1), "b" if t == 0 else str(t))))
    return frozenset(out)


def apply_puzzle_moves(board, moves):
    """Replay move(r,c) actions (the tile at r,c slides into the blank)."""
    b = list(board)
    for act in moves:
        r, c = int(act.args[0]), int(act.args[1])
        k = (r - 1) * 3 + (c - 1)
        z = b.index(0)
        zr, zc = divmod(z, 3)
        assert abs(zr - (r - 1)) + abs(zc - (c - 1)) == 1, "move is not adjacent to the blank"
        b[z], b[k] = b[k], b[z]
    return tuple(b)


def scrambled(rng: random.Random, walk: int):
    b = SOLVED
    for _ in range(walk):
        b = rng.choice(list(puzzle_neighbours(b)))
    return b


# -- tic-tac-toe ---------------------------------------------------------------

LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]


def ttt_winner(board):
    for a, b, c in LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


def ttt_value(board, to_move, memo=None) -> int:
    """Minimax value for x: +1 win, 0 draw, -1 loss."""
    memo = {} if memo is None else memo
    key = (board, to_move)
    if key in memo:
        return memo[key]
    w = ttt_winner(board)
    if w is not None:
        v = 1 if w == "x" else -1
    elif "b" not in board:
        v = 0
    else:
        other = "o" if to_move == "x" else "x"
        vals = [ttt_value(board[:i] + (to_move,) + board[i + 1:], other, memo)
                for i, s in enumerate(board) if s == "b"]
        v = max(vals) if to_move == "x" else min(vals)
    memo[key] = v
    return v


# -- statistics ----------------------------------------------------------------

def exact_chi2(table) -> Fraction:
    (a, b), (c, d) = table
    total = a + b + c + d
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    stat = Fraction(0)
    for i, row in enumerate(((a, b), (c, d))):
        for j, obs in enumerate(row):
            exp = Fraction(rows[i] * cols[j], total)
            stat += (obs - exp) ** 2 / exp
    return stat
