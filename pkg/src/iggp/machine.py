"""GDL programs as state machines over the reserved predicates.

The flattened program is split into three layers that are evaluated once
each at the point they become meaningful: static rules (no dependence on
``true``/``does``) once per game, state rules once per state, move rules
once per (state, joint move). Per-state results are cached keyed on the
fluent set, so legal/goal/terminal queries and repeat visits share one model.
"""
from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass

from .datalog import CompiledProgram, Database
from .exceptions import AmbiguousGoalError, IllegalMoveError, IllFormedGameError
from .logic import Atom, Compound, Program, sort_key
from .parser import FlatteningMap, flatten, validate

CACHE_LIMIT = 100_000


def has_prefix(pred: str, family: str) -> bool:
    return pred == family or pred.startswith(family + "_")


def rename_family(pred: str, old: str, new: str) -> str:
    return new + pred[len(old):]


@dataclass(frozen=True, slots=True)
class GameState:
    fluents: frozenset
    step: int = 0

    def __iter__(self):
        return iter(self.fluents)

    def __len__(self):
        return len(self.fluents)


class Goals(dict):
    """Role -> goal value; ``missing`` lists roles without a goal atom."""

    def __init__(self, values=(), missing=frozenset()):
        super().__init__(values)
        self.missing = frozenset(missing)


class _StateInfo:
    __slots__ = ("fluents", "db", "legal", "joint_moves", "terminal", "goals", "succ", "succ_at")

    def __init__(self, fluents, db, legal, terminal, goals):
        self.fluents = fluents
        self.db = db
        self.legal = legal
        self.joint_moves = list(itertools.product(*legal))
        self.terminal = terminal
        self.goals = goals
        self.succ = {}
        self.succ_at = [None] * len(self.joint_moves)


def _is_compound_free(program: Program) -> bool:
    return all(type(a) is not Compound for atom in program.atoms() for a in atom.args)


class GameMachine:
    def __init__(self, game: Program, check: bool = True):
        self.source = game
        program = game if (game.flattening is not None or _is_compound_free(game)) else flatten(game)
        if check:
            problems = validate(program)
            if problems:
                raise IllFormedGameError("; ".join(str(p) for p in problems))
        self.program = program
        self.fmap: FlatteningMap = program.flattening or FlatteningMap()
        self._split_layers()
        self.static_db = self._static.run(Database())
        self.roles = tuple(args[0] for args in _source_order(game, "role"))
        if not self.roles:
            raise IllFormedGameError("game declares no roles")
        self.role_index = {r: i for i, r in enumerate(self.roles)}
        init = set()
        for pred, rows in self.static_db.rel.items():
            if has_prefix(pred, "init"):
                tp = rename_family(pred, "init", "true")
                init.update(Atom(tp, args) for args in rows)
        self._initial = GameState(frozenset(init), 0)
        self._cache = {}
        self._does = {}

    def _split_layers(self):
        rules = self.program.rules
        heads = {r.head.predicate for r in rules}
        on_state, on_move = set(), set()
        changed = True
        while changed:
            changed = False
            for r in rules:
                h = r.head.predicate
                for lit in r.body:
                    q = lit.atom.predicate
                    if (has_prefix(q, "does") or q in on_move) and h not in on_move:
                        on_move.add(h)
                        changed = True
                    if (has_prefix(q, "true") or q in on_state) and h not in on_state:
                        on_state.add(h)
                        changed = True
        for h in on_move:
            if has_prefix(h, "legal") or has_prefix(h, "goal") or h == "terminal":
                raise IllFormedGameError(f"{h} depends on does")
        static = [r for r in rules if r.head.predicate not in on_state | on_move]
        state = [r for r in rules if r.head.predicate in on_state - on_move]
        move = [r for r in rules if r.head.predicate in on_move]
        self._static = CompiledProgram(Program(static))
        self._state = CompiledProgram(Program(state))
        self._move = CompiledProgram(Program(move))
        self.static_predicates = frozenset(heads - on_state - on_move)
        self.state_predicates = frozenset(on_state - on_move)
        self.move_predicates = frozenset(on_move)

    # -- low level -------------------------------------------------------

    def info(self, fluents: frozenset) -> _StateInfo:
        hit = self._cache.get(fluents)
        if hit is not None:
            return hit
        if len(self._cache) >= CACHE_LIMIT:
            self._cache.clear()
        db = self.static_db.copy()
        for a in fluents:
            db.add(a.predicate, a.args)
        self._state.run(db)
        legal = [set() for _ in self.roles]
        goals: dict = {}
        for pred, rows in db.rel.items():
            if has_prefix(pred, "legal"):
                for args in rows:
                    full = self.fmap.unflatten_atom(Atom(pred, args))
                    if full.predicate != "legal" or len(full.args) != 2:
                        continue
                    i = self.role_index.get(full.args[0])
                    if i is not None:
                        legal[i].add(full.args[1])
            elif pred == "goal":
                for role, value in rows:
                    if role not in self.role_index:
                        continue
                    if not value.isdigit() or int(value) > 100:
                        raise IllFormedGameError(f"goal value {value!r} outside [0,100]")
                    v = int(value)
                    if goals.setdefault(role, v) != v:
                        raise AmbiguousGoalError(
                            f"role {role} has goal values {goals[role]} and {v}")
        terminal = bool(db.rel.get("terminal"))
        legal_sorted = tuple(tuple(sorted(s, key=_action_key)) for s in legal)
        info = _StateInfo(fluents, db, legal_sorted, terminal,
                          Goals(((r, goals.get(r, 0)) for r in self.roles),
                                missing=[r for r in self.roles if r not in goals]))
        self._cache[fluents] = info
        return info

    def does_atom(self, role, action) -> Atom:
        key = (role, action)
        hit = self._does.get(key)
        if hit is None:
            hit = self._does[key] = self.fmap.flatten_atom(Atom("does", (role, action)))
        return hit

    def successor(self, info: _StateInfo, joint: tuple) -> frozenset:
        hit = info.succ.get(joint)
        if hit is not None:
            return hit
        db = info.db.copy()
        for role, action in zip(self.roles, joint):
            a = self.does_atom(role, action)
            db.add(a.predicate, a.args)
        self._move.run(db)
        out = []
        for pred, rows in db.rel.items():
            if has_prefix(pred, "next"):
                tp = rename_family(pred, "next", "true")
                out.extend(Atom(tp, args) for args in rows)
        fl = frozenset(out)
        info.succ[joint] = fl
        return fl

    def successor_at(self, info: _StateInfo, index: int) -> frozenset:
        """Successor fluents for the joint move ``info.joint_moves[index]``."""
        fl = info.succ_at[index]
        if fl is None:
            fl = info.succ_at[index] = self.successor(info, info.joint_moves[index])
        return fl

    def model(self, state: GameState, joint=None) -> set:
        """The full model for a state (and optionally a joint move)."""
        info = self.info(state.fluents)
        if joint is None:
            return info.db.atoms()
        db = info.db.copy()
        for role, action in zip(self.roles, self.joint(joint)):
            a = self.does_atom(role, action)
            db.add(a.predicate, a.args)
        return self._move.run(db).atoms()

    # -- public state-machine interface ----------------------------------

    def initial_state(self) -> GameState:
        return self._initial

    def legal_moves(self, state: GameState) -> dict:
        info = self.info(state.fluents)
        if not info.terminal:
            for role, acts in zip(self.roles, info.legal):
                if not acts:
                    raise IllFormedGameError(f"role {role} has no legal move in a non-terminal state")
        return {role: set(acts) for role, acts in zip(self.roles, info.legal)}

    def joint(self, joint) -> tuple:
        if isinstance(joint, dict):
            missing = [r for r in self.roles if r not in joint]
            if missing or len(joint) != len(self.roles):
                raise ValueError(f"joint move must name every role exactly once: {joint!r}")
            return tuple(joint[r] for r in self.roles)
        joint = tuple(joint)
        if len(joint) != len(self.roles):
            raise ValueError(f"joint move has {len(joint)} actions for {len(self.roles)} roles")
        return joint

    def next_state(self, state: GameState, joint) -> GameState:
        info = self.info(state.fluents)
        j = self.joint(joint)
        for role, action, acts in zip(self.roles, j, info.legal):
            if action not in acts:
                raise IllegalMoveError(role, action)
        return GameState(self.successor(info, j), state.step + 1)

    def is_terminal(self, state: GameState) -> bool:
        return self.info(state.fluents).terminal

    def goal_values(self, state: GameState) -> Goals:
        return self.info(state.fluents).goals


def _source_order(game: Program, pred: str):
    seen = []
    for r in game.rules:
        if r.is_fact and r.head.predicate == pred and r.head.args not in seen:
            seen.append(r.head.args)
    return seen


def _action_key(action):
    return sort_key(action)


_MACHINES = weakref.WeakKeyDictionary()


def machine_for(game) -> GameMachine:
    if isinstance(game, GameMachine):
        return game
    m = _MACHINES.get(game)
    if m is None:
        m = _MACHINES[game] = GameMachine(game)
    return m


def roles(game) -> list:
    return list(machine_for(game).roles)


def initial_state(game) -> GameState:
    return machine_for(game).initial_state()


def legal_moves(game, state: GameState) -> dict:
    return machine_for(game).legal_moves(state)


def next_state(game, state: GameState, joint) -> GameState:
    return machine_for(game).next_state(state, joint)


def is_terminal(game, state: GameState) -> bool:
    return machine_for(game).is_terminal(state)


def goal_values(game, state: GameState) -> Goals:
    return machine_for(game).goal_values(state)
