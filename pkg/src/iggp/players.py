"""Move selection: uniform random, UCT Monte-Carlo tree search and A*.

The search tree is built over joint moves: every edge fixes one action per
role, and each role's reward is backed up separately. A child's value is
judged by the roles that actually have a choice at the parent, so in turn
taking games the mover maximises its own reward.
"""
from __future__ import annotations

import heapq
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .datalog import compile_rule, run_plan
from .exceptions import UnsupportedGameError
from .logic import Atom, Literal, Rule, Var, sort_key, substitute_atom
from .machine import GameMachine, GameState, has_prefix, machine_for

UCT_C = math.sqrt(2.0)
HEURISTIC_WEIGHT = 0.5
DEFAULT_MOVE_CAP = 60


@dataclass(frozen=True)
class SearchBudget:
    max_playouts: int | None = 1000
    max_millis: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_playouts is None and self.max_millis is None:
            raise ValueError("a search budget needs max_playouts or max_millis")
        if self.max_playouts is not None and self.max_playouts < 0:
            raise ValueError("max_playouts must be non-negative")
        if self.max_millis is not None and self.max_millis < 0:
            raise ValueError("max_millis must be non-negative")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def is_zero(self) -> bool:
        return self.max_playouts == 0 or self.max_millis == 0


def random_move(legal, rng, roles=None) -> dict:
    """Draw each role's action independently and uniformly."""
    roles = list(legal) if roles is None else roles
    joint = {}
    for r in roles:
        acts = legal[r]
        if not acts:
            raise ValueError(f"role {r} has no legal action")
        acts = acts if isinstance(acts, (list, tuple)) else sorted(acts, key=sort_key)
        joint[r] = acts[rng.randrange(len(acts))]
    return joint


# -- heuristics --------------------------------------------------------------

@dataclass
class Heuristic:
    predicate: str
    position: int
    role: str
    role_position: int | None = None
    correlation: float = 0.0
    enabled: bool = False
    low: float = 0.0
    high: float = 0.0

    @property
    def kind(self):
        return ("numeric-quantity", self.predicate, self.position, self.role_position)

    def raw(self, fluents):
        vals = [int(a.args[self.position]) for a in fluents
                if a.predicate == self.predicate
                and (self.role_position is None or a.args[self.role_position] == self.role)]
        return sum(vals) / len(vals) if vals else None

    def value(self, fluents) -> float:
        """Observed quantity scaled to [0,1], oriented so higher is better."""
        v = self.raw(fluents)
        if v is None or self.high <= self.low:
            return 0.0
        x = min(1.0, max(0.0, (v - self.low) / (self.high - self.low)))
        return x if self.correlation >= 0 else 1.0 - x


def _pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def _playout_states(m: GameMachine, fluents, step, cap, rng):
    seen = [fluents]
    info = m.info(fluents)
    while not info.terminal and step < cap:
        fluents = m.successor_at(info, rng.randrange(len(info.joint_moves)))
        step += 1
        info = m.info(fluents)
        seen.append(fluents)
    return seen, info.goals


def derive_heuristics(game, n_simulations: int, threshold: float, rng,
                      move_cap: int = DEFAULT_MOVE_CAP) -> list:
    """Correlate numeric fluent quantities with final goal values."""
    if n_simulations < 2:
        raise ValueError("need at least two simulations")
    m = machine_for(game)
    roleset = set(m.roles)
    sims = []
    for _ in range(n_simulations):
        states, goals = _playout_states(m, m.initial_state().fluents, 0, move_cap, rng)
        sims.append((states, goals))
    observed: dict = {}
    for states, _ in sims:
        for fl in states:
            for a in fl:
                observed.setdefault((a.predicate, len(a.args)), []).append(a.args)
    out = []
    for (pred, arity), rows in sorted(observed.items()):
        if not has_prefix(pred, "true"):
            continue
        role_pos = [q for q in range(arity) if all(r[q] in roleset for r in rows)]
        for p in range(arity):
            if not all(r[p].isdigit() for r in rows):
                continue
            assoc = next((q for q in role_pos if q != p), None)
            for role in m.roles:
                h = Heuristic(pred, p, role, assoc)
                xs, ys = [], []
                for states, goals in sims:
                    per = [h.raw(fl) for fl in states]
                    per = [v for v in per if v is not None]
                    if per:
                        xs.append(sum(per) / len(per))
                        ys.append(goals[role])
                all_vals = [int(r[p]) for r in rows if assoc is None or r[assoc] == role]
                if all_vals:
                    h.low, h.high = float(min(all_vals)), float(max(all_vals))
                h.correlation = _pearson(xs, ys)
                h.enabled = abs(h.correlation) >= threshold and h.correlation != 0.0
                out.append(h)
    return out


# -- MCTS --------------------------------------------------------------------

class MctsNode:
    __slots__ = ("fluents", "step", "visits", "total_reward", "joints", "children",
                 "untried", "own_playouts", "terminal", "choosers")

    def __init__(self, m: GameMachine, fluents, step, cap):
        info = m.info(fluents)
        self.fluents = fluents
        self.step = step
        self.visits = 0
        self.total_reward = [0.0] * len(m.roles)
        self.own_playouts = 0
        self.terminal = info.terminal or step >= cap
        self.joints = [] if self.terminal else info.joint_moves
        self.children = [None] * len(self.joints)
        self.untried = list(range(len(self.joints)))
        self.choosers = [i for i, acts in enumerate(info.legal) if len(acts) > 1]

    @property
    def state(self) -> GameState:
        return GameState(self.fluents, self.step)

    def child_items(self):
        return [(j, c) for j, c in zip(self.joints, self.children) if c is not None]

    def check(self):
        kids = sum(c.visits for c in self.children if c is not None)
        assert self.visits == kids + self.own_playouts, "visit count mismatch"
        for r in self.total_reward:
            assert -1e-9 <= r <= self.visits + 1e-9, "reward outside [0, visits]"


@dataclass
class SearchResult:
    action: object
    root: MctsNode | None
    playouts: int = 0
    flagged: bool = False
    action_visits: dict = field(default_factory=dict)


def mcts_search(game, state: GameState, role, budget: SearchBudget, heuristics=(),
                move_cap: int = DEFAULT_MOVE_CAP, c: float = UCT_C,
                weight: float = HEURISTIC_WEIGHT, debug: bool = False) -> SearchResult:
    m = machine_for(game)
    rng = random.Random(budget.rng_seed)
    ri = m.role_index[role]
    info = m.info(state.fluents)
    if info.terminal:
        raise ValueError("cannot search from a terminal state")
    own = info.legal[ri]
    if not own:
        raise ValueError(f"role {role} has no legal action")
    if len(own) == 1:
        return SearchResult(own[0], None)
    if budget.is_zero:
        return SearchResult(own[rng.randrange(len(own))], None, flagged=True)

    enabled = [h for h in heuristics if h.enabled]
    by_role = [[h for h in enabled if h.role == r] for r in m.roles]
    hcache: dict = {}

    def hvalue(fluents, i):
        key = (fluents, i)
        v = hcache.get(key)
        if v is None:
            hs = by_role[i]
            v = hcache[key] = sum(h.value(fluents) for h in hs) / len(hs) if hs else 0.0
        return v

    root = MctsNode(m, state.fluents, state.step, move_cap)
    deadline = None if budget.max_millis is None else time.perf_counter() + budget.max_millis / 1000
    limit = budget.max_playouts
    n = 0
    nroles = len(m.roles)
    roles = m.roles
    rnd = rng.random
    sqrt, log = math.sqrt, math.log
    cache_info = m.info
    succ_at = m.successor_at
    everyone = list(range(nroles))
    while (limit is None or n < limit) and (deadline is None or time.perf_counter() < deadline):
        node = root
        path = [node]
        while not node.terminal and not node.untried:
            log_n = log(node.visits)
            best, best_score = None, -math.inf
            choosers = node.choosers or everyone
            if len(choosers) == 1 and not enabled:
                i = choosers[0]
                for child in node.children:
                    inv = 1.0 / child.visits
                    score = child.total_reward[i] * inv + c * sqrt(log_n * inv)
                    if score > best_score:
                        best, best_score = child, score
            else:
                k = len(choosers)
                for child in node.children:
                    inv = 1.0 / child.visits
                    tr = child.total_reward
                    score = sum([tr[i] for i in choosers]) * inv / k + c * sqrt(log_n * inv)
                    if enabled:
                        score += weight * sum([hvalue(child.fluents, i) for i in choosers]) / k / (1 + child.visits)
                    if score > best_score:
                        best, best_score = child, score
            node = best
            path.append(node)
        if not node.terminal:
            untried = node.untried
            k = int(rnd() * len(untried))
            idx = untried[k]
            untried[k] = untried[-1]
            untried.pop()
            child = MctsNode(m, succ_at(cache_info(node.fluents), idx), node.step + 1, move_cap)
            node.children[idx] = child
            node = child
            path.append(node)
        node.own_playouts += 1
        step = node.step
        info = cache_info(node.fluents)
        while not info.terminal and step < move_cap:
            info = cache_info(succ_at(info, int(rnd() * len(info.joint_moves))))
            step += 1
        goals = info.goals
        reward = [goals[r] / 100.0 for r in roles]
        for p in path:
            p.visits += 1
            tr = p.total_reward
            for i in range(nroles):
                tr[i] += reward[i]
        if debug:
            for p in path:
                p.check()
        n += 1
    visits: dict = {}
    for joint, child in root.child_items():
        a = joint[ri]
        visits[a] = visits.get(a, 0) + child.visits
    if not visits:
        return SearchResult(own[rng.randrange(len(own))], root, n, flagged=True)
    action = min(visits, key=lambda a: (-visits[a], sort_key(a)))
    return SearchResult(action, root, n, action_visits=visits)


def mcts_choose(game, state, role, budget, heuristics=(), **kw):
    return mcts_search(game, state, role, budget, heuristics, **kw).action


# -- A* ----------------------------------------------------------------------

def goal_targets(game, role) -> list:
    """Ground fluent sets that make up the bodies of goal(role, 100) rules.

    Static body literals are solved against the game's static facts; rules
    relying on other derived predicates contribute nothing.
    """
    m = machine_for(game)
    targets = []
    for rule in m.program.rules:
        h = rule.head
        if h.predicate != "goal" or len(h.args) != 2 or rule.is_fact:
            continue
        theta = {}
        ok = True
        for arg, want in zip(h.args, (role, "100")):
            if type(arg) is Var:
                if theta.get(arg, want) != want:
                    ok = False
                theta[arg] = want
            elif arg != want:
                ok = False
        if not ok:
            continue
        body = [Literal(substitute_atom(l.atom, theta), l.negated) for l in rule.body]
        fluent_lits = [l for l in body if has_prefix(l.atom.predicate, "true") and not l.negated]
        other = [l for l in body if not has_prefix(l.atom.predicate, "true")]
        if any(l.atom.predicate not in m.static_predicates and l.atom.predicate != "distinct"
               and l.atom.predicate not in m.static_db.rel for l in other):
            continue
        wanted = sorted({v for l in fluent_lits for v in l.atom.args if type(v) is Var},
                        key=lambda v: v.name)
        if not wanted:
            targets.append(frozenset(l.atom for l in fluent_lits))
            continue
        bound = {v for l in other if not l.negated and l.atom.predicate != "distinct"
                 for v in l.atom.args if type(v) is Var}
        if not set(wanted) <= bound:
            continue
        query = Rule(Atom("__target", tuple(wanted)), tuple(other))
        rows = run_plan(compile_rule(query), m.static_db)
        for row in sorted(set(rows)):
            sub = dict(zip(wanted, row))
            targets.append(frozenset(substitute_atom(l.atom, sub) for l in fluent_lits))
    return [t for t in dict.fromkeys(targets) if t]


def astar_solve(game, state: GameState, budget: SearchBudget, role=None, targets=None):
    """Shortest action sequence to a goal-100 state, or None within budget."""
    m = machine_for(game)
    if len(m.roles) != 1:
        raise UnsupportedGameError("A* needs a single-role game")
    role = m.roles[0] if role is None else role
    targets = goal_targets(m, role) if targets is None else targets
    if not targets:
        raise UnsupportedGameError("no ground target fluents derivable from goal rules")

    def h(fl):
        return min(len(t - fl) for t in targets)

    start = state.fluents
    deadline = None if budget.max_millis is None else time.perf_counter() + budget.max_millis / 1000
    limit = budget.max_playouts
    g_best = {start: 0}
    parent = {start: None}
    heap = [(h(start), 0, 0, start)]
    closed = set()
    counter = 0
    expanded = 0
    while heap:
        f, neg_g, _, fl = heapq.heappop(heap)
        if fl in closed:
            continue
        g = -neg_g
        info = m.info(fl)
        if info.goals[role] == 100:
            path = []
            while parent[fl] is not None:
                fl, act = parent[fl]
                path.append(act)
            return path[::-1]
        if (limit is not None and expanded >= limit) or (
                deadline is not None and time.perf_counter() >= deadline):
            return None
        closed.add(fl)
        expanded += 1
        if info.terminal:
            continue
        for joint in info.joint_moves:
            nxt = m.successor(info, joint)
            if nxt in closed:
                continue
            ng = g + 1
            if ng < g_best.get(nxt, math.inf):
                g_best[nxt] = ng
                parent[nxt] = (fl, joint[0])
                counter += 1
                heapq.heappush(heap, (ng + h(nxt), -ng, counter, nxt))
    return None


# -- players -----------------------------------------------------------------

class Player:
    kind = "abstract"

    def choose(self, game, state, role, rng):
        raise NotImplementedError


class RandomPlayer(Player):
    kind = "random"

    def choose(self, game, state, role, rng):
        m = machine_for(game)
        acts = m.info(state.fluents).legal[m.role_index[role]]
        return acts[rng.randrange(len(acts))]


class MctsPlayer(Player):
    kind = "mcts"

    def __init__(self, playouts=1000, millis=None, heuristics=None, move_cap=DEFAULT_MOVE_CAP,
                 derive=0, threshold=0.3):
        self.playouts = playouts
        self.millis = millis
        self.heuristics = heuristics
        self.move_cap = move_cap
        self.derive = derive
        self.threshold = threshold

    def choose(self, game, state, role, rng):
        if self.heuristics is None:
            self.heuristics = (derive_heuristics(game, self.derive, self.threshold, rng, self.move_cap)
                               if self.derive >= 2 else [])
        budget = SearchBudget(self.playouts, self.millis, rng.getrandbits(64))
        return mcts_choose(game, state, role, budget, self.heuristics, move_cap=self.move_cap)


class AStarPlayer(Player):
    """Plans once with A* and replays the plan, replanning if the state drifts."""

    kind = "astar"

    def __init__(self, expansions=200_000, millis=None, fallback=None):
        self.expansions = expansions
        self.millis = millis
        self.fallback = fallback or RandomPlayer()
        self._plan = None

    def choose(self, game, state, role, rng):
        m = machine_for(game)
        if self._plan is not None and self._plan[0] == state.fluents and self._plan[1]:
            action = self._plan[1][0]
        else:
            try:
                plan = astar_solve(m, state, SearchBudget(self.expansions, self.millis, 0), role)
            except UnsupportedGameError:
                plan = None
            if not plan:
                self._plan = None
                return self.fallback.choose(game, state, role, rng)
            action = plan[0]
            self._plan = (state.fluents, plan)
        rest = self._plan[1][1:]
        nxt = m.successor(m.info(state.fluents), (action,))
        self._plan = (nxt, rest)
        return action


class IntelligentPlayer(Player):
    """A* on single-role games with a derivable target, MCTS otherwise."""

    kind = "intelligent"

    def __init__(self, playouts=1000, millis=None, move_cap=DEFAULT_MOVE_CAP, expansions=200_000):
        self.mcts = MctsPlayer(playouts, millis, move_cap=move_cap)
        self.astar = AStarPlayer(expansions, millis, fallback=self.mcts)
        self._use_astar = None

    def choose(self, game, state, role, rng):
        if self._use_astar is None:
            m = machine_for(game)
            self._use_astar = len(m.roles) == 1 and bool(goal_targets(m, role))
        player = self.astar if self._use_astar else self.mcts
        return player.choose(game, state, role, rng)


PLAYER_KINDS = ("random", "mcts", "astar", "intelligent")


def make_player(kind: str, **kw) -> Player:
    if kind == "random":
        return RandomPlayer()
    if kind == "mcts":
        return MctsPlayer(**{k: v for k, v in kw.items()
                             if k in ("playouts", "millis", "move_cap", "derive", "threshold")})
    if kind == "astar":
        return AStarPlayer(**{k: v for k, v in kw.items() if k in ("expansions", "millis")})
    if kind == "intelligent":
        return IntelligentPlayer(**{k: v for k, v in kw.items()
                                    if k in ("playouts", "millis", "move_cap", "expansions")})
    raise ValueError(f"unknown player kind {kind!r}; choose from {', '.join(PLAYER_KINDS)}")
