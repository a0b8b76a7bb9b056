"""Matches, trace logs, and the transformation of traces into IGGP tasks.

A match is logged as five sequences (states, roles, moves, legal moves and
goal values). For learning, roles are folded into the atoms as an extra
first argument, each target predicate family gets its own list of
(background, positives) pairs, and negatives are the target's pool minus
the positives.
"""
from __future__ import annotations

import itertools
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import GdlSyntaxError, TaskFormatError
from .logic import Atom, Compound, Var, sort_key, sorted_atoms, to_prolog_atom, to_prolog_term
from .machine import GameState, has_prefix, machine_for, rename_family
from .parser import FlatteningMap, parse_prolog_atom, parse_prolog_term
from .players import DEFAULT_MOVE_CAP, Player, make_player

log = logging.getLogger(__name__)

TARGETS = ("goal", "next", "legal", "terminal")
COMPOSITION = {"goal": "triples1", "terminal": "triples1", "next": "triples2", "legal": "triples2"}
_FAMILIES = ("init", "true", "next", "does", "legal", "goal", "terminal")


@dataclass(frozen=True)
class Clocks:
    start_millis: int = 30_000
    play_millis: int = 15_000


@dataclass
class MatchTrace:
    game: str
    roles: tuple
    states: list
    moves: list
    legals: list
    goals: list
    final_terminal: bool = False
    move_cap: int = DEFAULT_MOVE_CAP
    seed: int | None = None
    players: tuple = ()
    clock_violations: list = field(default_factory=list)
    missing_goals: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def source(self) -> str:
        return "random" if all(p == "random" for p in self.players) else "intelligent"

    def check(self):
        n = self.n
        if n < 1 or len(self.moves) != n - 1 or len(self.legals) != n or len(self.goals) != n:
            raise ValueError("trace sequence lengths are inconsistent")
        for i, joint in enumerate(self.moves):
            for a, acts in zip(joint, self.legals[i]):
                if a not in acts:
                    raise ValueError(f"move {a!r} at step {i} is not among the logged legal moves")
        for g in self.goals:
            if any(not 0 <= v <= 100 for v in g):
                raise ValueError("goal value outside [0,100]")
        if not self.final_terminal and n - 1 != self.move_cap:
            raise ValueError("trace ends before the move cap on a non-terminal state")


def _fresh_player(spec):
    if isinstance(spec, Player):
        return spec
    if isinstance(spec, tuple):
        kind, opts = spec
        return make_player(kind, **opts)
    return make_player(spec)


def run_match(game, players, move_cap: int = DEFAULT_MOVE_CAP, clocks: Clocks | None = None,
              rng=None, seed: int | None = None, game_id: str = "game",
              player_options: dict | None = None) -> MatchTrace:
    """Play one match and log the five sequences.

    ``players`` is a kind name for every role, a list in role order, or a
    map from role to kind (or player object). A player overrunning the
    play clock has its move replaced by a random legal one.
    """
    if move_cap < 1:
        raise ValueError("move_cap must be at least 1")
    m = machine_for(game)
    clocks = clocks or Clocks()
    if rng is None:
        rng = random.Random(seed)
    opts = player_options or {}
    if isinstance(players, (str, Player)):
        players = {r: players for r in m.roles}
    elif not isinstance(players, dict):
        players = dict(zip(m.roles, players))
    kinds, agents, rngs = [], [], []
    for r in m.roles:
        spec = players[r]
        if isinstance(spec, str):
            kinds.append(spec)
            agents.append(make_player(spec, move_cap=move_cap, **opts))
        else:
            kinds.append(getattr(spec, "kind", "custom"))
            agents.append(_fresh_player(spec))
        rngs.append(random.Random(rng.getrandbits(64)))
    state = m.initial_state()
    states, moves, legals, goals, missing, violations = [], [], [], [], [], []
    while True:
        info = m.info(state.fluents)
        states.append(state)
        legals.append(info.legal)
        goals.append(tuple(info.goals[r] for r in m.roles))
        missing.append(info.goals.missing)
        if info.terminal or state.step >= move_cap:
            break
        joint = []
        for i, r in enumerate(m.roles):
            acts = info.legal[i]
            if not acts:
                raise ValueError(f"role {r} has no legal move at step {state.step}")
            if len(acts) == 1:
                joint.append(acts[0])
                continue
            t0 = time.perf_counter()
            a = agents[i].choose(m, state, r, rngs[i])
            spent = (time.perf_counter() - t0) * 1000
            if spent > clocks.play_millis or a not in acts:
                violations.append((state.step, r, round(spent)))
                log.warning("clock violation by %s at step %d; playing a random move", r, state.step)
                a = acts[rngs[i].randrange(len(acts))]
            joint.append(a)
        joint = tuple(joint)
        moves.append(joint)
        state = m.next_state(state, joint)
    return MatchTrace(game_id, m.roles, states, moves, legals, goals,
                      final_terminal=m.info(state.fluents).terminal, move_cap=move_cap,
                      seed=seed, players=tuple(kinds), clock_violations=violations,
                      missing_goals=missing)


def match_seeds(seed: int, count: int) -> list:
    """Independent 64-bit seeds per match index."""
    if count <= 0:
        return []
    return [int(s.generate_state(1, dtype=np.uint64)[0])
            for s in np.random.SeedSequence(seed).spawn(count)]


def _trace_job(args):
    game_name, game_text, kind, seed, cap, opts = args
    from .parser import parse_program
    prog = parse_program(game_text)
    return run_match(prog, kind, move_cap=cap, seed=seed, game_id=game_name, player_options=opts)


def generate_traces(game, game_id: str, kind: str, count: int, seed: int,
                    move_cap: int = DEFAULT_MOVE_CAP, jobs: int = 1, player_options=None,
                    game_text: str | None = None) -> list:
    """``count`` matches with every role played by ``kind``, seeded per match."""
    seeds = match_seeds(seed, count)
    opts = player_options or {}
    if jobs > 1 and game_text is not None and count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_trace_job, [(game_id, game_text, kind, s, move_cap, opts)
                                            for s in seeds]))
    return [run_match(game, kind, move_cap=move_cap, seed=s, game_id=game_id, player_options=opts)
            for s in seeds]


# -- role flattening and substitution ----------------------------------------

def role_action(role, action) -> Atom:
    """Insert the role as first argument: move(2,2) by black -> move(black,2,2)."""
    if type(action) is Compound:
        return Atom(action.functor, (role,) + action.args)
    return Atom(action, (role,))


def wrap_action(atom: Atom, family: str, fmap) -> Atom:
    """move(black,2,2) -> <family>_move(black,2,2), with noop(x) -> <family>(x,noop)."""
    role = atom.args[0]
    action = atom.predicate if len(atom.args) == 1 else Compound(atom.predicate, atom.args[1:])
    return fmap.flatten_atom(Atom(family, (role, action)))


@dataclass
class FlatTrace:
    states: list
    moves: list
    legals: list
    goals: list
    final_terminal: bool
    fmap: object = None


def flatten_roles(trace: MatchTrace, fmap=None) -> FlatTrace:
    moves = [frozenset(role_action(r, a) for r, a in zip(trace.roles, joint)) for joint in trace.moves]
    legals = [frozenset(role_action(r, a) for r, acts in zip(trace.roles, step) for a in acts)
              for step in trace.legals]
    goals = []
    for i, g in enumerate(trace.goals):
        skip = trace.missing_goals[i] if i < len(trace.missing_goals) else frozenset()
        goals.append(frozenset(Atom("goal", (r, str(v))) for r, v in zip(trace.roles, g)
                               if r not in skip))
    return FlatTrace([s.fluents for s in trace.states], moves, legals, goals,
                     trace.final_terminal, fmap or FlatteningMap())


def substitute_pred(s, p: str, q: str) -> frozenset:
    """S[p/q]: rename predicate q (and q_*) to p (and p_*)."""
    return frozenset(Atom(rename_family(a.predicate, q, p), a.args) if has_prefix(a.predicate, q)
                     else a for a in s)


def build_lambda(flat: FlatTrace, target: str) -> list:
    n = len(flat.states)
    if target == "legal":
        return [(flat.states[i],
                 substitute_pred(frozenset(wrap_action(a, "true", flat.fmap) for a in flat.legals[i]),
                                 "legal", "true"))
                for i in range(n)]
    if target == "goal":
        return [(flat.states[i], flat.goals[i]) for i in range(n)]
    if target == "next":
        return [(flat.states[i] | frozenset(wrap_action(a, "does", flat.fmap) for a in flat.moves[i]),
                 substitute_pred(flat.states[i + 1], "next", "true"))
                for i in range(n - 1)]
    if target == "terminal":
        pairs = [(flat.states[i], frozenset()) for i in range(n - 1)]
        last = frozenset({Atom("terminal", ())}) if flat.final_terminal else frozenset()
        pairs.append((flat.states[n - 1], last))
        return pairs
    raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")


# -- signatures and pools ----------------------------------------------------

class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if sort_key(str(rb)) < sort_key(str(ra)):
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass
class DomainSignature:
    """Per predicate, the constant set for each argument position."""

    arity: dict
    domains: dict

    def positions(self, pred) -> tuple:
        return self.domains.get(pred, ())

    def pool(self, pred) -> frozenset:
        arity = self.arity.get(pred)
        if arity is None:
            return frozenset()
        if arity == 0:
            return frozenset({Atom(pred, ())})
        doms = [sorted(d, key=sort_key) for d in self.domains[pred]]
        return frozenset(Atom(pred, t) for t in itertools.product(*doms))

    def covers(self, atom: Atom) -> bool:
        doms = self.domains.get(atom.predicate)
        if doms is None or len(doms) != len(atom.args):
            return False
        return all(a in d for a, d in zip(atom.args, doms))


def static_facts(program) -> frozenset:
    out = set()
    for r in program.rules:
        if r.is_fact and not any(has_prefix(r.head.predicate, f) for f in _FAMILIES):
            if all(type(a) is str for a in r.head.args):
                out.add(r.head)
    return frozenset(out)


def _mirror_key(pred):
    for fam, group in (("init", "fluent"), ("true", "fluent"), ("next", "fluent"),
                       ("does", "action"), ("legal", "action")):
        if has_prefix(pred, fam):
            return group, pred[len(fam):]
    return None


def infer_signatures(game, flats, extra_atoms=()) -> DomainSignature:
    """Union-find over argument positions, with domains from traces and the game."""
    m = machine_for(game)
    program = m.program
    uf = _UnionFind()
    arity: dict = {}
    consts: dict = {}

    def see(atom: Atom, constants=True):
        arity.setdefault(atom.predicate, len(atom.args))
        for i, a in enumerate(atom.args):
            node = (atom.predicate, i)
            uf.find(node)
            if constants and type(a) is str:
                consts.setdefault(node, set()).add(a)

    for rule in program.rules:
        see(rule.head)
        where: dict = {}
        for atom in [rule.head] + [lit.atom for lit in rule.body]:
            if atom.predicate == "distinct":
                continue
            see(atom)
            for i, a in enumerate(atom.args):
                if type(a) is Var:
                    where.setdefault(a, []).append((atom.predicate, i))
        for occ in where.values():
            for other in occ[1:]:
                uf.union(occ[0], other)

    for flat in flats:
        for seq in (flat.states, flat.goals):
            for s in seq:
                for a in s:
                    see(a)
        for seq, fam in ((flat.moves, "does"), (flat.legals, "legal")):
            for s in seq:
                for a in s:
                    see(wrap_action(a, fam, flat.fmap))
        for s in flat.states:
            for a in substitute_pred(s, "next", "true"):
                see(a)
    for a in extra_atoms:
        see(a)

    by_mirror: dict = {}
    for pred, n in arity.items():
        key = _mirror_key(pred)
        if key is not None:
            by_mirror.setdefault((key, n), []).append(pred)
    for preds in by_mirror.values():
        for p in preds[1:]:
            for i in range(arity[p]):
                uf.union((preds[0], i), (p, i))
    if "role" in arity:
        for pred, n in arity.items():
            if n and (has_prefix(pred, "does") or has_prefix(pred, "legal") or pred == "goal"):
                uf.union(("role", 0), (pred, 0))

    domain_of: dict = {}
    for node, cs in consts.items():
        domain_of.setdefault(uf.find(node), set()).update(cs)
    domains = {}
    for pred, n in arity.items():
        domains[pred] = tuple(frozenset(domain_of.get(uf.find((pred, i)), ())) for i in range(n))
    return DomainSignature(arity, domains)


def target_predicates(sig: DomainSignature, target: str) -> list:
    return sorted(p for p in sig.arity if has_prefix(p, target) and (target != "terminal" or p == "terminal"))


@dataclass(frozen=True)
class InductionTriple:
    background: frozenset
    positives: frozenset
    negatives: frozenset


def build_triples(pairs, pool) -> list:
    """(B, E+) -> (B, E+, pool - E+); positives outside the pool join it."""
    pool = frozenset(pool)
    out = []
    for b, pos in pairs:
        extra = pos - pool
        if extra:
            log.warning("%d positive atoms missing from the pool; adding them", len(extra))
            pool = pool | extra
        out.append(InductionTriple(frozenset(b), frozenset(pos), pool - pos))
    return out


@dataclass
class IggpTask:
    game: str
    target: str
    triples: list
    pools: dict
    composition: str = ""
    provenance: list = field(default_factory=list)
    types: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def pool(self) -> frozenset:
        out = frozenset()
        for p in self.pools.values():
            out |= p
        return out

    @property
    def head_predicates(self) -> list:
        return sorted(self.pools)

    def subtask(self, predicate: str) -> "IggpTask":
        """The same triples restricted to one flat target predicate."""

        def keep(s):
            return frozenset(a for a in s if a.predicate == predicate)

        triples = [InductionTriple(t.background, keep(t.positives), keep(t.negatives))
                   for t in self.triples]
        return IggpTask(self.game, self.target, triples,
                        {predicate: self.pools.get(predicate, frozenset())}, self.composition,
                        list(self.provenance), dict(self.types), dict(self.metadata),
                        list(self.warnings))

    def split(self, indices) -> "IggpTask":
        idx = list(indices)
        return IggpTask(self.game, self.target, [self.triples[i] for i in idx], dict(self.pools),
                        self.composition, [self.provenance[i] for i in idx] if self.provenance else [],
                        dict(self.types), dict(self.metadata), list(self.warnings))

    def __len__(self):
        return len(self.triples)

    def check(self):
        for i, t in enumerate(self.triples):
            if t.positives & t.negatives:
                raise ValueError(f"triple {i}: positives and negatives overlap")
            if not (t.positives | t.negatives) <= self.pool:
                raise ValueError(f"triple {i}: examples outside the pool")
            for a in t.background | t.positives | t.negatives:
                if any(type(x) is not str for x in a.args):
                    raise ValueError(f"triple {i}: atom {a!r} is not ground and flat")


def build_task(game, traces, target: str, signature: DomainSignature | None = None,
               game_id: str | None = None) -> IggpTask:
    """Assemble the IGGP task for one target from matches of ``game``."""
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    m = machine_for(game)
    flats = [flatten_roles(t, m.fmap) for t in traces]
    sig = signature or infer_signatures(m, flats, static_facts(m.program))
    statics = static_facts(m.program)
    pairs, prov = [], []
    for k, (trace, flat) in enumerate(zip(traces, flats)):
        for step, pair in enumerate(build_lambda(flat, target)):
            pairs.append(pair)
            prov.append({"trace": k, "step": step, "source": trace.source,
                         "seed": trace.seed})
    observed = set()
    for _, pos in pairs:
        observed.update(a.predicate for a in pos)
    warnings = []
    pools = {}
    preds = set(target_predicates(sig, target)) | observed
    if target == "terminal":
        preds.add("terminal")
        sig.arity.setdefault("terminal", 0)
    for p in sorted(preds):
        if p in observed or (target == "terminal" and p == "terminal"):
            pools[p] = sig.pool(p)
        else:
            warnings.append(f"predicate {p} never observed; empty pool")
            log.warning("predicate %s never observed in the traces; its pool is empty", p)
            pools[p] = frozenset()
    for _, pos in pairs:
        for p in pools:
            extra = frozenset(a for a in pos if a.predicate == p) - pools[p]
            if extra:
                warnings.append(f"{len(extra)} positives of {p} outside the pool")
                log.warning("%d positives of %s outside the inferred pool; adding them", len(extra), p)
                pools[p] = pools[p] | extra
    pool = frozenset().union(*pools.values())
    triples = build_triples([(b | statics, pos) for b, pos in pairs], pool)
    types = {p: sig.domains[p] for p in sig.domains}
    meta = {"move_cap": traces[0].move_cap, "traces": len(traces),
            "sources": ",".join(sorted({t.source for t in traces}))}
    return IggpTask(game_id or traces[0].game, target, triples, pools, COMPOSITION[target], prov,
                    types, meta, warnings)


class TaskBuilder(TransformerMixin, BaseEstimator):
    """Transformer from match traces to an IGGP task.

    ``fit`` infers the domain signature from the traces it sees, so train
    and test tasks built by one fitted builder share their pools.
    """

    def __init__(self, game=None, target: str = "next"):
        self.game = game
        self.target = target

    def fit(self, traces, y=None):
        if self.game is None:
            raise ValueError("TaskBuilder needs a game")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        traces = list(traces)
        if not traces:
            raise ValueError("need at least one trace")
        m = machine_for(self.game)
        flats = [flatten_roles(t, m.fmap) for t in traces]
        self.signature_ = infer_signatures(m, flats, static_facts(m.program))
        self.n_traces_ = len(traces)
        return self

    def transform(self, traces):
        if not hasattr(self, "signature_"):
            raise ValueError("TaskBuilder is not fitted")
        return build_task(self.game, traces, self.target, self.signature_)


# -- trace files -------------------------------------------------------------

def write_trace(trace: MatchTrace, path) -> None:
    lines = [f"game {trace.game}", f"seed {trace.seed if trace.seed is not None else '-'}",
             f"players {' '.join(trace.players)}", f"cap {trace.move_cap}",
             f"terminal {'yes' if trace.final_terminal else 'no'}",
             f"roles {' '.join(trace.roles)}", f"states {trace.n}"]
    for i, s in enumerate(trace.states):
        lines.append(" ".join([str(i)] + [to_prolog_atom(a) for a in sorted_atoms(s.fluents)]))
    lines.append(f"moves {len(trace.moves)}")
    for i, joint in enumerate(trace.moves):
        lines.append(" ".join([str(i)] + [to_prolog_term(a) for a in joint]))
    lines.append(f"legals {len(trace.legals)}")
    for i, step in enumerate(trace.legals):
        lines.append(" | ".join([str(i)] + [" ".join(to_prolog_term(a) for a in acts) for acts in step]))
    lines.append(f"goals {len(trace.goals)}")
    for i, g in enumerate(trace.goals):
        miss = trace.missing_goals[i] if i < len(trace.missing_goals) else frozenset()
        lines.append(" ".join([str(i)] + [f"{v}?" if r in miss else str(v)
                                          for r, v in zip(trace.roles, g)]))
    if trace.clock_violations:
        lines.append(f"violations {len(trace.clock_violations)}")
        for step, role, ms in trace.clock_violations:
            lines.append(f"{step} {role} {ms}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace(path) -> MatchTrace:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise TaskFormatError(f"cannot read trace: {e}", path) from e
    head: dict = {}
    sections: dict = {}
    i = 0

    def bad(msg, ln):
        raise TaskFormatError(msg, path, ln + 1)

    while i < len(raw):
        line = raw[i]
        if not line.strip():
            i += 1
            continue
        key, _, rest = line.partition(" ")
        if key in ("states", "moves", "legals", "goals", "violations"):
            try:
                count = int(rest)
            except ValueError:
                bad(f"bad section count {rest!r}", i)
            body = raw[i + 1:i + 1 + count]
            if len(body) != count:
                bad(f"section {key} is truncated", i)
            sections[key] = (i + 1, body)
            i += 1 + count
        else:
            head[key] = rest
            i += 1
    for need in ("game", "roles", "states", "moves", "legals", "goals"):
        if need not in head and need not in sections:
            raise TaskFormatError(f"missing section {need!r}", path)
    roles = tuple(head["roles"].split())

    def items(key):
        start, body = sections[key]
        for k, line in enumerate(body):
            parts = line.split(" ", 1)
            if not parts[0].isdigit() or int(parts[0]) != k:
                bad(f"expected step index {k}", start + k)
            yield start + k, (parts[1] if len(parts) > 1 else "")

    def term(text, ln):
        try:
            return parse_prolog_term(text)
        except GdlSyntaxError as e:
            bad(f"malformed term {text!r}: {e}", ln)

    states = []
    for k, (ln, rest) in enumerate(items("states")):
        atoms = []
        for tok in rest.split():
            try:
                atoms.append(parse_prolog_atom(tok))
            except GdlSyntaxError as e:
                bad(f"malformed atom {tok!r}: {e}", ln)
        states.append(GameState(frozenset(atoms), k))
    moves = [tuple(term(t, ln) for t in rest.split()) for ln, rest in items("moves")]
    legals = []
    for ln, rest in items("legals"):
        parts = rest.split(" | ") if rest else []
        if rest.startswith("| "):
            parts = rest[2:].split(" | ")
        legals.append(tuple(tuple(term(t, ln) for t in p.split()) for p in parts))
    goals, missing = [], []
    for ln, rest in items("goals"):
        vals, miss = [], set()
        for r, tok in zip(roles, rest.split()):
            if tok.endswith("?"):
                miss.add(r)
                tok = tok[:-1]
            if not tok.isdigit():
                bad(f"bad goal value {tok!r}", ln)
            vals.append(int(tok))
        goals.append(tuple(vals))
        missing.append(frozenset(miss))
    violations = []
    if "violations" in sections:
        for line in sections["violations"][1]:
            s, r, ms = line.split()
            violations.append((int(s), r, int(ms)))
    seed = head.get("seed", "-")
    return MatchTrace(head["game"], roles, states, moves, legals, goals,
                      final_terminal=head.get("terminal", "no") == "yes",
                      move_cap=int(head.get("cap", DEFAULT_MOVE_CAP)),
                      seed=None if seed == "-" else int(seed),
                      players=tuple(head.get("players", "").split()),
                      clock_violations=violations, missing_goals=missing)


# -- task directories --------------------------------------------------------

def _fact_lines(atoms) -> str:
    return "".join(to_prolog_atom(a) + ".\n" for a in sorted_atoms(atoms))


def serialize_task(task: IggpTask, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, t in enumerate(task.triples):
        (d / f"background_{i}.pl").write_text(_fact_lines(t.background), encoding="utf-8")
        (d / f"pos_{i}.pl").write_text(_fact_lines(t.positives), encoding="utf-8")
        (d / f"neg_{i}.pl").write_text(_fact_lines(t.negatives), encoding="utf-8")
    man = [f"game {task.game}", f"target {task.target}", f"composition {task.composition}",
           f"triples {len(task.triples)}"]
    for k in sorted(task.metadata):
        man.append(f"meta {k} {task.metadata[k]}")
    for i, p in enumerate(task.provenance):
        man.append(f"provenance {i} " + " ".join(f"{k}={p[k]}" for k in sorted(p)))
    for w in task.warnings:
        man.append(f"warning {w}")
    (d / "manifest").write_text("\n".join(man) + "\n", encoding="utf-8")
    pool_lines = []
    for p in sorted(task.pools):
        pool_lines.append(f"% pool {p}\n")
        pool_lines.append(_fact_lines(task.pools[p]))
    (d / "pools.pl").write_text("".join(pool_lines), encoding="utf-8")
    sig = []
    for p in sorted(task.types):
        doms = task.types[p]
        cols = ["{" + ",".join(sorted(dom, key=sort_key)) + "}" for dom in doms]
        sig.append(f"{p}/{len(doms)} " + " ".join(cols))
    (d / "signature").write_text("".join(s.rstrip() + "\n" for s in sig), encoding="utf-8")
    return d


def _read_facts(path: Path) -> frozenset:
    out = []
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        try:
            atom = parse_prolog_atom(line)
        except GdlSyntaxError as e:
            raise TaskFormatError(f"malformed fact line {line!r}: {e}", path, ln + 1) from e
        if not line.endswith(".") or any(type(a) is not str for a in atom.args):
            raise TaskFormatError(f"expected a ground flat fact ending in '.': {line!r}", path, ln + 1)
        out.append(atom)
    return frozenset(out)


def _parse_value(text: str):
    if text == "None":
        return None
    if text.lstrip("-").isdigit():
        return int(text)
    return text


def parse_task(directory) -> IggpTask:
    d = Path(directory)
    manifest = d / "manifest"
    if not manifest.is_file():
        raise TaskFormatError("missing manifest", manifest)
    head, meta, prov, warns = {}, {}, [], []
    for ln, line in enumerate(manifest.read_text(encoding="utf-8").splitlines()):
        key, _, rest = line.partition(" ")
        if key == "meta":
            k, _, v = rest.partition(" ")
            meta[k] = _parse_value(v)
        elif key == "provenance":
            idx, _, fields_ = rest.partition(" ")
            entry = {}
            for f in fields_.split():
                k, _, v = f.partition("=")
                entry[k] = _parse_value(v)
            prov.append(entry)
        elif key == "warning":
            warns.append(rest)
        elif key:
            head[key] = rest
    for need in ("game", "target", "triples"):
        if need not in head:
            raise TaskFormatError(f"manifest lacks {need!r}", manifest)
    n = int(head["triples"])
    triples = []
    for i in range(n):
        parts = []
        for stem in ("background", "pos", "neg"):
            f = d / f"{stem}_{i}.pl"
            if not f.is_file():
                raise TaskFormatError(f"missing {f.name}", f)
            parts.append(_read_facts(f))
        triples.append(InductionTriple(*parts))
    pools: dict = {}
    pool_file = d / "pools.pl"
    if pool_file.is_file():
        current = None
        for ln, line in enumerate(pool_file.read_text(encoding="utf-8").splitlines()):
            if line.startswith("% pool "):
                current = line[len("% pool "):].strip()
                pools[current] = set()
            elif line.strip():
                if current is None:
                    raise TaskFormatError("pool fact before a pool header", pool_file, ln + 1)
                try:
                    pools[current].add(parse_prolog_atom(line.strip()))
                except GdlSyntaxError as e:
                    raise TaskFormatError(f"malformed pool line: {e}", pool_file, ln + 1) from e
    pools = {p: frozenset(s) for p, s in pools.items()}
    types = {}
    sig_file = d / "signature"
    if sig_file.is_file():
        for ln, line in enumerate(sig_file.read_text(encoding="utf-8").splitlines()):
            if not line.strip():
                continue
            name, *cols = line.split(" ")
            pred, _, ar = name.rpartition("/")
            if len(cols) != int(ar):
                raise TaskFormatError("signature arity mismatch", sig_file, ln + 1)
            types[pred] = tuple(frozenset(c.strip("{}").split(",")) - {""} for c in cols)
    return IggpTask(head["game"], head["target"], triples, pools, head.get("composition", ""),
                    prov, types, meta, warns)
