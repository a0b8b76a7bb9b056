"""Stratified Datalog with negation.

Rules are compiled into join plans (body literals reordered so each one is
bound-safe when reached) and evaluated stratum by stratum with semi-naive
iteration. Ground facts live in a :class:`Database`, a map from predicate to
a set of argument tuples with lazily built hash indexes.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import networkx as nx

from .exceptions import UnsafeRuleError, UnstratifiableError
from .logic import BUILTINS, Atom, Program, Rule, Var

POS, CHK, NEG, NEQ, EQ = range(5)


@dataclass
class Stratification:
    stratum_of: dict

    def __getitem__(self, predicate):
        return self.stratum_of[predicate]

    @property
    def depth(self) -> int:
        return 1 + max(self.stratum_of.values(), default=-1)

    def strata(self) -> list:
        out = [set() for _ in range(self.depth)]
        for p, s in self.stratum_of.items():
            out[s].add(p)
        return out


def dependency_graph(program: Program) -> nx.DiGraph:
    """Edges run from body predicate to head predicate; ``negative`` marks negation."""
    g = nx.DiGraph()
    for rule in program.rules:
        h = rule.head.predicate
        g.add_node(h)
        for lit in rule.body:
            q = lit.atom.predicate
            if q in BUILTINS:
                continue
            if g.has_edge(q, h):
                g[q][h]["negative"] |= lit.negated
            else:
                g.add_edge(q, h, negative=lit.negated)
    return g


def stratify(program: Program) -> Stratification:
    """Lowest legal stratum per predicate; raises on a cycle through negation."""
    g = dependency_graph(program)
    cond = nx.condensation(g)
    member_of = cond.graph["mapping"]
    for u, v, data in g.edges(data=True):
        if data["negative"] and member_of[u] == member_of[v]:
            path = nx.shortest_path(g, v, u)
            raise UnstratifiableError(path + [v])
    level: dict = {}
    for c in nx.topological_sort(cond):
        lvl = 0
        for m in cond.nodes[c]["members"]:
            for p in g.predecessors(m):
                pc = member_of[p]
                if pc != c:
                    lvl = max(lvl, level[pc] + (1 if g[p][m]["negative"] else 0))
        level[c] = lvl
    return Stratification({p: level[member_of[p]] for p in g.nodes})


class Database:
    """Ground facts by predicate, with hash indexes built on demand."""

    __slots__ = ("rel", "_idx")

    def __init__(self, rel=None):
        self.rel = rel if rel is not None else {}
        self._idx = {}

    @classmethod
    def from_atoms(cls, atoms) -> "Database":
        rel: dict = {}
        for a in atoms:
            rel.setdefault(a.predicate, set()).add(a.args)
        return cls(rel)

    def copy(self) -> "Database":
        return Database({p: set(s) for p, s in self.rel.items()})

    def add(self, pred, args) -> bool:
        s = self.rel.get(pred)
        if s is None:
            s = self.rel[pred] = set()
        elif args in s:
            return False
        s.add(args)
        idxs = self._idx.get(pred)
        if idxs:
            for keypos, table in idxs.items():
                key = tuple([args[i] for i in keypos])
                bucket = table.get(key)
                if bucket is None:
                    table[key] = [args]
                else:
                    bucket.append(args)
        return True

    def add_atoms(self, atoms):
        for a in atoms:
            self.add(a.predicate, a.args)

    def contains(self, pred, args) -> bool:
        s = self.rel.get(pred)
        return s is not None and args in s

    def __contains__(self, atom) -> bool:
        return self.contains(atom.predicate, atom.args)

    def relation(self, pred):
        return self.rel.get(pred, ())

    def index(self, pred, keypos):
        idxs = self._idx.get(pred)
        if idxs is None:
            idxs = self._idx[pred] = {}
        table = idxs.get(keypos)
        if table is None:
            table = {}
            for args in self.rel.get(pred, ()):
                key = tuple([args[i] for i in keypos])
                bucket = table.get(key)
                if bucket is None:
                    table[key] = [args]
                else:
                    bucket.append(args)
            idxs[keypos] = table
        return table

    def atoms(self) -> set:
        return {Atom(p, args) for p, s in self.rel.items() for args in s}

    def __len__(self):
        return sum(len(s) for s in self.rel.values())

    def __bool__(self):
        return any(self.rel.values())


# -- compilation -------------------------------------------------------------

class Plan:
    __slots__ = ("rule", "steps", "head_pred", "head", "nslots", "uses_delta")

    def __init__(self, rule, steps, head, nslots, uses_delta):
        self.rule = rule
        self.steps = steps
        self.head_pred = rule.head.predicate
        self.head = head
        self.nslots = nslots
        self.uses_delta = uses_delta


def _order_body(body, first=None):
    """Greedy bound-safe ordering; ties broken by source order."""
    bound: set = set()
    remaining = list(range(len(body)))
    order = []

    def is_filter(lit):
        return lit.negated or lit.atom.predicate in BUILTINS

    def vars_of(lit):
        return {a for a in lit.atom.args if type(a) is Var}

    def take(i):
        remaining.remove(i)
        order.append(i)
        bound.update(vars_of(body[i]))

    if first is not None:
        take(first)
    while remaining:
        ready = [i for i in remaining if is_filter(body[i]) and vars_of(body[i]) <= bound]
        if ready:
            take(ready[0])
            continue
        best, best_score = None, -1
        for i in remaining:
            lit = body[i]
            if is_filter(lit):
                continue
            score = sum(1 for a in lit.atom.args if type(a) is not Var or a in bound)
            if score > best_score:
                best, best_score = i, score
        if best is None:
            raise UnsafeRuleError(f"unsafe rule {rule_text(body)}: filter literal never bound")
        take(best)
    return order


def rule_text(body):
    return ", ".join(repr(l) for l in body)


def compile_rule(rule: Rule, delta_index=None) -> Plan:
    """Compile a rule into a join plan.

    With ``delta_index`` set, that body literal is evaluated first and reads
    from the delta relation (semi-naive iteration).
    """
    for a in rule.head.args:
        if type(a) not in (str, Var):
            raise UnsafeRuleError(f"non-flat head in {rule!r}")
    order = _order_body(rule.body, delta_index)
    slots: dict = {}
    steps = []
    for i in order:
        lit = rule.body[i]
        atom = lit.atom
        for a in atom.args:
            if type(a) not in (str, Var):
                raise UnsafeRuleError(f"non-flat literal {atom!r}; flatten the program first")
        pred = atom.predicate
        if lit.negated or pred in BUILTINS:
            spec = []
            for a in atom.args:
                if type(a) is Var:
                    if a not in slots:
                        raise UnsafeRuleError(f"unsafe variable ?{a.name} in {rule!r}")
                    spec.append((False, slots[a]))
                else:
                    spec.append((True, a))
            if pred == "distinct":
                if len(spec) != 2:
                    raise UnsafeRuleError("distinct takes two arguments")
                steps.append((EQ if lit.negated else NEQ, pred, tuple(spec)))
            else:
                steps.append((NEG, pred, tuple(spec)))
            continue
        keyspec, assign, dup = [], [], []
        local: dict = {}
        for pos, a in enumerate(atom.args):
            if type(a) is Var:
                if a in slots:
                    keyspec.append((pos, False, slots[a]))
                elif a in local:
                    dup.append((pos, local[a][1]))
                else:
                    local[a] = (len(slots) + len(local), pos)
                    assign.append((pos, local[a][0]))
            else:
                keyspec.append((pos, True, a))
        slots.update((v, s) for v, (s, _) in local.items())
        if not assign and not dup:
            steps.append((CHK, pred, tuple((c, v) for _, c, v in keyspec)))
        else:
            steps.append((POS, pred, tuple(keyspec), tuple(assign), tuple(dup)))
    head = []
    for a in rule.head.args:
        if type(a) is Var:
            if a not in slots:
                raise UnsafeRuleError(f"unsafe head variable ?{a.name} in {rule!r}")
            head.append((False, slots[a]))
        else:
            head.append((True, a))
    return Plan(rule, tuple(steps), tuple(head), len(slots), delta_index is not None)


def run_plan(plan: Plan, db: Database, delta: Database | None = None) -> list:
    """All head argument tuples produced by one pass of ``plan``."""
    envs = [[None] * plan.nslots]
    for n, step in enumerate(plan.steps):
        src = delta if (n == 0 and plan.uses_delta) else db
        kind = step[0]
        if kind == POS:
            _, pred, keyspec, assign, dup = step
            new = []
            if keyspec:
                keypos = tuple([k[0] for k in keyspec])
                table = src.index(pred, keypos)
                for env in envs:
                    key = tuple([v if c else env[v] for _, c, v in keyspec])
                    rows = table.get(key)
                    if not rows:
                        continue
                    for t in rows:
                        if dup and any(t[p] != t[q] for p, q in dup):
                            continue
                        e = env[:]
                        for p, s in assign:
                            e[s] = t[p]
                        new.append(e)
            else:
                rows = src.rel.get(pred)
                if rows:
                    for env in envs:
                        for t in rows:
                            if dup and any(t[p] != t[q] for p, q in dup):
                                continue
                            e = env[:]
                            for p, s in assign:
                                e[s] = t[p]
                            new.append(e)
            envs = new
        elif kind == CHK:
            pred, spec = step[1], step[2]
            rel = src.rel.get(pred)
            if not rel:
                return []
            envs = [env for env in envs
                    if tuple([v if c else env[v] for c, v in spec]) in rel]
        elif kind == NEG:
            pred, spec = step[1], step[2]
            rel = db.rel.get(pred)
            if rel:
                envs = [env for env in envs
                        if tuple([v if c else env[v] for c, v in spec]) not in rel]
        else:
            (c1, v1), (c2, v2) = step[2]
            if kind == NEQ:
                envs = [env for env in envs
                        if (v1 if c1 else env[v1]) != (v2 if c2 else env[v2])]
            else:
                envs = [env for env in envs
                        if (v1 if c1 else env[v1]) == (v2 if c2 else env[v2])]
        if not envs:
            return []
    head = plan.head
    return [tuple([v if c else env[v] for c, v in head]) for env in envs]


class CompiledProgram:
    """A program split into strata of join plans, reusable across fact sets."""

    def __init__(self, program: Program, stratification: Stratification | None = None):
        self.program = program
        self.facts = []
        rules = []
        for rule in program.rules:
            if rule.is_fact:
                if any(type(a) is not str for a in rule.head.args):
                    raise UnsafeRuleError(f"non-ground fact {rule!r}")
                self.facts.append(rule.head)
            else:
                rules.append(rule)
        self.stratification = stratification or stratify(program)
        by_stratum: dict = {}
        for rule in rules:
            by_stratum.setdefault(self.stratification[rule.head.predicate], []).append(rule)
        self.strata = []
        for s in sorted(by_stratum):
            srules = by_stratum[s]
            heads = {r.head.predicate for r in srules}
            full = [compile_rule(r) for r in srules]
            delta = []
            for r in srules:
                for j, lit in enumerate(r.body):
                    if not lit.negated and lit.atom.predicate in heads:
                        delta.append((lit.atom.predicate, compile_rule(r, j)))
            self.strata.append((full, delta))

    def run(self, db: Database) -> Database:
        for atom in self.facts:
            db.add(atom.predicate, atom.args)
        for full, delta_plans in self.strata:
            delta = Database()
            for plan in full:
                pred = plan.head_pred
                for args in run_plan(plan, db):
                    if db.add(pred, args):
                        delta.add(pred, args)
            while delta_plans and delta:
                new = Database()
                for dpred, plan in delta_plans:
                    if not delta.rel.get(dpred):
                        continue
                    pred = plan.head_pred
                    for args in run_plan(plan, db, delta):
                        if not db.contains(pred, args):
                            new.add(pred, args)
                for pred, rows in new.rel.items():
                    for args in rows:
                        db.add(pred, args)
                delta = new
        return db


_COMPILED = weakref.WeakKeyDictionary()


def compiled(program: Program) -> CompiledProgram:
    snapshot = tuple(program.rules)
    hit = _COMPILED.get(program)
    if hit is not None and hit[0] == snapshot:
        return hit[1]
    cp = CompiledProgram(program)
    _COMPILED[program] = (snapshot, cp)
    return cp


def evaluate(program: Program, facts) -> set:
    """The perfect model of ``program`` over ``facts`` (input atoms included)."""
    db = Database.from_atoms(facts)
    compiled(program).run(db)
    return db.atoms()


def evaluate_db(program: Program, facts) -> Database:
    db = facts.copy() if isinstance(facts, Database) else Database.from_atoms(facts)
    return compiled(program).run(db)


def entails(program: Program, facts, query: Atom) -> bool:
    if any(type(a) is not str for a in query.args):
        raise ValueError(f"query must be ground and flat: {query!r}")
    return query in evaluate_db(program, facts)
