"""Bottom-clause learning with a cover loop.

1. pick an uncovered positive example (the seed);
2. build the most specific clause for it from its own background;
3. search subsets of that clause's body, breadth first by length;
4. keep the best rule, drop the positives it covers, and repeat.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..logic import Atom, Literal, Rule, Var, sorted_atoms, sort_key
from ..parser import rule_is_safe
from .bias import Bias
from .canon import display_rule, rule_key
from .coverage import Coverage
from .hypothesis import Hypothesis


@dataclass
class BottomClause:
    head: Atom
    body: list

    def rule(self) -> Rule:
        return Rule(self.head, tuple(self.body))


def bottom_clause(seed: Atom, background, bias: Bias, depth: int | None = None,
                  static=frozenset()) -> BottomClause:
    """Lift the seed and every background atom reachable from its constants.

    A seed without arguments has no constants to start from, so the atoms
    outside ``static`` (those that vary between backgrounds) form the first
    layer instead.
    """
    if seed.predicate != bias.head or len(seed.args) != bias.head_arity:
        raise ValueError(f"seed {seed!r} does not match the bias head {bias.head}/{bias.head_arity}")
    depth = bias.depth if depth is None else depth
    by_const: dict = {}
    for a in sorted_atoms(background):
        if a.predicate == bias.head:
            continue
        for c in set(a.args):
            by_const.setdefault(c, []).append(a)
    chosen, picked = [], set()
    frontier = set(seed.args)
    if not seed.args:
        candidates = [a for a in sorted_atoms(background) if a.predicate != bias.head]
        first = [a for a in candidates if a not in static] or candidates
        chosen.extend(first)
        picked.update(first)
        frontier = {c for a in first for c in a.args}
        depth -= 1
    seen = set(frontier)
    for _ in range(max(depth + 1, 0)):
        layer = []
        for c in sorted(frontier, key=sort_key):
            for a in by_const.get(c, ()):
                if a not in picked:
                    picked.add(a)
                    layer.append(a)
        layer = sorted_atoms(layer)
        chosen.extend(layer)
        frontier = {c for a in layer for c in a.args} - seen
        seen |= frontier
        if not frontier or len(chosen) >= bias.max_bottom:
            break
    chosen = chosen[:bias.max_bottom]

    names: dict = {}

    def var(c):
        v = names.get(c)
        if v is None:
            v = names[c] = Var(f"v{len(names)}")
        return v

    lifted_consts = {c for a in chosen for i, c in enumerate(a.args)
                     if not bias.constant_mode(a.predicate, i)}
    head_args = tuple(var(c) if c in lifted_consts else c for c in seed.args)
    lifted = []
    for a in chosen:
        args = tuple(c if bias.constant_mode(a.predicate, i) else var(c)
                     for i, c in enumerate(a.args))
        lifted.append(Literal(Atom(a.predicate, args)))
    unique = list(dict.fromkeys(lifted))
    return BottomClause(Atom(seed.predicate, head_args), unique)


def generalize(bottom: BottomClause, coverage: Coverage, bias: Bias, budget: list,
               max_false_positives: int = 0, uncovered: int | None = None):
    """Best safe subset of the bottom clause body, or None.

    ``budget`` is a one-element list holding remaining evaluations; it is
    decremented in place so the cover loop can share it.
    """
    mask = coverage.full if uncovered is None else uncovered
    best = None
    clean: list = []
    lits = bottom.body
    for n in range(0, min(bias.max_body, len(lits)) + 1):
        for idx in itertools.combinations(range(len(lits)), n):
            s = frozenset(idx)
            if any(c <= s for c in clean):
                continue
            rule = Rule(bottom.head, tuple(lits[i] for i in idx))
            if not rule_is_safe(rule):
                continue
            if budget[0] <= 0:
                return best[2] if best else None
            budget[0] -= 1
            cov = coverage.evaluate(rule)
            if cov is None:
                continue
            if cov.neg == 0:
                clean.append(s)
            if cov.neg > max_false_positives or not (cov.pos_bits & mask):
                continue
            pos = coverage.weight(cov.pos_bits & mask)
            score = pos - cov.neg - 0.001 * n
            key = (-score, n, rule_key(rule))
            if best is None or key < best[0]:
                best = (key, cov, rule)
    return best[2] if best else None


def cover_loop(task, bias: Bias, budget: int, max_false_positives: int = 0,
               coverage: Coverage | None = None) -> Hypothesis:
    cov = coverage or Coverage(task.triples, bias.head)
    static = frozenset.intersection(*[t.background for t in task.triples]) if task.triples else frozenset()
    remaining = cov.full & ~cov.baseline.pos_bits
    rules = []
    left = [budget]
    while remaining and left[0] > 0:
        b = (remaining & -remaining).bit_length() - 1
        i, seed = cov.examples[b]
        bottom = bottom_clause(seed, cov.dbs[i].atoms(), bias, static=static)
        rule = generalize(bottom, cov, bias, left, max_false_positives, remaining)
        if rule is None:
            rule = Rule(seed, ())
        c = cov.evaluate(rule)
        covered = (c.pos_bits if c is not None else 0) | (1 << b)
        rules.append(display_rule(rule))
        remaining &= ~covered
    facts = []
    while remaining:
        b = (remaining & -remaining).bit_length() - 1
        facts.append(Rule(cov.examples[b][1], ()))
        remaining &= ~(1 << b)
    rules.extend(dict.fromkeys(facts))
    return Hypothesis(rules, learned=True)
