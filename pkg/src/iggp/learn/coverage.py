"""Coverage of single rules over the training triples of one head predicate."""
from __future__ import annotations

from dataclasses import dataclass

from ..datalog import Database, compile_rule, run_plan
from ..exceptions import UnsafeRuleError


@dataclass(frozen=True)
class RuleCover:
    pos_bits: int
    pos: int
    neg: int


class Coverage:
    """Positive examples are bits; identical triples are merged with a weight."""

    def __init__(self, triples, head: str):
        self.head = head
        groups: dict = {}
        order = []
        for t in triples:
            key = (t.background, frozenset(a for a in t.positives if a.predicate == head),
                   frozenset(a for a in t.negatives if a.predicate == head))
            if key not in groups:
                groups[key] = 0
                order.append(key)
            groups[key] += 1
        self.dbs, self.pos, self.neg, self.weights = [], [], [], []
        self.bit_weight = []
        self.examples = []
        bit = 0
        for key in order:
            b, pos, neg = key
            self.dbs.append(Database.from_atoms(b))
            w = groups[key]
            self.weights.append(w)
            table = {}
            for a in sorted(pos, key=lambda a: a.args):
                table[a.args] = bit
                self.bit_weight.append(w)
                self.examples.append((len(self.dbs) - 1, a))
                bit += 1
            self.pos.append(table)
            self.neg.append(frozenset(a.args for a in neg))
        self.n_bits = bit
        self.full = (1 << bit) - 1
        self.total_pos = sum(self.bit_weight)
        self.total_neg = sum(len(n) * w for n, w in zip(self.neg, self.weights))
        base_bits, base_neg = 0, 0
        for i, db in enumerate(self.dbs):
            rows = db.relation(head)
            for args in rows:
                if args in self.pos[i]:
                    base_bits |= 1 << self.pos[i][args]
                elif args in self.neg[i]:
                    base_neg += self.weights[i]
        self.baseline = RuleCover(base_bits, self.weight(base_bits), base_neg)
        self.evaluations = 0
        self._cache: dict = {}

    def weight(self, bits: int) -> int:
        total = 0
        while bits:
            low = bits & -bits
            total += self.bit_weight[low.bit_length() - 1]
            bits ^= low
        return total

    def evaluate(self, rule, key=None) -> RuleCover | None:
        """Coverage of ``rule``; None when the rule cannot be compiled safely."""
        if key is not None and key in self._cache:
            return self._cache[key]
        try:
            plan = compile_rule(rule)
        except UnsafeRuleError:
            return None
        self.evaluations += 1
        bits, neg = 0, 0
        for i, db in enumerate(self.dbs):
            derived = run_plan(plan, db)
            if not derived:
                continue
            pos, negs = self.pos[i], self.neg[i]
            for args in set(derived):
                b = pos.get(args)
                if b is not None:
                    bits |= 1 << b
                elif args in negs:
                    neg += self.weights[i]
        out = RuleCover(bits, self.weight(bits), neg)
        if key is not None:
            self._cache[key] = out
        return out
