"""Length-bounded hypothesis enumeration.

Rules are enumerated per body length over the bias vocabulary and
deduplicated by canonical form. Hypotheses are sets of rules searched by
increasing total size (sum over rules of one plus body length). A rule that
covers any negative can never appear in a solution, because hypotheses are
non-recursive and the coverage of a rule set is the union of its rules'
coverage.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..datalog import evaluate_db
from ..exceptions import EnumerationOverflowError
from ..logic import Atom, Literal, Program, Rule, Var
from .bias import Bias
from .canon import canonical, display_rule
from .coverage import Coverage
from .hypothesis import Hypothesis

DEFAULT_MAX_RULES = 200_000
DFS_NODE_LIMIT = 200_000


def _head_variants(bias: Bias):
    options = []
    for i in range(bias.head_arity):
        opts = [None]
        if bias.head_constant_mode(i):
            opts += bias.constants(bias.type_of(bias.head, i))
        options.append(opts)
    for combo in itertools.product(*options):
        args, vars_ = [], []
        for i, c in enumerate(combo):
            if c is None:
                v = Var(f"v{len(vars_)}")
                vars_.append((v, bias.type_of(bias.head, i)))
                args.append(v)
            else:
                args.append(c)
        yield Atom(bias.head, tuple(args)), vars_


def _literal_options(bias: Bias, pred, arity, vars_, negated):
    """All argument fillings for one literal given the variables so far."""
    per_pos = []
    for i in range(arity):
        t = bias.type_of(pred, i)
        opts = [("old", v) for v, vt in vars_ if vt == t]
        opts.append(("new", t))
        if not negated and bias.constant_mode(pred, i):
            opts += [("const", c) for c in bias.constants(t)]
        per_pos.append(opts)
    for combo in itertools.product(*per_pos):
        args, new_vars = [], []
        n = len(vars_)
        for kind, val in combo:
            if kind == "old":
                args.append(val)
            elif kind == "new":
                v = Var(f"v{n + len(new_vars)}")
                new_vars.append((v, val))
                args.append(v)
            else:
                args.append(val)
        yield tuple(args), new_vars


def _acceptable(rule: Rule, bias: Bias) -> bool:
    pos_vars = {a for l in rule.body if not l.negated for a in l.atom.args if type(a) is Var}
    for a in rule.head.args:
        if type(a) is Var and a not in pos_vars:
            return False
    for l in rule.body:
        if l.negated and any(type(a) is Var and a not in pos_vars for a in l.atom.args):
            return False
    if not bias.allow_singletons:
        counts: dict = {}
        for atom in [rule.head] + [l.atom for l in rule.body]:
            for a in atom.args:
                if type(a) is Var:
                    counts[a] = counts.get(a, 0) + 1
        if any(c == 1 for c in counts.values()):
            return False
    return len(set(rule.body)) == len(rule.body)


def enumerate_rules(bias: Bias, length: int, max_rules: int = DEFAULT_MAX_RULES) -> list:
    """Every acceptable rule with exactly ``length`` body literals, canonical order."""
    if length < 0:
        raise ValueError("length must be non-negative")
    if length > bias.max_body:
        raise ValueError(f"length {length} exceeds the bias maximum {bias.max_body}")
    preds = sorted(bias.body.items())
    literal_kinds = [(p, a, False) for p, a in preds]
    if bias.allow_negation:
        literal_kinds += [(p, a, True) for p, a in preds]
    literal_kinds.sort(key=lambda k: (k[0], k[2]))
    out: dict = {}

    def extend(head, body, vars_, start):
        if len(body) == length:
            rule = Rule(head, tuple(body))
            if _acceptable(rule, bias):
                key, canon_rule = canonical(rule)
                if key not in out:
                    out[key] = canon_rule
                    if len(out) > max_rules:
                        raise EnumerationOverflowError(
                            f"more than {max_rules} rules of body length {length}")
            return
        for k in range(start, len(literal_kinds)):
            pred, arity, neg = literal_kinds[k]
            for args, new_vars in _literal_options(bias, pred, arity, vars_, neg):
                if len(vars_) + len(new_vars) > bias.max_vars:
                    continue
                body.append(Literal(Atom(pred, args), neg))
                extend(head, body, vars_ + new_vars, k)
                body.pop()

    for head, hvars in _head_variants(bias):
        if len(hvars) > bias.max_vars:
            continue
        extend(head, [], hvars, 0)
    return [out[k] for k in sorted(out)]


@dataclass
class _Candidate:
    size: int
    key: tuple
    rule: Rule
    bits: int


def _search(cands, full, start_bits, n, k, nodes):
    """First set of exactly ``k`` candidates with total size ``n`` covering ``full``."""

    def dfs(chosen, covered, size_left, k_left):
        nodes[0] += 1
        if nodes[0] > DFS_NODE_LIMIT:
            return None
        if covered == full:
            return list(chosen) if size_left == 0 and k_left == 0 else None
        if k_left == 0 or size_left <= 0:
            return None
        missing = full & ~covered
        low = missing & -missing
        for c in cands:
            if c.size > size_left - (k_left - 1):
                continue
            if not c.bits & low:
                continue
            if k_left == 1 and (c.size != size_left or (covered | c.bits) != full):
                continue
            chosen.append(c)
            found = dfs(chosen, covered | c.bits, size_left - c.size, k_left - 1)
            chosen.pop()
            if found is not None:
                return found
        return None

    return dfs([], start_bits, n, k)


def verify(rules, triples, head) -> bool:
    prog = Program(list(rules))
    for t in triples:
        model = evaluate_db(prog, t.background)
        for a in t.positives:
            if a.predicate == head and a not in model:
                return False
        for a in t.negatives:
            if a.predicate == head and a in model:
                return False
    return True


def learn_enumerative(task, bias: Bias, budget: int, max_size: int | None = None,
                      max_rules: int = DEFAULT_MAX_RULES) -> Hypothesis:
    """Smallest rule set consistent with every training triple, by iterative deepening."""
    cov = Coverage(task.triples, bias.head)
    result, _ = _enumerative(cov, task.triples, bias, budget, max_size, max_rules)
    return result


def _enumerative(cov, triples, bias, budget, max_size, max_rules):
    max_size = max_size if max_size is not None else 2 * (bias.max_body + 1)
    if cov.baseline.neg:
        return Hypothesis.default(), cov.evaluations
    if cov.baseline.pos_bits == cov.full:
        return Hypothesis([]), cov.evaluations
    cands: list = []
    seen_bits: dict = {}
    nodes = [0]
    for n in range(1, max_size + 1):
        body_len = n - 1
        if body_len <= bias.max_body:
            try:
                rules = enumerate_rules(bias, body_len, max_rules)
            except EnumerationOverflowError:
                return Hypothesis.default(), cov.evaluations
            for rule in rules:
                if cov.evaluations >= budget:
                    return Hypothesis.default(), cov.evaluations
                c = cov.evaluate(rule)
                if c is None or c.neg or not (c.pos_bits & ~cov.baseline.pos_bits):
                    continue
                if c.pos_bits in seen_bits:
                    continue
                cand = _Candidate(1 + len(rule.body), canonical(rule)[0], rule, c.pos_bits)
                seen_bits[c.pos_bits] = cand
                cands.append(cand)
            cands.sort(key=lambda c: (c.size, c.key))
        union = cov.baseline.pos_bits
        for c in cands:
            union |= c.bits
        if union != cov.full:
            continue
        for k in range(1, n + 1):
            nodes[0] = 0
            found = _search(cands, cov.full, cov.baseline.pos_bits, n, k, nodes)
            if found is not None:
                rules = [display_rule(c.rule) for c in found]
                if verify(rules, triples, bias.head):
                    return Hypothesis(rules), cov.evaluations
    return Hypothesis.default(), cov.evaluations
