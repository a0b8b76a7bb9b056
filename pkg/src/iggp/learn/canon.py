"""Canonical rule forms: variable renaming and body order quotiented out."""
from __future__ import annotations

import itertools

from ..logic import Atom, Literal, Rule, Var, to_prolog_rule

MAX_PERMUTED = 5


def _rename(head, body):
    names: dict = {}

    def term(t):
        if type(t) is Var:
            v = names.get(t)
            if v is None:
                v = names[t] = Var(f"v{len(names)}")
            return v
        return t

    h = Atom(head.predicate, tuple(term(a) for a in head.args))
    b = tuple(Literal(Atom(l.atom.predicate, tuple(term(a) for a in l.atom.args)), l.negated)
              for l in body)
    return Rule(h, b)


def canonical(rule: Rule) -> tuple:
    """(key, rule) where alpha-equivalent, reordered rules share the key."""
    body = list(rule.body)
    if len(body) <= MAX_PERMUTED:
        perms = itertools.permutations(body)
    else:
        perms = [sorted(body, key=lambda l: (l.atom.predicate, l.negated, repr(l.atom.args)))]
    best = None
    for perm in perms:
        r = _rename(rule.head, perm)
        k = to_prolog_rule(r)
        if best is None or (len(r.body), k) < best[0]:
            best = ((len(r.body), k), r)
    return best


def rule_key(rule: Rule):
    return canonical(rule)[0]


def display_rule(rule: Rule) -> Rule:
    """Canonical rule with upper-case-friendly variable names (A, B, ...)."""
    r = canonical(rule)[1]
    letters = {}

    def name(i):
        s = ""
        i += 1
        while i:
            i, rem = divmod(i - 1, 26)
            s = chr(ord("a") + rem) + s
        return s

    def term(t):
        if type(t) is Var:
            if t not in letters:
                letters[t] = Var(name(len(letters)))
            return letters[t]
        return t

    h = Atom(r.head.predicate, tuple(term(a) for a in r.head.args))
    b = tuple(Literal(Atom(l.atom.predicate, tuple(term(a) for a in l.atom.args)), l.negated)
              for l in r.body)
    return Rule(h, b)
