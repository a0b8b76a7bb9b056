"""Language bias inferred from a task: determinations, types and modes."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..logic import sort_key


@dataclass
class Bias:
    head: str
    head_arity: int
    body: dict                       # predicate -> arity (determinations)
    types: dict = field(default_factory=dict)   # predicate -> tuple of type ids
    domains: dict = field(default_factory=dict)  # type id -> sorted constants
    max_body: int = 3
    allow_negation: bool = False
    max_vars: int = 5
    depth: int = 2
    const_limit: int = 12
    allow_singletons: bool = False
    max_bottom: int = 20

    def type_of(self, pred, pos):
        t = self.types.get(pred)
        if t is None or pos >= len(t):
            return ("untyped", pred, pos)
        return t[pos]

    @property
    def head_types(self) -> frozenset:
        return frozenset(self.type_of(self.head, i) for i in range(self.head_arity))

    def constants(self, type_id) -> list:
        return self.domains.get(type_id, [])

    def constant_mode(self, pred, pos) -> bool:
        """Whether a body position may hold constants rather than variables."""
        t = self.type_of(pred, pos)
        if t in self.head_types:
            return False
        dom = self.domains.get(t)
        return dom is not None and 0 < len(dom) <= self.const_limit

    def head_constant_mode(self, pos) -> bool:
        dom = self.domains.get(self.type_of(self.head, pos))
        return dom is not None and 0 < len(dom) <= self.const_limit

    @classmethod
    def from_task(cls, task, head: str, **kw) -> "Bias":
        """Determinations pair the head with every background predicate.

        A position's type is its inferred constant domain, so positions with
        equal domains may share variables.
        """
        body: dict = {}
        observed: dict = {}
        head_arity = None
        for t in task.triples:
            for a in t.background:
                if a.predicate != head:
                    body.setdefault(a.predicate, len(a.args))
                    for i, c in enumerate(a.args):
                        observed.setdefault((a.predicate, i), set()).add(c)
            for a in t.positives | t.negatives:
                if a.predicate == head:
                    head_arity = len(a.args)
                    for i, c in enumerate(a.args):
                        observed.setdefault((a.predicate, i), set()).add(c)
        if head_arity is None:
            pool = task.pools.get(head, ())
            head_arity = next((len(a.args) for a in pool), None)
        if head_arity is None:
            sig = task.types.get(head)
            head_arity = len(sig) if sig is not None else 0
        types, domains = {}, {}
        for pred, arity in list(body.items()) + [(head, head_arity)]:
            sig = task.types.get(pred)
            ids = []
            for i in range(arity):
                if sig is not None and i < len(sig) and sig[i]:
                    dom = frozenset(sig[i])
                else:
                    dom = frozenset(observed.get((pred, i), ()))
                ids.append(dom)
                domains[dom] = sorted(dom, key=sort_key)
            types[pred] = tuple(ids)
        return cls(head, head_arity, dict(sorted(body.items())), types, domains, **kw)
