"""Logic-program syntax: terms, atoms, literals, rules and programs.

Constants are plain lower-case strings. Variables and compound terms are
small immutable classes so they can be told apart from constants cheaply.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Union


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __repr__(self) -> str:
        return f"{self.functor}({', '.join(map(repr, self.args))})"


Term = Union[str, Var, Compound]


class Atom(NamedTuple):
    predicate: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self) -> str:
        return to_prolog_atom(self)


class Literal(NamedTuple):
    atom: Atom
    negated: bool = False

    def __repr__(self) -> str:
        return ("not " if self.negated else "") + repr(self.atom)


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> set:
        out = set(term_vars(self.head.args))
        for lit in self.body:
            out.update(term_vars(lit.atom.args))
        return out

    def __repr__(self) -> str:
        return to_prolog_rule(self)


@dataclass(eq=False)
class Program:
    """An ordered list of rules; facts are rules with an empty body.

    ``flattening`` is set by :func:`iggp.parser.flatten` and records how
    flat predicate names map back onto nested terms.
    """

    rules: list = field(default_factory=list)
    flattening: object = None

    @property
    def predicate_signatures(self) -> dict:
        sig: dict = {}
        for atom in self.atoms():
            sig.setdefault(atom.predicate, atom.arity)
        return sig

    def atoms(self) -> Iterator[Atom]:
        for rule in self.rules:
            yield rule.head
            for lit in rule.body:
                yield lit.atom

    def facts(self) -> list:
        return [r.head for r in self.rules if r.is_fact]

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def structurally_equal(self, other: "Program") -> bool:
        return list(self.rules) == list(other.rules)


BUILTINS = frozenset({"distinct"})

RESERVED_ARITY = {
    "role": 1,
    "init": 1,
    "true": 1,
    "does": 2,
    "next": 1,
    "legal": 2,
    "goal": 2,
    "terminal": 0,
    "distinct": 2,
}


def is_var(term) -> bool:
    return type(term) is Var


def is_ground(term) -> bool:
    if type(term) is str:
        return True
    if type(term) is Var:
        return False
    return all(is_ground(a) for a in term.args)


def atom_is_ground(atom: Atom) -> bool:
    return all(is_ground(a) for a in atom.args)


def atom_is_flat(atom: Atom) -> bool:
    return all(type(a) is not Compound for a in atom.args)


def term_vars(terms: Iterable) -> Iterator[Var]:
    for t in terms:
        if type(t) is Var:
            yield t
        elif type(t) is Compound:
            yield from term_vars(t.args)


def substitute(term, theta: dict):
    if type(term) is Var:
        return theta.get(term, term)
    if type(term) is Compound:
        return Compound(term.functor, tuple(substitute(a, theta) for a in term.args))
    return term


def substitute_atom(atom: Atom, theta: dict) -> Atom:
    return Atom(atom.predicate, tuple(substitute(a, theta) for a in atom.args))


def sort_key(term):
    """Canonical ordering: integers numerically, then symbols, then compounds."""
    if type(term) is str:
        if term.isdigit():
            return (0, int(term), term)
        return (1, 0, term)
    if type(term) is Var:
        return (2, 0, term.name)
    return (3, term.functor, tuple(sort_key(a) for a in term.args))


def atom_sort_key(atom: Atom):
    return (atom.predicate, len(atom.args), tuple(sort_key(a) for a in atom.args))


def sorted_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms, key=atom_sort_key)


# -- rendering ---------------------------------------------------------------

def to_kif_term(term) -> str:
    if type(term) is Var:
        return "?" + term.name
    if type(term) is Compound:
        inner = " ".join(to_kif_term(a) for a in term.args)
        return f"({term.functor} {inner})" if inner else f"({term.functor})"
    return term


def to_kif_atom(atom: Atom) -> str:
    if not atom.args:
        return atom.predicate
    return "(" + " ".join([atom.predicate] + [to_kif_term(a) for a in atom.args]) + ")"


def to_kif_literal(lit: Literal) -> str:
    text = to_kif_atom(lit.atom)
    return f"(not {text})" if lit.negated else text


def to_kif_rule(rule: Rule) -> str:
    if rule.is_fact:
        return to_kif_atom(rule.head)
    parts = [to_kif_atom(rule.head)] + [to_kif_literal(l) for l in rule.body]
    return "(<= " + " ".join(parts) + ")"


def unparse(program: Program) -> str:
    """Canonical KIF text: one rule per line, single spaces, lower case."""
    return "".join(to_kif_rule(r) + "\n" for r in program.rules)


def _prolog_var(name: str) -> str:
    return name[:1].upper() + name[1:]


def to_prolog_term(term) -> str:
    if type(term) is Var:
        return _prolog_var(term.name)
    if type(term) is Compound:
        return f"{term.functor}({','.join(to_prolog_term(a) for a in term.args)})"
    return term


def to_prolog_atom(atom: Atom) -> str:
    if not atom.args:
        return atom.predicate
    return f"{atom.predicate}({','.join(to_prolog_term(a) for a in atom.args)})"


def to_prolog_rule(rule: Rule) -> str:
    head = to_prolog_atom(rule.head)
    if rule.is_fact:
        return head + "."
    body = ", ".join(("not " if l.negated else "") + to_prolog_atom(l.atom) for l in rule.body)
    return f"{head} :- {body}."


def render_prolog(rules: Iterable[Rule]) -> str:
    return "".join(to_prolog_rule(r) + "\n" for r in rules)
