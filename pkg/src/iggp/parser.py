"""GDL (KIF) and Prolog-style parsing, function-symbol flattening, validation."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .exceptions import FlattenError, GdlSyntaxError
from .logic import (
    BUILTINS,
    RESERVED_ARITY,
    Atom,
    Compound,
    Literal,
    Program,
    Rule,
    Var,
    substitute_atom,
    term_vars,
)

# -- KIF ---------------------------------------------------------------------


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


def _tokenize_kif(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    out = []
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            out.append(_Tok(ch, line, col))
            i += 1
            col += 1
            continue
        start, scol = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        out.append(_Tok(text[start:i], line, scol))
    return out


def _read_sexprs(tokens):
    """Group tokens into nested lists; each list remembers its opening token."""
    stack = [[]]
    opens = []
    for tok in tokens:
        if tok.text == "(":
            opens.append(tok)
            stack.append([])
        elif tok.text == ")":
            if not opens:
                raise GdlSyntaxError("unbalanced ')'", tok.line, tok.col)
            opener = opens.pop()
            items = stack.pop()
            stack[-1].append((opener, items))
        else:
            stack[-1].append(tok)
    if opens:
        tok = opens[-1]
        raise GdlSyntaxError("unclosed '('", tok.line, tok.col)
    return stack[0]


def _pos(node):
    tok = node[0] if isinstance(node, tuple) else node
    return tok.line, tok.col


def _symbol(tok: _Tok, what: str) -> str:
    text = tok.text.lower()
    if text.startswith("?"):
        raise GdlSyntaxError(f"variable used as {what}", tok.line, tok.col)
    if text == "<=":
        raise GdlSyntaxError(f"'<=' used as {what}", tok.line, tok.col)
    return text


def _kif_term(node):
    if isinstance(node, _Tok):
        text = node.text.lower()
        if text.startswith("?"):
            if len(text) == 1:
                raise GdlSyntaxError("empty variable name", node.line, node.col)
            return Var(text[1:])
        return text
    opener, items = node
    if not items:
        raise GdlSyntaxError("empty term '()'", opener.line, opener.col)
    if not isinstance(items[0], _Tok):
        raise GdlSyntaxError("function symbol must be a symbol", *_pos(items[0]))
    functor = _symbol(items[0], "function symbol")
    return Compound(functor, tuple(_kif_term(x) for x in items[1:]))


def _kif_atom(node) -> Atom:
    if isinstance(node, _Tok):
        return Atom(_symbol(node, "predicate symbol"), ())
    opener, items = node
    if not items:
        raise GdlSyntaxError("empty atom '()'", opener.line, opener.col)
    if not isinstance(items[0], _Tok):
        raise GdlSyntaxError("predicate must be a symbol", *_pos(items[0]))
    pred = _symbol(items[0], "predicate symbol")
    return Atom(pred, tuple(_kif_term(x) for x in items[1:]))


def _head_of(node):
    if isinstance(node, tuple) and node[1] and isinstance(node[1][0], _Tok):
        return node[1][0].text.lower()
    return None


def _kif_literals(node):
    """Return a list of alternatives, each a list of literals (``or`` expands)."""
    head = _head_of(node)
    if head == "not":
        opener, items = node
        if len(items) != 2:
            raise GdlSyntaxError("'not' takes exactly one argument", opener.line, opener.col)
        inner = _head_of(items[1])
        if inner in ("not", "or"):
            raise GdlSyntaxError(f"'{inner}' inside 'not' is not supported", *_pos(items[1]))
        return [[Literal(_kif_atom(items[1]), True)]]
    if head == "or":
        opener, items = node
        if len(items) < 2:
            raise GdlSyntaxError("'or' needs at least one disjunct", opener.line, opener.col)
        return [alt for sub in items[1:] for alt in _kif_literals(sub)]
    return [[Literal(_kif_atom(node), False)]]


def parse_program(text) -> Program:
    """Parse GDL/KIF text into a Program; rules keep source order.

    ``or`` in rule bodies is expanded into one rule per disjunct.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GdlSyntaxError(f"input is not valid UTF-8 (byte {exc.start})") from None
    rules = []
    for node in _read_sexprs(_tokenize_kif(text)):
        if _head_of(node) == "<=":
            opener, items = node
            if len(items) < 3:
                raise GdlSyntaxError("'<=' needs a head and at least one body literal",
                                     opener.line, opener.col)
            head = _kif_atom(items[1])
            alternatives = [[]]
            for sub in items[2:]:
                options = _kif_literals(sub)
                alternatives = [a + o for a in alternatives for o in options]
            for body in alternatives:
                rules.append(Rule(head, tuple(body)))
        else:
            if _head_of(node) in ("not", "or"):
                raise GdlSyntaxError("a fact cannot be a connective", *_pos(node))
            rules.append(Rule(_kif_atom(node), ()))
    return Program(rules)


# -- Prolog-style ------------------------------------------------------------

_PL_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>%[^\n]*)|(?P<neck>:-)|(?P<naf>\\\+)"
    r"|(?P<punct>[(),.])|(?P<name>[A-Za-z0-9_][A-Za-z0-9_\-]*)"
)


def _tokenize_prolog(text: str):
    line, col_base = 1, 0
    out = []
    pos = 0
    while pos < len(text):
        m = _PL_TOKEN.match(text, pos)
        if m is None:
            raise GdlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - col_base + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            col_base = m.end()
        elif kind not in ("ws", "comment"):
            out.append((kind, m.group(), line, m.start() - col_base + 1))
        pos = m.end()
    out.append(("eof", "", line, pos - col_base + 1))
    return out


class _PrologReader:
    def __init__(self, text: str):
        self.toks = _tokenize_prolog(text)
        self.i = 0
        self._anon = itertools.count()

    def peek(self):
        return self.toks[self.i]

    def take(self, text=None):
        tok = self.toks[self.i]
        if text is not None and tok[1] != text:
            raise GdlSyntaxError(f"expected {text!r}, found {tok[1] or 'end of input'!r}",
                                 tok[2], tok[3])
        if tok[0] != "eof":
            self.i += 1
        return tok

    def at_end(self):
        return self.peek()[0] == "eof"

    def term(self):
        kind, text, line, col = self.take()
        if kind != "name":
            raise GdlSyntaxError(f"expected a term, found {text or 'end of input'!r}", line, col)
        if text[0] == "_" and text == "_":
            return Var(f"_{next(self._anon)}")
        if text[0].isupper() or text[0] == "_":
            return Var(text.lower())
        if self.peek()[1] == "(":
            self.take("(")
            args = [self.term()]
            while self.peek()[1] == ",":
                self.take(",")
                args.append(self.term())
            self.take(")")
            return Compound(text.lower(), tuple(args))
        return text.lower()

    def atom(self) -> Atom:
        kind, text, line, col = self.peek()
        t = self.term()
        if isinstance(t, Var):
            raise GdlSyntaxError("variable used as predicate symbol", line, col)
        if isinstance(t, Compound):
            return Atom(t.functor, t.args)
        return Atom(t, ())

    def literal(self) -> Literal:
        kind, text, line, col = self.peek()
        if kind == "naf":
            self.take()
            return Literal(self.atom(), True)
        if text == "not":
            nxt = self.toks[self.i + 1]
            if nxt[0] == "name":
                self.take()
                return Literal(self.atom(), True)
            if nxt[1] == "(":
                self.take()
                self.take("(")
                atom = self.atom()
                self.take(")")
                return Literal(atom, True)
        return Literal(self.atom(), False)

    def clause(self) -> Rule:
        head = self.atom()
        body = []
        if self.peek()[0] == "neck":
            self.take()
            body.append(self.literal())
            while self.peek()[1] == ",":
                self.take(",")
                body.append(self.literal())
        self.take(".")
        return Rule(head, tuple(body))


def parse_prolog(text: str) -> Program:
    reader = _PrologReader(text)
    rules = []
    while not reader.at_end():
        rules.append(reader.clause())
    return Program(rules)


def parse_prolog_atom(text: str) -> Atom:
    """Parse one atom, with or without a trailing period."""
    reader = _PrologReader(text)
    atom = reader.atom()
    if reader.peek()[1] == ".":
        reader.take(".")
    if not reader.at_end():
        _, tok, line, col = reader.peek()
        raise GdlSyntaxError(f"trailing input {tok!r}", line, col)
    return atom


def parse_prolog_term(text: str):
    reader = _PrologReader(text)
    term = reader.term()
    if not reader.at_end():
        _, tok, line, col = reader.peek()
        raise GdlSyntaxError(f"trailing input {tok!r}", line, col)
    return term


# -- flattening --------------------------------------------------------------

class FlatteningMap:
    """Records flat name -> (base, position, functor, functor arity)."""

    def __init__(self):
        self.origin: dict = {}
        self.arity: dict = {}

    def copy(self) -> "FlatteningMap":
        other = FlatteningMap()
        other.origin = dict(self.origin)
        other.arity = dict(self.arity)
        return other

    def _register(self, name, base, position, functor, farity, arity):
        known = self.arity.get(name)
        if known is not None and known != arity:
            raise FlattenError(
                f"flattened name {name!r} would have arity {arity} but already has arity {known}")
        self.origin.setdefault(name, (base, position, functor, farity))
        self.arity[name] = arity

    def flatten_term(self, term):
        if type(term) is not Compound:
            return term
        return self._flatten_parts(term.functor, term.args, Compound)

    def flatten_atom(self, atom: Atom) -> Atom:
        return self._flatten_parts(atom.predicate, atom.args, Atom)

    def _flatten_parts(self, name, args, ctor):
        args = [self.flatten_term(a) for a in args]
        if not any(type(a) is Compound for a in args):
            return ctor(name, tuple(args))
        out = []
        for i, a in enumerate(args):
            if type(a) is Compound:
                new = f"{name}_{a.functor}"
                arity = len(out) + len(a.args) + (len(args) - i - 1)
                self._register(new, name, len(out), a.functor, len(a.args), arity)
                name = new
                out.extend(a.args)
            else:
                out.append(a)
        return ctor(name, tuple(out))

    def unflatten_atom(self, atom: Atom) -> Atom:
        name, args = self._unflatten_parts(atom.predicate, atom.args)
        return Atom(name, args)

    def unflatten_term(self, term):
        if type(term) is not Compound:
            return term
        name, args = self._unflatten_parts(term.functor, term.args)
        return Compound(name, args)

    def _unflatten_parts(self, name, args):
        args = tuple(args)
        while name in self.origin:
            base, pos, functor, farity = self.origin[name]
            if pos + farity > len(args):
                break
            inner = self.unflatten_term(Compound(functor, args[pos:pos + farity]))
            args = args[:pos] + (inner,) + args[pos + farity:]
            name = base
        return name, args


_SHARED_POSITIONS = {("init", 0): "fluent", ("true", 0): "fluent", ("next", 0): "fluent",
                     ("does", 1): "action", ("legal", 1): "action"}


def _group(pred, pos):
    return _SHARED_POSITIONS.get((pred, pos), (pred, pos))


def _shape_table(program: Program):
    shapes: dict = {}
    consts: set = set()
    for atom in program.atoms():
        for i, a in enumerate(atom.args):
            g = _group(atom.predicate, i)
            if type(a) is Compound:
                shapes.setdefault(g, set()).add((a.functor, len(a.args)))
            elif type(a) is str:
                consts.add(g)
    return shapes, consts


def _specializations(rule: Rule, shapes, consts):
    """Instantiate variables that stand for whole compound terms."""
    groups: dict = {}
    for atom in [rule.head] + [l.atom for l in rule.body]:
        for i, a in enumerate(atom.args):
            if type(a) is Var and _group(atom.predicate, i) in shapes:
                groups.setdefault(a, set()).add(_group(atom.predicate, i))
    if not groups:
        return [rule]
    taken = {v.name for v in rule.variables()}
    choices = []
    order = sorted(groups, key=lambda v: v.name)
    for v in order:
        opts = sorted(set().union(*(shapes[g] for g in groups[v])))
        options = []
        for functor, farity in opts:
            fresh = []
            for k in range(farity):
                name = f"{v.name}{k + 1}"
                while name in taken:
                    name += "_"
                taken.add(name)
                fresh.append(Var(name))
            options.append(Compound(functor, tuple(fresh)))
        if any(g in consts for g in groups[v]):
            options.append(v)
        choices.append(options)
    out = []
    for combo in itertools.product(*choices):
        theta = {v: c for v, c in zip(order, combo) if c != v}
        head = substitute_atom(rule.head, theta)
        body = tuple(Literal(substitute_atom(l.atom, theta), l.negated) for l in rule.body)
        out.append(Rule(head, body))
    return out


def flatten(program: Program) -> Program:
    """Rewrite p(.., f(a1..ak), ..) as p_f(.., a1..ak, ..) everywhere.

    Variables occupying a position that elsewhere holds compound terms are
    specialised to each observed compound shape first, so generic rules such
    as ``(<= (next ?f) (true ?f))`` survive flattening.
    """
    fmap = program.flattening.copy() if program.flattening is not None else FlatteningMap()
    shapes, consts = _shape_table(program)
    rules = []
    for rule in program.rules:
        for r in _specializations(rule, shapes, consts):
            head = fmap.flatten_atom(r.head)
            body = tuple(Literal(fmap.flatten_atom(l.atom), l.negated) for l in r.body)
            rules.append(Rule(head, body))
    flat = Program(rules, flattening=fmap)
    original = {}
    for atom in program.atoms():
        if all(type(a) is not Compound for a in atom.args):
            original.setdefault(atom.predicate, atom.arity)
    for name, arity in fmap.arity.items():
        if name in original and original[name] != arity:
            raise FlattenError(
                f"flattened predicate {name!r}/{arity} collides with existing "
                f"{name}/{original[name]}")
    return flat


def flatten_atom(atom: Atom, fmap: FlatteningMap | None = None) -> Atom:
    return (fmap or FlatteningMap()).flatten_atom(atom)


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    rule_index: int
    message: str

    def __str__(self):
        return f"rule {self.rule_index}: {self.kind}: {self.message}"


def rule_is_safe(rule: Rule) -> bool:
    return not _unsafe_vars(rule)


def _unsafe_vars(rule: Rule):
    bound = set()
    for lit in rule.body:
        if not lit.negated and lit.atom.predicate not in BUILTINS:
            bound.update(term_vars(lit.atom.args))
    need = set(term_vars(rule.head.args))
    for lit in rule.body:
        if lit.negated or lit.atom.predicate in BUILTINS:
            need.update(term_vars(lit.atom.args))
    return sorted((v.name for v in need - bound))


def validate(program: Program) -> list:
    """Return every safety, reserved-arity, reserved-head and arity violation."""
    found = []
    arities: dict = {}
    for idx, rule in enumerate(program.rules):
        unsafe = _unsafe_vars(rule)
        if unsafe:
            found.append(Violation("unsafe", idx,
                                   "variables not bound by a positive literal: "
                                   + ", ".join("?" + v for v in unsafe)))
        if rule.head.predicate in ("true", "does", "distinct"):
            found.append(Violation("reserved-head", idx,
                                   f"{rule.head.predicate}/{rule.head.arity} cannot be defined"))
        for atom in [rule.head] + [l.atom for l in rule.body]:
            expected = RESERVED_ARITY.get(atom.predicate)
            if expected is not None and atom.arity != expected:
                found.append(Violation("reserved-arity", idx,
                                       f"{atom.predicate} has arity {atom.arity}, "
                                       f"expected {expected}"))
            first = arities.setdefault(atom.predicate, (atom.arity, idx))
            if first[0] != atom.arity:
                found.append(Violation("arity-conflict", idx,
                                       f"{atom.predicate} used with arity {atom.arity} "
                                       f"(first seen with {first[0]} in rule {first[1]})"))
    return found
