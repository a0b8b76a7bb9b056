"""Learned hypotheses, the default always-true hypothesis, and their files."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..datalog import evaluate_db
from ..logic import Program, render_prolog
from ..parser import parse_prolog

DEFAULT_MARKER = "% default hypothesis: true"
DEFAULT_PRED_MARKER = "% default predicate: "


@dataclass
class Hypothesis:
    """A rule set; predicates in ``defaulted`` (or all, if not learned) are taken as true."""

    rules: list = field(default_factory=list)
    learned: bool = True
    defaulted: frozenset = frozenset()

    @classmethod
    def default(cls) -> "Hypothesis":
        return cls([], learned=False)

    def is_default_for(self, predicate: str) -> bool:
        return not self.learned or predicate in self.defaulted

    def program(self) -> Program:
        return Program(list(self.rules))

    def model(self, background):
        return evaluate_db(self.program(), background)

    def entails(self, background, atom) -> bool:
        if self.is_default_for(atom.predicate):
            return True
        return atom in self.model(background)

    def classify(self, background, atoms) -> list:
        """Entailment of each atom over one background, sharing one model."""
        model = None
        out = []
        for a in atoms:
            if self.is_default_for(a.predicate):
                out.append(True)
                continue
            if model is None:
                model = self.model(background)
            out.append(a in model)
        return out

    def __len__(self):
        return len(self.rules)

    def to_text(self) -> str:
        lines = []
        if not self.learned:
            lines.append(DEFAULT_MARKER + "\n")
        for p in sorted(self.defaulted):
            lines.append(DEFAULT_PRED_MARKER + p + "\n")
        return "".join(lines) + render_prolog(self.rules)


def hypothesis_from_text(text: str) -> Hypothesis:
    learned = True
    defaulted = set()
    for line in text.splitlines():
        s = line.strip()
        if s == DEFAULT_MARKER:
            learned = False
        elif s.startswith(DEFAULT_PRED_MARKER):
            defaulted.add(s[len(DEFAULT_PRED_MARKER):].strip())
    return Hypothesis(parse_prolog(text).rules, learned, frozenset(defaulted))


def write_hypothesis(h: Hypothesis, path) -> None:
    Path(path).write_text(h.to_text(), encoding="utf-8")


def read_hypothesis(path) -> Hypothesis:
    return hypothesis_from_text(Path(path).read_text(encoding="utf-8"))
