"""Estimator wrappers: fit on an IGGP task, predict its examples."""
from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator

from ..logic import sorted_atoms
from .aleph import cover_loop
from .bias import Bias
from .coverage import Coverage
from .enumerate import DEFAULT_MAX_RULES, _enumerative
from .hypothesis import Hypothesis

log = logging.getLogger(__name__)


def task_examples(task):
    """(triple index, atom, label) in canonical order: triples, then sorted atoms."""
    out = []
    for i, t in enumerate(task.triples):
        for a in sorted_atoms(t.positives | t.negatives):
            out.append((i, a, a in t.positives))
    return out


def predict_task(h: Hypothesis, task) -> np.ndarray:
    preds = []
    grouped: dict = {}
    for i, a, _ in task_examples(task):
        grouped.setdefault(i, []).append(a)
    for i, t in enumerate(task.triples):
        atoms = grouped.get(i, [])
        if atoms:
            preds.extend(h.classify(t.background, atoms))
    return np.asarray(preds, dtype=bool)


def task_labels(task) -> np.ndarray:
    return np.asarray([lab for _, _, lab in task_examples(task)], dtype=bool)


class _TaskLearner(BaseEstimator):
    """Learn one rule set per flat head predicate of the task."""

    def _bias(self, task, head):
        return Bias.from_task(task, head, max_body=self.max_body, allow_negation=self.allow_negation,
                              max_vars=self.max_vars, const_limit=self.const_limit)

    def _learn_one(self, sub, bias):
        raise NotImplementedError

    def fit(self, task, y=None):
        rules, defaulted = [], set()
        self.n_evaluations_ = 0
        heads = task.head_predicates
        for head in heads:
            sub = task.subtask(head)
            bias = self._bias(sub, head)
            h, evals = self._learn_one(sub, bias)
            self.n_evaluations_ += evals
            if h.learned:
                rules.extend(h.rules)
            else:
                log.info("no hypothesis for %s within the budget; defaulting to true", head)
                defaulted.add(head)
        if heads and defaulted == set(heads):
            self.hypothesis_ = Hypothesis.default()
        else:
            self.hypothesis_ = Hypothesis(rules, True, frozenset(defaulted))
        return self

    def _check(self):
        if not hasattr(self, "hypothesis_"):
            raise ValueError(f"{type(self).__name__} is not fitted")

    def predict(self, task) -> np.ndarray:
        self._check()
        return predict_task(self.hypothesis_, task)

    def score(self, task, y=None) -> float:
        """Balanced accuracy in percent."""
        from ..evaluate import evaluate_hypothesis
        self._check()
        return evaluate_hypothesis(self.hypothesis_, task).balanced_accuracy


class CoverLoopLearner(_TaskLearner):
    """Bottom clause generalisation inside a cover loop."""

    def __init__(self, budget: int = 2000, max_body: int = 3, allow_negation: bool = False,
                 max_vars: int = 5, const_limit: int = 12, max_false_positives: int = 0):
        self.budget = budget
        self.max_body = max_body
        self.allow_negation = allow_negation
        self.max_vars = max_vars
        self.const_limit = const_limit
        self.max_false_positives = max_false_positives

    def _learn_one(self, sub, bias):
        cov = Coverage(sub.triples, bias.head)
        h = cover_loop(sub, bias, self.budget, self.max_false_positives, coverage=cov)
        return h, cov.evaluations


class EnumerativeLearner(_TaskLearner):
    """Smallest consistent rule set by iterative deepening on size."""

    def __init__(self, budget: int = 20000, max_body: int = 2, allow_negation: bool = False,
                 max_vars: int = 4, const_limit: int = 12, max_size: int | None = None,
                 max_rules: int = DEFAULT_MAX_RULES):
        self.budget = budget
        self.max_body = max_body
        self.allow_negation = allow_negation
        self.max_vars = max_vars
        self.const_limit = const_limit
        self.max_size = max_size
        self.max_rules = max_rules

    def _learn_one(self, sub, bias):
        cov = Coverage(sub.triples, bias.head)
        return _enumerative(cov, sub.triples, bias, self.budget, self.max_size, self.max_rules)


LEARNERS = {"cover": CoverLoopLearner, "enum": EnumerativeLearner}


def make_learner(kind: str, **kw):
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise ValueError(f"unknown learner {kind!r}; choose from {', '.join(LEARNERS)}") from None
    return cls(**kw)
