"""Rule learners over IGGP tasks."""
from .aleph import BottomClause, bottom_clause, cover_loop, generalize
from .bias import Bias
from .canon import canonical, display_rule, rule_key
from .coverage import Coverage, RuleCover
from .enumerate import enumerate_rules, learn_enumerative, verify
from .estimators import (LEARNERS, CoverLoopLearner, EnumerativeLearner, make_learner,
                         predict_task, task_examples, task_labels)
from .hypothesis import Hypothesis, hypothesis_from_text, read_hypothesis, write_hypothesis

__all__ = [
    "Bias", "BottomClause", "Coverage", "CoverLoopLearner", "EnumerativeLearner", "Hypothesis",
    "LEARNERS", "RuleCover", "bottom_clause", "canonical", "cover_loop", "display_rule",
    "enumerate_rules", "generalize", "hypothesis_from_text", "learn_enumerative", "make_learner",
    "predict_task", "read_hypothesis", "rule_key", "task_examples", "task_labels", "verify",
    "write_hypothesis",
]
