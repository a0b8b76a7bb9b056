"""Scoring hypotheses on held-out tasks, significance tests, and experiment grids."""
from __future__ import annotations

import configparser
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from scipy.stats import chi2

from .exceptions import IggpError
from .games import game_text, load_game
from .learn.estimators import make_learner
from .learn.hypothesis import Hypothesis, write_hypothesis
from .traces import TARGETS, TaskBuilder, generate_traces

log = logging.getLogger(__name__)

SOURCES = ("random", "intelligent", "mixed")


class UndefinedTestError(IggpError, ValueError):
    """The significance test is undefined for the given counts."""


@dataclass(frozen=True)
class EvalReport:
    p: int
    n: int
    tp: int
    tn: int

    def __post_init__(self):
        if min(self.p, self.n, self.tp, self.tn) < 0:
            raise ValueError("counts must be non-negative")
        if self.tp > self.p or self.tn > self.n:
            raise ValueError("tp <= p and tn <= n must hold")

    @property
    def balanced_accuracy(self) -> float:
        return balanced_accuracy(self.p, self.n, self.tp, self.tn)

    @property
    def perfectly_solved(self) -> bool:
        return self.tp == self.p and self.tn == self.n

    @property
    def correct(self) -> int:
        return self.tp + self.tn

    @property
    def total(self) -> int:
        return self.p + self.n

    def __add__(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.p + other.p, self.n + other.n, self.tp + other.tp, self.tn + other.tn)

    def as_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "tp": self.tp, "tn": self.tn,
                "balanced_accuracy": self.balanced_accuracy,
                "perfectly_solved": self.perfectly_solved}


def balanced_accuracy(p: int, n: int, tp: int, tn: int) -> float:
    """Percent; with one class empty, the accuracy on the other class."""
    if p == 0 and n == 0:
        raise ValueError("balanced accuracy of an empty example set is undefined")
    if n == 0:
        return 100.0 * tp / p
    if p == 0:
        return 100.0 * tn / n
    return 100.0 * (tp / p + tn / n) / 2


def evaluate_hypothesis(h: Hypothesis, task) -> EvalReport:
    """Each example is judged against its own triple's background."""
    p = n = tp = tn = 0
    for t in task.triples:
        pos = sorted(t.positives)
        neg = sorted(t.negatives)
        if not pos and not neg:
            continue
        got = h.classify(t.background, pos + neg)
        p += len(pos)
        n += len(neg)
        tp += sum(got[:len(pos)])
        tn += len(neg) - sum(got[len(pos):])
    if p + n == 0:
        raise ValueError("the test task has no examples")
    return EvalReport(p, n, tp, tn)


def split_train_test(traces, n_train: int, n_test: int, seed: int = 0):
    """Disjoint random train and test trace lists."""
    traces = list(traces)
    if n_train < 0 or n_test < 0:
        raise ValueError("split sizes must be non-negative")
    if n_train + n_test > len(traces):
        raise ValueError(f"need {n_train + n_test} traces for a {n_train}+{n_test} split, "
                         f"have {len(traces)}")
    idx = list(range(len(traces)))
    random.Random(seed).shuffle(idx)
    train = sorted(idx[:n_train])
    test = sorted(idx[n_train:n_train + n_test])
    return [traces[i] for i in train], [traces[i] for i in test]


def example_overlap(train_task, test_task, drop: bool = False):
    """Count test positives already seen with the same background in training.

    With ``drop`` those examples are removed from the returned test task.
    """
    from .traces import InductionTriple, IggpTask
    seen = {(t.background, a) for t in train_task.triples for a in t.positives}
    count = 0
    triples = []
    for t in test_task.triples:
        dup = frozenset(a for a in t.positives if (t.background, a) in seen)
        count += len(dup)
        triples.append(InductionTriple(t.background, t.positives - dup, t.negatives) if drop else t)
    if not drop:
        return count, test_task
    out = IggpTask(test_task.game, test_task.target, triples, dict(test_task.pools),
                   test_task.composition, list(test_task.provenance), dict(test_task.types),
                   dict(test_task.metadata), list(test_task.warnings))
    return count, out


def chi_squared_table(table) -> tuple:
    """Pearson statistic (1 dof, no continuity correction) and p-value of a 2x2 table."""
    (a, b), (c, d) = table
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    total = a + b + c + d
    if 0 in rows or 0 in cols:
        raise UndefinedTestError(f"contingency table {table} has a zero marginal")
    stat = 0.0
    for i, row in enumerate(((a, b), (c, d))):
        for j, obs in enumerate(row):
            exp = rows[i] * cols[j] / total
            stat += (obs - exp) ** 2 / exp
    return stat, float(chi2.sf(stat, 1))


def chi_squared(report_a: EvalReport, report_b: EvalReport) -> tuple:
    """Compare (correct, incorrect) classification counts of two conditions."""
    if report_a.total == 0 or report_b.total == 0:
        raise UndefinedTestError("both reports need examples")
    table = ((report_a.correct, report_a.total - report_a.correct),
             (report_b.correct, report_b.total - report_b.correct))
    return chi_squared_table(table)


# -- experiments ---------------------------------------------------------------

@dataclass
class ExperimentConfig:
    games: list = field(default_factory=lambda: ["rps", "tictactoe", "eightpuzzle", "fizzbuzz"])
    train_sources: list = field(default_factory=lambda: list(SOURCES))
    test_sources: list = field(default_factory=lambda: ["random", "intelligent"])
    learners: list = field(default_factory=lambda: ["cover", "enum"])
    targets: list = field(default_factory=lambda: ["goal", "next", "legal"])
    include_terminal: bool = False
    traces: int = 8
    e2_traces: list = field(default_factory=lambda: [8, 16, 24])
    test_traces: int = 4
    modes: list = field(default_factory=lambda: ["e1", "e2"])
    budget: int = 2000
    enum_budget: int = 5000
    max_rules: int = 20000
    move_cap: int = 60
    playouts: int = 100
    drop_overlap: bool = False
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        for s in self.train_sources:
            if s not in SOURCES:
                raise ValueError(f"unknown train source {s!r}")
        for s in self.test_sources:
            if s not in ("random", "intelligent"):
                raise ValueError(f"unknown test source {s!r}")
        for t in self.targets:
            if t not in TARGETS:
                raise ValueError(f"unknown target {t!r}")
        for m in self.modes:
            if m not in ("e1", "e2"):
                raise ValueError(f"unknown mode {m!r}")
        for k in [self.traces] + list(self.e2_traces):
            if "mixed" in self.train_sources and k % 2:
                raise ValueError("mixed training needs an even trace count for a 50/50 split")
        if self.test_traces < 1:
            raise ValueError("test_traces must be at least 1")

    @property
    def all_targets(self) -> list:
        out = list(self.targets)
        if self.include_terminal and "terminal" not in out:
            out.append("terminal")
        return out

    @property
    def trace_counts(self) -> list:
        counts = set()
        if "e1" in self.modes:
            counts.add(self.traces)
        if "e2" in self.modes:
            counts.update(self.e2_traces)
        return sorted(counts)


_LIST_FIELDS = {"games", "train_sources", "test_sources", "learners", "targets", "modes",
                "e2_traces"}
_BOOL_FIELDS = {"include_terminal", "drop_overlap"}


def parse_config(text: str) -> ExperimentConfig:
    """``key = value`` lines; lists are comma separated; ``#`` starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string("[experiment]\n" + text)
    sec = cp["experiment"]
    fields_ = ExperimentConfig.__dataclass_fields__
    kw = {}
    for key in sec:
        if key not in fields_:
            raise ValueError(f"unknown config key {key!r}")
        raw = sec[key].strip()
        if key in _LIST_FIELDS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            kw[key] = [int(x) for x in items] if key == "e2_traces" else items
        elif key in _BOOL_FIELDS:
            kw[key] = sec.getboolean(key)
        else:
            kw[key] = int(raw)
    return ExperimentConfig(**kw)


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


@dataclass
class CellResult:
    game: str
    target: str
    learner: str
    train_source: str
    test_source: str
    traces: int
    report: EvalReport | None = None
    error: str | None = None
    seconds: float = 0.0
    overlap: int = 0

    def record(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "report"}
        if self.report is not None:
            d.update(self.report.as_dict())
        return d


def _seed_for(config, *parts) -> int:
    return random.Random(repr((config.seed,) + parts)).getrandbits(32)


def _game_traces(config: ExperimentConfig, game_id: str):
    """Training and test trace lists per source for one game."""
    game = load_game(game_id)
    need = max(config.trace_counts) if config.trace_counts else 0
    opts = {"playouts": config.playouts}
    kinds = {"random": "random", "intelligent": "intelligent"}
    out = {}
    for src, kind in kinds.items():
        traces = generate_traces(game, game_id, kind, need + config.test_traces,
                                 _seed_for(config, game_id, src), config.move_cap,
                                 jobs=config.jobs, player_options=opts, game_text=game_text(game_id))
        train, test = split_train_test(traces, need, config.test_traces,
                                       _seed_for(config, game_id, src, "split"))
        out[src] = (train, test)
    return game, out


def _train_set(per_source, source: str, k: int) -> list:
    if source == "mixed":
        return per_source["random"][0][:k // 2] + per_source["intelligent"][0][:k // 2]
    return per_source[source][0][:k]


def _learner(config, kind):
    if kind == "enum":
        return make_learner("enum", budget=config.enum_budget, max_rules=config.max_rules)
    return make_learner(kind, budget=config.budget)


def _learn_cell(args):
    config, game_id, target, learner, train_task = args
    t0 = time.perf_counter()
    try:
        est = _learner(config, learner).fit(train_task)
        return est.hypothesis_, None, time.perf_counter() - t0
    except Exception as exc:  # recorded in the grid, never fatal
        log.error("learning %s/%s with %s failed: %s", game_id, target, learner, exc)
        return None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


def run_experiment(config: ExperimentConfig, out_dir=None, progress=None) -> dict:
    """Run the configured grid; returns the cell results and the rendered tables."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "hypotheses").mkdir(parents=True, exist_ok=True)
    cells: list = []
    say = progress or (lambda msg: None)
    for game_id in config.games:
        say(f"{game_id}: generating traces")
        game, per_source = _game_traces(config, game_id)
        everything = [t for tr, te in per_source.values() for t in tr + te]
        for target in config.all_targets:
            builder = TaskBuilder(game, target).fit(everything)
            tests = {s: builder.transform(per_source[s][1]) for s in config.test_sources}
            jobs = []
            for k in config.trace_counts:
                for src in config.train_sources:
                    train_task = builder.transform(_train_set(per_source, src, k))
                    for learner in config.learners:
                        jobs.append(((k, src, learner, train_task),
                                     (config, game_id, target, learner, train_task)))
            say(f"{game_id}/{target}: {len(jobs)} learning runs")
            if config.jobs > 1 and len(jobs) > 1:
                with ProcessPoolExecutor(max_workers=config.jobs) as ex:
                    results = list(ex.map(_learn_cell, [j[1] for j in jobs]))
            else:
                results = [_learn_cell(j[1]) for j in jobs]
            for ((k, src, learner, train_task), _), (h, err, secs) in zip(jobs, results):
                if h is not None and out is not None:
                    write_hypothesis(h, out / "hypotheses" / f"{game_id}__{target}__{learner}__{src}__{k}.pl")
                for test_src, test_task in tests.items():
                    cell = CellResult(game_id, target, learner, src, test_src, k, seconds=secs, error=err)
                    if h is not None:
                        try:
                            cell.overlap, tt = example_overlap(train_task, test_task, config.drop_overlap)
                            cell.report = evaluate_hypothesis(h, tt)
                        except Exception as exc:
                            cell.error = f"{type(exc).__name__}: {exc}"
                    cells.append(cell)
    result = {"cells": cells,
              "e1": e1_table(cells, config) if "e1" in config.modes else "",
              "e2": e2_table(cells, config) if "e2" in config.modes else ""}
    if out is not None:
        with open(out / "records.jsonl", "w", encoding="utf-8") as fh:
            for c in cells:
                fh.write(json.dumps(c.record(), sort_keys=True) + "\n")
        (out / "grid.txt").write_text(result["e1"] + ("\n" if result["e1"] else "") + result["e2"],
                                      encoding="utf-8")
    return result


def _mean(values):
    return sum(values) / len(values) if values else None


def e1_grid(cells, config) -> dict:
    """(learner, train source, test source) -> (mean balanced accuracy, perfectly solved, cells, failures)."""
    grid = {}
    for learner in config.learners:
        for tr in config.train_sources:
            for te in config.test_sources:
                sel = [c for c in cells if (c.learner, c.train_source, c.test_source, c.traces)
                       == (learner, tr, te, config.traces)]
                ok = [c.report for c in sel if c.report is not None]
                grid[(learner, tr, te)] = (_mean([r.balanced_accuracy for r in ok]),
                                           sum(r.perfectly_solved for r in ok), len(sel),
                                           len(sel) - len(ok))
    return grid


def e2_series(cells, config) -> dict:
    """(learner, test source, trace count) -> mean balanced accuracy over games, targets, train sources."""
    out = {}
    for learner in config.learners:
        for te in config.test_sources:
            for k in config.e2_traces:
                ok = [c.report.balanced_accuracy for c in cells if c.report is not None
                      and (c.learner, c.test_source, c.traces) == (learner, te, k)]
                out[(learner, te, k)] = _mean(ok)
    return out


def _fmt(v):
    return "-" if v is None else f"{v:.1f}"


def _table(header, rows) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(str(c).rjust(w) if i else str(c).ljust(w)
                       for i, (c, w) in enumerate(zip(r, widths))) for r in [header] + rows]
    return "\n".join(lines) + "\n"


def e1_table(cells, config) -> str:
    grid = e1_grid(cells, config)
    cols = [(tr, te) for tr in config.train_sources for te in config.test_sources]
    header = ["learner"] + [f"{tr}/{te}" for tr, te in cols]
    rows = []
    for learner in config.learners:
        row = [learner]
        for tr, te in cols:
            ba, solved, n, failed = grid[(learner, tr, te)]
            row.append(f"{_fmt(ba)} ({solved}/{n})" + (f" !{failed}" if failed else ""))
        rows.append(row)
    return (f"mean balanced accuracy, train/test source, {config.traces} training traces "
            "(perfectly solved / cells)\n" + _table(header, rows))


def e2_table(cells, config) -> str:
    series = e2_series(cells, config)
    header = ["learner", "test", "traces", "balanced_accuracy"]
    rows = [[learner, te, str(k), _fmt(series[(learner, te, k)])]
            for learner in config.learners for te in config.test_sources for k in config.e2_traces]
    return "mean balanced accuracy by number of training traces\n" + _table(header, rows)
