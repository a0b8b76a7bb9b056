import json

import pytest

from iggp.cli import EXIT_FINDING, EXIT_OK, EXIT_USAGE, main
from iggp.learn import Hypothesis, read_hypothesis, write_hypothesis
from iggp.machine import machine_for


@pytest.fixture(scope="module")
def rps_tasks(tmp_path_factory):
    root = tmp_path_factory.mktemp("rps")
    assert main(["trace", "rps", "--count", "6", "--seed", "5", "--out", str(root / "traces")]) == EXIT_OK
    assert main(["build", str(root / "traces"), "--target", "all", "--out", str(root / "tasks")]) == EXIT_OK
    return root


def test_validate(tmp_path, capsys):
    assert main(["validate", "tictactoe"]) == EXIT_OK
    assert "ok" in capsys.readouterr().out
    bad = tmp_path / "unsafe.gdl"
    bad.write_text("(role r) (<= (legal r ?x) (not (p ?x)))")
    assert main(["validate", str(bad)]) == EXIT_FINDING
    assert capsys.readouterr().out.strip()
    assert main(["validate", str(tmp_path / "missing.gdl")]) == EXIT_USAGE
    broken = tmp_path / "broken.gdl"
    broken.write_text("(role r")
    assert main(["validate", str(broken)]) == EXIT_FINDING


def test_trace_count_zero_and_determinism(tmp_path):
    assert main(["trace", "tictactoe", "--count", "0", "--out", str(tmp_path / "z")]) == EXIT_OK
    assert not list((tmp_path / "z").iterdir())
    for d in ("a", "b"):
        assert main(["trace", "tictactoe", "--count", "3", "--seed", "2", "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_text() == (tmp_path / "b" / f.name).read_text()


def test_trace_usage_errors(tmp_path):
    out = str(tmp_path / "t")
    assert main(["trace", "rps", "--players", "oracle", "--out", out]) == EXIT_USAGE
    assert main(["trace", "rps", "--count", "-1", "--out", out]) == EXIT_USAGE
    assert main(["trace", "nosuchgame", "--out", out]) == EXIT_USAGE
    assert main(["trace", "rps", "--players", "random,intelligent", "--count", "1", "--playouts", "10",
                 "--out", out]) == EXIT_OK


def test_build_all_targets(rps_tasks):
    assert sorted(p.name for p in (rps_tasks / "tasks").iterdir()) == ["goal", "legal", "next", "terminal"]


def test_build_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["build", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_learn_and_eval(rps_tasks, tmp_path, capsys):
    hyp = tmp_path / "h.pl"
    assert main(["learn", str(rps_tasks / "tasks" / "next"), "--out", str(hyp)]) == EXIT_OK
    text = hyp.read_text()
    assert "succ(" in text and "true_step(" in text
    capsys.readouterr()
    rep = tmp_path / "r.json"
    assert main(["eval", str(hyp), str(rps_tasks / "tasks" / "next"), "--out", str(rep)]) == EXIT_OK
    assert "balanced_accuracy=" in capsys.readouterr().out
    # next_step is learned exactly; next_score falls back to the default
    assert 50 < json.loads(rep.read_text())["balanced_accuracy"] < 100


def test_learn_zero_budget_gives_the_default(rps_tasks, tmp_path):
    hyp = tmp_path / "h.pl"
    assert main(["learn", str(rps_tasks / "tasks" / "next"), "--budget", "0", "--out", str(hyp)]) \
        == EXIT_FINDING
    assert not read_hypothesis(hyp).learned


def test_learn_usage_errors(rps_tasks, tmp_path):
    task = str(rps_tasks / "tasks" / "next")
    assert main(["learn", task, "--learner", "progol"]) == EXIT_USAGE
    assert main(["learn", task, "--budget", "-3"]) == EXIT_USAGE
    assert main(["learn", str(tmp_path)]) == EXIT_USAGE


def test_eval_truth_and_default(rps_tasks, tmp_path, capsys, games):
    truth = tmp_path / "truth.pl"
    write_hypothesis(Hypothesis(machine_for(games["rps"]).program.rules), truth)
    default = tmp_path / "default.pl"
    write_hypothesis(Hypothesis.default(), default)
    for target in ("goal", "next", "legal", "terminal"):
        assert main(["eval", str(truth), str(rps_tasks / "tasks" / target)]) == EXIT_OK
        assert "perfectly_solved=True" in capsys.readouterr().out
    assert main(["eval", str(default), str(rps_tasks / "tasks" / "next")]) == EXIT_OK
    assert "balanced_accuracy=50.00" in capsys.readouterr().out
    assert main(["eval", str(tmp_path / "nope.pl"), str(rps_tasks / "tasks" / "next")]) == EXIT_USAGE


def test_experiment_smoke(tmp_path, capsys):
    cfg = tmp_path / "x.ini"
    cfg.write_text("games = rps\ntargets = next\nlearners = enum\ntraces = 2\ne2_traces = 2\n"
                   "test_traces = 2\nenum_budget = 500\nplayouts = 20\nmodes = e1\n")
    assert main(["experiment", str(cfg), "--out", str(tmp_path / "out")]) == EXIT_OK
    assert "random/random" in capsys.readouterr().out
    assert (tmp_path / "out" / "records.jsonl").exists()
    bad = tmp_path / "bad.ini"
    bad.write_text("colour = blue\n")
    assert main(["experiment", str(bad), "--out", str(tmp_path / "o2")]) == EXIT_USAGE


def test_no_subcommand_is_a_usage_error():
    assert main([]) == EXIT_USAGE
