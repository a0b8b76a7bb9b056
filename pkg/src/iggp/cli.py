"""Command line entry point: ``iggp <subcommand> ...``.

Exit status is 0 on success, 1 for a domain finding (an invalid game, a
learner that fell back to the default hypothesis) and 2 for usage or I/O
problems.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datalog import stratify
from .exceptions import (FlattenError, GdlSyntaxError, IggpError, IllFormedGameError, TaskFormatError,
                         UnstratifiableError)
from .games import GAMES, game_text, load_game
from .parser import flatten, parse_program, validate
from .players import PLAYER_KINDS

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("iggp")


class UsageError(Exception):
    pass


def say(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def resolve_game(ref: str):
    """(program, id, text) for a bundled game name or a path to a GDL file."""
    if ref in GAMES:
        return load_game(ref), ref, game_text(ref)
    path = Path(ref)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read game {ref}: {e.strerror or e}") from e
    return parse_program(text), path.stem, text


def cmd_validate(args) -> int:
    path = Path(args.game)
    if args.game in GAMES:
        text = game_text(args.game)
    else:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror or e}") from e
    findings = []
    try:
        prog = parse_program(text)
    except GdlSyntaxError as e:
        print(f"syntax: {e}")
        return EXIT_FINDING
    try:
        flat = flatten(prog)
    except FlattenError as e:
        print(f"flatten: {e}")
        return EXIT_FINDING
    findings.extend(str(v) for v in validate(flat))
    if not findings:
        try:
            stratify(flat)
        except UnstratifiableError as e:
            findings.append(f"stratification: {e}")
    if not findings:
        from .machine import GameMachine
        try:
            GameMachine(flat)
        except IllFormedGameError as e:
            findings.append(f"game: {e}")
    for f in findings:
        print(f)
    if findings:
        return EXIT_FINDING
    print(f"{args.game}: ok ({len(prog.rules)} rules)")
    return EXIT_OK


def cmd_trace(args) -> int:
    from .traces import generate_traces, match_seeds, run_match, write_trace
    game, gid, text = resolve_game(args.game)
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    kinds = args.players.split(",")
    for k in kinds:
        if k not in PLAYER_KINDS:
            raise UsageError(f"unknown player kind {k!r}; choose from {', '.join(PLAYER_KINDS)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = {"playouts": args.playouts}
    if len(kinds) == 1:
        traces = generate_traces(game, gid, kinds[0], args.count, args.seed, args.cap,
                                 jobs=args.jobs, player_options=opts, game_text=text)
    else:
        traces = [run_match(game, kinds, move_cap=args.cap, seed=s, game_id=gid, player_options=opts)
                  for s in match_seeds(args.seed, args.count)]
    for i, t in enumerate(traces):
        write_trace(t, out / f"trace_{i:03d}.txt")
    say(f"wrote {len(traces)} traces to {out}")
    return EXIT_OK


def cmd_build(args) -> int:
    from .traces import TARGETS, TaskBuilder, read_trace, serialize_task
    d = Path(args.traces)
    if not d.is_dir():
        raise UsageError(f"{d} is not a directory")
    files = sorted(p for p in d.iterdir() if p.is_file() and p.suffix == ".txt")
    if not files:
        raise UsageError(f"no trace files in {d}")
    traces = [read_trace(p) for p in files]
    ids = {t.game for t in traces}
    ref = args.game or (ids.pop() if len(ids) == 1 else None)
    if ref is None:
        raise UsageError("traces come from several games; pass --game")
    game, gid, _ = resolve_game(ref)
    targets = list(TARGETS) if args.target == "all" else [args.target]
    out = Path(args.out)
    for target in targets:
        task = TaskBuilder(game, target).fit(traces).transform(traces)
        dest = out / target if len(targets) > 1 else out
        serialize_task(task, dest)
        say(f"{target}: {len(task)} triples, pool {len(task.pool)} -> {dest}")
    return EXIT_OK


def cmd_learn(args) -> int:
    from .learn import make_learner, write_hypothesis
    from .traces import parse_task
    if args.budget < 0:
        raise UsageError("--budget must be non-negative")
    task = parse_task(args.task)
    est = make_learner(args.learner, budget=args.budget).fit(task)
    h = est.hypothesis_
    if args.out:
        write_hypothesis(h, args.out)
    else:
        sys.stdout.write(h.to_text())
    say(f"{args.learner}: {len(h.rules)} rules, {est.n_evaluations_} coverage evaluations")
    if not h.learned:
        say("no hypothesis found within the budget; wrote the default hypothesis")
        return EXIT_FINDING
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import evaluate_hypothesis
    from .learn import read_hypothesis
    from .traces import parse_task
    try:
        h = read_hypothesis(args.hypothesis)
    except OSError as e:
        raise UsageError(f"cannot read {args.hypothesis}: {e.strerror or e}") from e
    task = parse_task(args.task)
    rep = evaluate_hypothesis(h, task)
    rec = rep.as_dict()
    print(f"p={rep.p} n={rep.n} tp={rep.tp} tn={rep.tn} "
          f"balanced_accuracy={rep.balanced_accuracy:.2f} perfectly_solved={rep.perfectly_solved}")
    if args.out:
        Path(args.out).write_text(json.dumps(rec, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_experiment(args) -> int:
    from dataclasses import replace
    from .evaluate import read_config, run_experiment
    try:
        config = read_config(args.config)
    except OSError as e:
        raise UsageError(f"cannot read {args.config}: {e.strerror or e}") from e
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.jobs is not None:
        config = replace(config, jobs=args.jobs)
    res = run_experiment(config, args.out, progress=say)
    sys.stdout.write(res["e1"])
    if res["e2"]:
        sys.stdout.write(("\n" if res["e1"] else "") + res["e2"])
    failed = sum(1 for c in res["cells"] if c.error)
    if failed:
        say(f"{failed} cells failed; see {Path(args.out) / 'records.jsonl'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iggp", description="Game rules, traces and rule learning.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="parse, flatten, validate and stratify a game")
    s.add_argument("game", help="bundled game name or GDL file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("trace", help="play matches and write trace files")
    s.add_argument("game")
    s.add_argument("--players", default="random",
                   help="player kind for every role, or a comma list in role order")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--cap", type=int, default=60, help="move cap per match")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--playouts", type=int, default=1000, help="MCTS playouts per move")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("build", help="turn a directory of traces into task directories")
    s.add_argument("traces")
    s.add_argument("--target", choices=["goal", "next", "legal", "terminal", "all"], default="next")
    s.add_argument("--game", help="game name or file, if not the one named in the traces")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("learn", help="learn a hypothesis from a task directory")
    s.add_argument("task")
    s.add_argument("--learner", choices=["cover", "enum"], default="enum")
    s.add_argument("--budget", type=int, default=20000, help="coverage evaluations per predicate")
    s.add_argument("--out", help="hypothesis file (default: standard output)")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("eval", help="score a hypothesis on a task directory")
    s.add_argument("hypothesis")
    s.add_argument("task")
    s.add_argument("--out", help="write the report as a JSON line")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("experiment", help="run an experiment grid from a config file")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as e:
        say(f"iggp: {e}")
        return EXIT_USAGE
    except (OSError, TaskFormatError) as e:
        say(f"iggp: {e}")
        return EXIT_USAGE
    except IggpError as e:
        say(f"iggp: {e}")
        return EXIT_FINDING


if __name__ == "__main__":
    sys.exit(main())
