"""Command-line interface: serve, rollout, goals, imagine, dataset, metrics, catalog."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import catalog, grammar, imagination, metrics
from .agents import run_episode
from .config import RunConfig
from .episodes import EpisodeLogWriter, decode_observation, read_log, record_trajectory
from .replay import RewardDatasetEmitter, StoredTransition, hindsight_batches
from .rng import SplitMix64, derive_seed
from .social import to_goals


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    # Environment overrides are deliberately limited to the port and log path.
    port = os.environ.get("PLAYPEN_PORT")
    log_path = os.environ.get("PLAYPEN_LOG")
    updates = {}
    if port:
        updates["port"] = int(port)
    if log_path:
        updates["log_path"] = log_path
    if updates:
        config = RunConfig.from_dict({**config.to_dict(), **updates})
    return config


def _read_goals(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_catalog(args) -> int:
    if args.action == "dump":
        json.dump(catalog.taxonomy(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_goals(args) -> int:
    split = grammar.split_train_test()
    if args.split == "train":
        goals = list(split.train)
    elif args.split == "test":
        goals = list(split.test)
    else:
        goals = list(split.train + split.test)
    if args.type is not None:
        goals = [g for g in goals if split.type_of(g) == args.type]
    for goal in sorted(goals):
        print(goal)
    return 0


def cmd_imagine(args) -> int:
    known = _read_goals(args.known)
    state = imagination.build_state(known, variant=args.variant)
    base = imagination.imagine(state)
    rng = SplitMix64(args.seed)
    split = grammar.split_train_test()
    out = imagination.apply_variant(base, args.variant, rng, split.test, known)
    for goal in sorted(out):
        print(goal)
    coverage, precision = imagination.coverage_precision(
        out, split.test, split.train + split.test
    )
    print(json.dumps({"count": len(out), "coverage": coverage, "precision": precision}))
    return 0


def cmd_rollout(args) -> int:
    config = _load_config(args)
    out = args.out or config.log_path
    if not out:
        print("rollout: --out or a configured log_path is required", file=sys.stderr)
        return 2
    writer = EpisodeLogWriter(out, config.to_dict())
    achieved = 0
    with writer:
        for i in range(args.episodes):
            seed = derive_seed(args.seed, f"rollout-{i}")
            trajectory = run_episode(
                args.policy, args.goal, config.sp, seed,
                episode_length=config.episode_length,
                episode_index=i, total_episodes=args.episodes,
                keep_transitions=True,
            )
            writer.append(record_trajectory(i, trajectory))
            achieved += trajectory.achieved
    print(json.dumps({"episodes": args.episodes, "achieved": achieved, "log": out}))
    return 0


def cmd_dataset_reward(args) -> int:
    _header, records = read_log(args.episodes)
    known = _read_goals(args.known)
    samples = [(rec.steps[-1][1], to_goals(rec.descriptions)) for rec in records if rec.steps]
    emitter = RewardDatasetEmitter.from_samples(samples, known)
    rng = SplitMix64(args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for batch in emitter.batches(rng, n_batches=args.batches, batch_size=args.batch):
            for example in batch:
                fh.write(json.dumps(
                    {"obs": list(example.observation), "goal": example.goal,
                     "label": example.label}
                ) + "\n")
    print(json.dumps({
        "batches": args.batches,
        "batch_size": args.batch,
        "goals_without_positives": sorted(emitter.missing_positives),
    }))
    return 0


def cmd_dataset_hindsight(args) -> int:
    _header, records = read_log(args.episodes)
    goals = _read_goals(args.goals)
    transitions = []
    for rec in records:
        if not rec.steps:
            continue
        length = len(rec.steps)
        decoded = [decode_observation(obs, episode_length=length, step_index=i + 1)
                   for i, (_a, obs) in enumerate(rec.steps)]
        initial = decode_observation(rec.steps[0][1], episode_length=length)
        prev = initial
        for i, state in enumerate(decoded):
            transitions.append(
                StoredTransition(rec.episode_id, prev, rec.steps[i][0], state, initial)
            )
            prev = state
    rng = SplitMix64(args.seed)
    n_batches = max(1, len(transitions) // args.batch)
    written = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for index, batch in enumerate(
            hindsight_batches(transitions, goals, rng, n_batches=n_batches,
                              batch_size=args.batch)
        ):
            for item in batch:
                fh.write(json.dumps({
                    "batch": index,
                    "episode_id": item.transition.episode_id,
                    "action": list(item.transition.action),
                    "goal": item.goal,
                    "reward": item.reward,
                }) + "\n")
                written += 1
    print(json.dumps({"batches": n_batches, "examples": written, "out": args.out}))
    return 0


def cmd_metrics_i2c(args) -> int:
    _header, records = read_log(args.log)
    finals = [
        decode_observation(rec.steps[-1][1], episode_length=len(rec.steps),
                           step_index=len(rec.steps))
        for rec in records if rec.steps
    ]
    value = metrics.i2c(finals, metrics.interaction_set(args.set), window=args.window)
    print(json.dumps({"set": args.set, "window": args.window, "i2c": value}))
    return 0


def cmd_metrics_sr(args) -> int:
    _header, records = read_log(args.log)
    per_goal: dict = {}
    for rec in records:
        hits, n = per_goal.get(rec.goal, (0, 0))
        per_goal[rec.goal] = (hits + (1 if rec.achieved else 0), n + 1)
    rates = {g: hits / n for g, (hits, n) in per_goal.items()}
    mean = sum(rates.values()) / len(rates) if rates else 0.0
    print(json.dumps({"sr": mean, "per_goal": rates}))
    return 0


def cmd_serve(args) -> int:
    from .protocol import serve

    config = _load_config(args)
    serve(config, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playpen")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run-configuration JSON file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="taxonomy utilities", parents=[common])
    p.add_argument("action", choices=["dump"])
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("goals", help="goal grammar utilities", parents=[common])
    p.add_argument("action", choices=["enumerate"])
    p.add_argument("--split", choices=["all", "train", "test"], default="all")
    p.add_argument("--type", type=int, choices=[1, 2, 3, 4, 5])
    p.set_defaults(func=cmd_goals)

    p = sub.add_parser("imagine", help="compose new goals from known ones", parents=[common])
    p.add_argument("--known", required=True, help="file of newline-separated goals")
    p.add_argument("--variant", default="cgh",
                   choices=["cgh", "oracle", "low-coverage", "low-precision", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_imagine)

    p = sub.add_parser("rollout", help="run episodes and log them", parents=[common])
    p.add_argument("--policy", choices=["scripted", "random"], default="scripted")
    p.add_argument("--goal", required=True)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("dataset", help="emit datasets for external learners", parents=[common])
    dsub = p.add_subparsers(dest="dataset", required=True)
    d = dsub.add_parser("reward", help="final-state reward examples", parents=[common])
    d.add_argument("--episodes", required=True)
    d.add_argument("--known", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--batch", type=int, default=512)
    d.add_argument("--batches", type=int, default=1)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_dataset_reward)
    d = dsub.add_parser("hindsight", help="relabeled transitions", parents=[common])
    d.add_argument("--episodes", required=True)
    d.add_argument("--goals", required=True)
    d.add_argument("--batch", type=int, default=256)
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_dataset_hindsight)

    p = sub.add_parser("metrics", help="reports over episode logs", parents=[common])
    msub = p.add_subparsers(dest="metric", required=True)
    m = msub.add_parser("i2c", help="interesting interaction count", parents=[common])
    m.add_argument("--log", required=True)
    m.add_argument("--set", choices=["train", "test", "extra"], required=True)
    m.add_argument("--window", type=int, default=metrics.DEFAULT_WINDOW)
    m.set_defaults(func=cmd_metrics_i2c)
    m = msub.add_parser("sr", help="success rates from a log", parents=[common])
    m.add_argument("--log", required=True)
    m.set_defaults(func=cmd_metrics_sr)

    p = sub.add_parser("serve", help="run the wire-protocol server", parents=[common])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "imagine":
        args.variant = args.variant.replace("-", "_")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
