#!/usr/bin/env python3
"""Reference client for the playpen wire protocol.

Standard library only, so this file doubles as protocol documentation: one
JSON object per line over TCP, every response echoing the request id. The
client never recomputes environment dynamics; it only sends actions and
aggregates what the server reports.

Usage:
    python client.py --host 127.0.0.1 --port 5865 --episodes 100 [--goal "..."]
"""

from __future__ import annotations

import argparse
import json
import random
import socket
import sys

EXPECTED_PROTOCOL = "playpen/1"
EXPECTED_LAYOUT_VERSION = "obs-v1"


class ProtocolFailure(RuntimeError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


class VersionMismatch(RuntimeError):
    pass


class ClientSession:
    """One connection to the server; synchronous request/response."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.file = self.sock.makefile("rwb")
        self._next_id = 0
        hello = self.call("hello")
        if hello.get("protocol") != EXPECTED_PROTOCOL:
            raise VersionMismatch(f"server speaks {hello.get('protocol')!r}")
        self.layout = hello["layout"]
        if self.layout.get("version") != EXPECTED_LAYOUT_VERSION:
            raise VersionMismatch(f"unknown layout {self.layout.get('version')!r}")

    def call(self, cmd: str, **fields):
        self._next_id += 1
        request = {"id": self._next_id, "cmd": cmd, **fields}
        self.file.write((json.dumps(request) + "\n").encode("utf-8"))
        self.file.flush()
        line = self.file.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        reply = json.loads(line)
        if reply.get("id") != self._next_id:
            raise ProtocolFailure("BadReply", "correlation id mismatch")
        if not reply.get("ok"):
            error = reply.get("error", {})
            raise ProtocolFailure(error.get("code", "Unknown"), error.get("message", ""))
        return reply

    def reset(self, goal: str, seed: int):
        return self.call("reset", goal=goal, seed=seed)

    def step(self, action):
        return self.call("step", action=list(action))

    def describe(self):
        return self.call("describe")

    def goals(self, split: str = "train"):
        return self.call("goals", split=split)["goals"]

    def reward_eval(self, goal: str) -> bool:
        return self.call("reward_eval", goal=goal)["holds"]

    def close(self):
        try:
            self.call("close")
        finally:
            self.sock.close()


def run_random_episodes(session: ClientSession, n: int, seed: int, goal: str | None = None):
    """Drive n full episodes with uniform random actions; returns a summary
    dict plus the exact actions sent (for server-log round-trip checks)."""
    rng = random.Random(seed)
    train_goals = session.goals("train")
    expected_len = session.layout["observation_length"]
    summary = {
        "episodes": 0,
        "achieved": 0,
        "descriptions": 0,
        "observation_lengths_ok": True,
        "protocol_errors": 0,
    }
    sent_actions = []
    for i in range(n):
        target = goal or rng.choice(train_goals)
        reply = session.reset(target, seed=rng.getrandbits(48))
        if len(reply["obs"]) != expected_len:
            summary["observation_lengths_ok"] = False
        episode_actions = []
        done = False
        while not done:
            action = [rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)]
            reply = session.step(action)
            episode_actions.append(action)
            if len(reply["obs"]) != expected_len:
                summary["observation_lengths_ok"] = False
            done = reply["done"]
        achieved = session.reward_eval(target)
        described = session.describe()
        summary["episodes"] += 1
        summary["achieved"] += int(achieved)
        summary["descriptions"] += len(described["descriptions"])
        sent_actions.append(
            {
                "goal": target,
                "actions": episode_actions,
                "achieved": achieved,
                "goal_described": f"you {target}" in described["descriptions"],
            }
        )
    return summary, sent_actions


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--goal", default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    session = ClientSession(args.host, args.port)
    try:
        summary, _actions = run_random_episodes(
            session, args.episodes, seed=args.seed, goal=args.goal
        )
    finally:
        session.close()
    json.dump(summary, sys.stdout)
    sys.stdout.write("\n")
    return 0 if summary["observation_lengths_ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
