"""Episode logs: JSONL persistence, observation decoding and replay checks.

One JSON object per line. A log starts with a header carrying the observation
layout version and the run configuration; each episode contributes a start
record (goal, seed, full initial scene), one record per step (action taken and
the observation after it) and an end record (achievement flag, descriptions).
Episodes are appended atomically: a torn run never leaves partial episodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .world import (
    BODY_BLOCK,
    BodyState,
    LAYOUT_VERSION,
    OBJECT_BLOCK,
    OBJECT_TYPES,
    OBS_LENGTH,
    ObjectState,
    SceneState,
    WORLD_HALF,
    observation_of,
    scene_from_dict,
    scene_to_dict,
    step as world_step,
)


class ReplayMismatch(AssertionError):
    """Re-simulating a log did not reproduce the recorded observations."""


@dataclass
class EpisodeRecord:
    episode_id: int
    goal: str
    seed: int
    scene: dict
    steps: list = field(default_factory=list)  # (action, observation) pairs
    achieved: bool = False
    descriptions: list = field(default_factory=list)
    negatives: list = field(default_factory=list)


class EpisodeLogWriter:
    def __init__(self, path: str, config: dict | None = None):
        self.path = path
        self._file = open(path, "w", encoding="utf-8")
        header = {
            "type": "header",
            "layout_version": LAYOUT_VERSION,
            "observation_length": OBS_LENGTH,
            "config": config or {},
        }
        self._file.write(json.dumps(header) + "\n")
        self._file.flush()

    def append(self, record: EpisodeRecord) -> None:
        lines = [
            json.dumps(
                {
                    "type": "episode_start",
                    "episode_id": record.episode_id,
                    "goal": record.goal,
                    "seed": record.seed,
                    "scene": record.scene,
                }
            )
        ]
        for i, (action, obs) in enumerate(record.steps):
            lines.append(
                json.dumps(
                    {
                        "type": "step",
                        "episode_id": record.episode_id,
                        "step": i,
                        "action": list(action),
                        "obs": list(obs),
                    }
                )
            )
        lines.append(
            json.dumps(
                {
                    "type": "episode_end",
                    "episode_id": record.episode_id,
                    "achieved": record.achieved,
                    "descriptions": list(record.descriptions),
                    "negatives": list(record.negatives),
                }
            )
        )
        self._file.write("\n".join(lines) + "\n")
        self._file.flush()

    def close(self) -> None:
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def record_trajectory(episode_id: int, trajectory) -> EpisodeRecord:
    """Turn an in-memory trajectory (with transitions) into a log record."""
    if not trajectory.transitions:
        raise ValueError("logging needs transitions; run with keep_transitions=True")
    steps = []
    for _state, action, nxt in trajectory.transitions:
        obs = observation_of(nxt, trajectory.initial)
        steps.append(((action.dx, action.dy, action.gripper), obs))
    return EpisodeRecord(
        episode_id=episode_id,
        goal=trajectory.goal,
        seed=trajectory.seed,
        scene=scene_to_dict(trajectory.initial),
        steps=steps,
        achieved=trajectory.achieved,
        descriptions=list(trajectory.feedback.positives),
        negatives=list(trajectory.feedback.negatives),
    )


def read_log(path: str):
    """(header, complete episode records); trailing partial episodes are dropped."""
    header = None
    episodes: dict[int, EpisodeRecord] = {}
    finished: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            kind = data.get("type")
            if kind == "header":
                header = data
            elif kind == "episode_start":
                episodes[data["episode_id"]] = EpisodeRecord(
                    episode_id=data["episode_id"],
                    goal=data["goal"],
                    seed=data["seed"],
                    scene=data["scene"],
                )
            elif kind == "step":
                episodes[data["episode_id"]].steps.append((data["action"], data["obs"]))
            elif kind == "episode_end":
                rec = episodes[data["episode_id"]]
                rec.achieved = data["achieved"]
                rec.descriptions = data["descriptions"]
                rec.negatives = data.get("negatives", [])
                finished.append(rec.episode_id)
    return header, [episodes[i] for i in finished]


def replay_episode(record: EpisodeRecord) -> None:
    """Drive the recorded actions through the library and compare observations."""
    from .world import Action

    initial = scene_from_dict(record.scene)
    state = initial
    for i, (action, logged_obs) in enumerate(record.steps):
        state = world_step(state, Action(*action))
        obs = observation_of(state, initial)
        if obs != logged_obs:
            raise ReplayMismatch(
                f"episode {record.episode_id} step {i}: observation diverged"
            )


def replay_log(path: str) -> int:
    """Replay every episode of a log; returns the number verified."""
    _header, records = read_log(path)
    for record in records:
        replay_episode(record)
    return len(records)


# --- observation decoding ----------------------------------------------------

def decode_observation(obs, episode_length: int = 0, step_index: int = 0) -> SceneState:
    """Rebuild a scene from a flat observation.

    The delta half gives the initial feature block, so initial sizes and
    positions are exact; consumed supplies are recognizable by their parked
    off-board position.
    """
    if len(obs) != OBS_LENGTH:
        raise ValueError(f"expected {OBS_LENGTH} features, got {len(obs)}")
    half = OBS_LENGTH // 2
    now, delta = obs[:half], obs[half:]
    first = [a - b for a, b in zip(now, delta)]

    def unpack(block, block0):
        type_idx = max(range(len(OBJECT_TYPES)), key=lambda i: block[i])
        n = len(OBJECT_TYPES)
        x, y, r, g, b, size, grasped = block[n:n + 7]
        x0, y0, size0 = block0[n], block0[n + 1], block0[n + 5]
        return ObjectState(
            type=OBJECT_TYPES[type_idx],
            position=(x, y),
            rgb=(r, g, b),
            size=size,
            grasped=grasped > 0.5,
            initial_size=size0,
            initial_position=(x0, y0),
            consumed=abs(x) > WORLD_HALF or abs(y) > WORLD_HALF,
        )

    objects = []
    for i in range((half - BODY_BLOCK) // OBJECT_BLOCK):
        lo = BODY_BLOCK + i * OBJECT_BLOCK
        objects.append(unpack(now[lo:lo + OBJECT_BLOCK], first[lo:lo + OBJECT_BLOCK]))
    body = BodyState(position=(now[0], now[1]), gripper_closed=now[2] > 0.5)
    return SceneState(
        body=body,
        objects=tuple(objects),
        step_index=step_index,
        episode_length=episode_length or step_index,
    )
