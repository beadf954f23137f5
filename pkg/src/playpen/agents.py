"""Scripted goal-achieving policies, a random policy and the episode runner."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import grammar
from .catalog import CATEGORIES, GROWABLE_TYPES, OBJECT_TYPES, PLANTS, SUPPLIES
from .rng import SplitMix64, derive_seed
from .social import Feedback, SPConfig, describe, organize_scene
from .world import (
    Action,
    DEFAULT_EPISODE_LENGTH,
    STEP_SCALE,
    SceneState,
    WORLD_HALF,
    grows_with,
    in_contact_with_body,
    reset,
    step,
)

_MARGIN = 0.75
ZONE_POINTS = {
    "center": (0.0, 0.0),
    "top": (0.0, _MARGIN),
    "bottom": (0.0, -_MARGIN),
    "right": (_MARGIN, 0.0),
    "left": (-_MARGIN, 0.0),
    "top left": (-_MARGIN, _MARGIN),
    "top right": (_MARGIN, _MARGIN),
    "bottom left": (-_MARGIN, -_MARGIN),
    "bottom right": (_MARGIN, -_MARGIN),
}
_ATOM_POINTS = {k: v for k, v in ZONE_POINTS.items() if " " not in k}


def _clip(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _move_towards(position, target) -> tuple:
    """Action components and the resulting body position, mirroring step()."""
    dx = _clip((target[0] - position[0]) / STEP_SCALE, -1.0, 1.0)
    dy = _clip((target[1] - position[1]) / STEP_SCALE, -1.0, 1.0)
    post = (
        _clip(position[0] + STEP_SCALE * dx, -WORLD_HALF, WORLD_HALF),
        _clip(position[1] + STEP_SCALE * dy, -WORLD_HALF, WORLD_HALF),
    )
    return dx, dy, post


def _nearest_contact(position, objects):
    best = None
    for i, obj in enumerate(objects):
        if in_contact_with_body(position, obj):
            d = math.hypot(position[0] - obj.position[0], position[1] - obj.position[1])
            if best is None or (d, i) < best:
                best = (d, i)
    return None if best is None else best[1]


def _nearest(position, objects, indices):
    best = None
    for i in indices:
        o = objects[i]
        d = math.hypot(position[0] - o.position[0], position[1] - o.position[1])
        if best is None or (d, i) < best:
            best = (d, i)
    return None if best is None else best[1]


def _random_action(rng: SplitMix64) -> Action:
    return Action(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))


class RandomPolicy:
    kind = "random"

    def __init__(self, goal: str, rng: SplitMix64):
        self.rng = rng

    def act(self, state: SceneState) -> Action:
        return _random_action(self.rng)


class ScriptedPolicy:
    """Greedy planner per predicate.

    Sentences outside the grammar are handled by their keywords: mentioned
    objects are still pursued, and unknown zone compounds steer toward the
    centroid of the named zone words. Once the plan is complete the policy
    keeps playing with the nearest object rather than freezing, except for
    positional goals, where wandering off would undo the outcome.
    """

    kind = "scripted"

    def __init__(self, goal: str, rng: SplitMix64):
        self.rng = rng
        self.target_idx = None
        self.supply_idx = None
        self._play = None
        self._bound = False
        self._arrived = False
        tokens = goal.split()
        predicate = tokens[0] if tokens else ""
        try:
            parsed = grammar.parse(goal)
        except grammar.NotInGrammar:
            parsed = None
        self.color = next((t for t in tokens if t in ("red", "blue", "green")), None)
        self.referent = next(
            (t for t in tokens[1:] if t in OBJECT_TYPES or t in CATEGORIES), None
        )
        if predicate == "go":
            if parsed is not None:
                self.mode = "go"
                self.point = ZONE_POINTS[parsed.zone]
            else:
                atoms = [_ATOM_POINTS[t] for t in tokens[1:] if t in _ATOM_POINTS]
                if atoms:
                    self.mode = "go_loose"
                    self.point = (
                        sum(p[0] for p in atoms) / len(atoms),
                        sum(p[1] for p in atoms) / len(atoms),
                    )
                else:
                    self.mode = "random"
        elif predicate in ("grasp", "grow"):
            self.mode = predicate
        else:
            self.mode = "random"

    # --- binding -------------------------------------------------------
    def _bind(self, state: SceneState) -> None:
        self._bound = True
        objects = state.objects
        body = state.body.position
        matching = [
            i for i, o in enumerate(objects)
            if not o.consumed and grammar.matches_descriptor(o, self.color, self.referent)
        ]
        if self.mode == "grasp":
            self.target_idx = _nearest(body, objects, matching)
            return
        if self.mode != "grow":
            return

        def suitable_supplies(target_type):
            # plants accept water only; animals either; for anything else
            # (nothing grows it) bring whatever supply is around
            wanted = ("water",) if target_type in PLANTS else SUPPLIES
            return [
                i for i, o in enumerate(objects)
                if not o.consumed and o.type in wanted
            ]

        growable = [i for i in matching if objects[i].type in GROWABLE_TYPES]
        feedable = [
            i for i in growable
            if any(s != i for s in suitable_supplies(objects[i].type))
        ]
        self.target_idx = _nearest(body, objects, feedable or growable or matching)
        if self.target_idx is None:
            return
        candidates = [
            s for s in suitable_supplies(objects[self.target_idx].type)
            if s != self.target_idx
        ]
        self.supply_idx = _nearest(body, objects, candidates)

    # --- primitives ----------------------------------------------------
    def _approach_and_grasp(self, state: SceneState, idx: int) -> Action:
        obj = state.objects[idx]
        if obj.grasped:
            return Action(0.0, 0.0, 1.0)
        dx, dy, post = _move_towards(state.body.position, obj.position)
        gripper = 1.0 if _nearest_contact(post, state.objects) == idx else -1.0
        return Action(dx, dy, gripper)

    def _idle_play(self, state: SceneState) -> Action:
        """Keep playing after the plan is done: feed something growable when a
        suitable supply is around, otherwise pick up the nearest object."""
        objects = state.objects
        body = state.body.position
        if self._play is None:
            feedable = [
                (t, s)
                for t, target in enumerate(objects)
                if not target.consumed and target.size == target.initial_size
                for s, supply in enumerate(objects)
                if s != t and not supply.consumed and grows_with(target.type, supply.type)
            ]
            if feedable:
                t = _nearest(body, objects, [t for t, _s in feedable])
                s = _nearest(body, objects, [s for ft, s in feedable if ft == t])
                self._play = ("feed", t, s)
            else:
                self._play = ("hold", None)
        if self._play[0] == "feed":
            _, t, s = self._play
            target, supply = objects[t], objects[s]
            if supply.consumed or target.size > target.initial_size:
                self._play = ("hold", None)
            elif not supply.grasped:
                return self._approach_and_grasp(state, s)
            else:
                dx, dy, _ = _move_towards(body, target.position)
                return Action(dx, dy, 1.0)
        idx = self._play[1]
        if idx is None or objects[idx].consumed:
            candidates = [i for i, o in enumerate(objects) if not o.consumed]
            idx = _nearest(body, objects, candidates)
            self._play = ("hold", idx)
        if idx is None:
            return Action(0.0, 0.0, -1.0)
        return self._approach_and_grasp(state, idx)

    # --- policy --------------------------------------------------------
    def act(self, state: SceneState) -> Action:
        if not self._bound:
            self._bind(state)
        if self.mode == "random" or (self.mode in ("grasp", "grow") and self.target_idx is None):
            return _random_action(self.rng)

        if self.mode in ("go", "go_loose"):
            pos = state.body.position
            if self.mode == "go_loose":
                self._arrived = self._arrived or math.hypot(
                    pos[0] - self.point[0], pos[1] - self.point[1]
                ) < 1e-6
                if self._arrived:
                    return self._idle_play(state)
            dx, dy, _ = _move_towards(pos, self.point)
            return Action(dx, dy, -1.0)

        if self.mode == "grasp":
            return self._approach_and_grasp(state, self.target_idx)

        # grow: fetch the supply, deliver it to the target, then keep playing.
        target = state.objects[self.target_idx]
        if self.supply_idx is None:
            return self._approach_and_grasp(state, self.target_idx)
        supply = state.objects[self.supply_idx]
        if supply.consumed or target.size > target.initial_size:
            return self._idle_play(state)
        if not supply.grasped:
            return self._approach_and_grasp(state, self.supply_idx)
        return self._deliver(state, target, supply)

    def _deliver(self, state: SceneState, target, supply) -> Action:
        """Carry the held supply to the target, skirting any other object the
        supply could grow on the way (growth fires on first contact)."""
        pos = state.body.position
        hazards = [
            o for i, o in enumerate(state.objects)
            if i not in (self.target_idx, self.supply_idx)
            and not o.consumed
            and grows_with(o.type, supply.type)
        ]

        def clear(point) -> bool:
            return all(
                math.hypot(point[0] - o.position[0], point[1] - o.position[1])
                > (supply.size + o.size) / 2 + 0.02
                for o in hazards
            )

        dx, dy, post = _move_towards(pos, target.position)
        if clear(post):
            return Action(dx, dy, 1.0)
        heading = math.atan2(target.position[1] - pos[1], target.position[0] - pos[0])
        for degrees in (60, -60, 120, -120, 180):
            angle = heading + math.radians(degrees)
            cdx, cdy = math.cos(angle), math.sin(angle)
            cand = (
                _clip(pos[0] + STEP_SCALE * cdx, -WORLD_HALF, WORLD_HALF),
                _clip(pos[1] + STEP_SCALE * cdy, -WORLD_HALF, WORLD_HALF),
            )
            if clear(cand):
                return Action(cdx, cdy, 1.0)
        return Action(0.0, 0.0, 1.0)


def make_policy(kind: str, goal: str, rng: SplitMix64):
    if kind == "scripted":
        return ScriptedPolicy(goal, rng)
    if kind == "random":
        return RandomPolicy(goal, rng)
    raise ValueError(f"unknown policy kind: {kind!r}")


@dataclass(frozen=True)
class Trajectory:
    goal: str
    seed: int
    achieved: bool
    initial: SceneState
    final: SceneState
    feedback: Feedback
    actions: tuple
    transitions: tuple = ()


def setup_episode(goal: str, seed: int, episode_length: int = DEFAULT_EPISODE_LENGTH) -> SceneState:
    """Scene for a goal: the partner organizes, the seed drives all sampling."""
    rng = SplitMix64(seed).spawn("organize")
    spec = organize_scene(goal, rng)
    return reset(spec, derive_seed(seed, "scene"), episode_length)


def run_episode(
    policy_kind: str,
    goal: str,
    sp_cfg: SPConfig,
    seed: int,
    episode_length: int = DEFAULT_EPISODE_LENGTH,
    episode_index: int = 0,
    total_episodes: int = 1,
    keep_transitions: bool = False,
) -> Trajectory:
    """Organize the scene for the goal, run the full episode, describe the end.

    Episodes always run their full length; descriptions happen only on the
    final state, so there is nothing to gain from stopping early.
    """
    root = SplitMix64(seed)
    state = initial = setup_episode(goal, seed, episode_length)
    policy = make_policy(policy_kind, goal, root.spawn("policy"))

    actions = []
    transitions = []
    for _ in range(episode_length):
        action = policy.act(state)
        nxt = step(state, action)
        actions.append(action)
        if keep_transitions:
            transitions.append((state, action, nxt))
        state = nxt

    feedback = describe(
        state, sp_cfg, root.spawn("sp"),
        episode_index=episode_index, total_episodes=total_episodes,
    )
    try:
        achieved = grammar.holds(goal, state)
    except grammar.NotInGrammar:
        achieved = False
    return Trajectory(
        goal=goal,
        seed=seed,
        achieved=achieved,
        initial=initial,
        final=state,
        feedback=feedback,
        actions=tuple(actions),
        transitions=tuple(transitions),
    )
