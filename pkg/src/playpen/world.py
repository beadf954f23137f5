"""The 2D playpen: scene instantiation, step dynamics and observations.

A scene is a value; `step` is a pure transition returning a new state, so
identical (spec, seed, action sequence) inputs reproduce runs bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .catalog import COLOR_NAMES, OBJECT_TYPES, SUPPLIES, CATEGORIES, sample_rgb
from .rng import SplitMix64

WORLD_HALF = 1.2
STEP_SCALE = 0.15
AGENT_RADIUS = 0.025  # agent is a disc of diameter 0.05
SIZE_RANGE = (0.2, 0.3)
GROWTH_FACTOR = 1.5
DEFAULT_EPISODE_LENGTH = 50
N_OBJECTS = 3
PLACEMENT_ATTEMPTS = 1000
# Consumed supplies are parked here, outside the arena and out of reach.
CONSUMED_POSITION = (-2.0, -2.0)

BODY_BLOCK = 3  # x, y, gripper
OBJECT_BLOCK = len(OBJECT_TYPES) + 7  # one-hot type + x, y, r, g, b, size, grasped
OBS_LENGTH = 2 * (BODY_BLOCK + N_OBJECTS * OBJECT_BLOCK)
LAYOUT_VERSION = "obs-v1"

_TYPE_INDEX = {t: i for i, t in enumerate(OBJECT_TYPES)}


class PlacementFailure(RuntimeError):
    """Rejection sampling could not place the scene's objects."""


class EpisodeOver(RuntimeError):
    """step() called on a finished episode."""


class LayoutMismatch(ValueError):
    """Observation requested against an initial state from another episode."""


@dataclass(frozen=True)
class Action:
    dx: float
    dy: float
    gripper: float

    def __post_init__(self):
        object.__setattr__(self, "dx", _clip(self.dx, -1.0, 1.0))
        object.__setattr__(self, "dy", _clip(self.dy, -1.0, 1.0))
        object.__setattr__(self, "gripper", _clip(self.gripper, -1.0, 1.0))


@dataclass(frozen=True)
class BodyState:
    position: tuple
    gripper_closed: bool


@dataclass(frozen=True)
class ObjectState:
    type: str
    position: tuple
    rgb: tuple
    size: float
    grasped: bool
    initial_size: float
    initial_position: tuple
    consumed: bool = False


@dataclass(frozen=True)
class SceneState:
    body: BodyState
    objects: tuple
    step_index: int
    episode_length: int = DEFAULT_EPISODE_LENGTH


@dataclass(frozen=True)
class ObjectConstraint:
    """Requirement for one scene slot; None fields are procedurally sampled."""

    type: str | None = None
    color: str | None = None


@dataclass(frozen=True)
class SceneSpec:
    slots: tuple = ()

    def __post_init__(self):
        if len(self.slots) > N_OBJECTS:
            raise ValueError(f"at most {N_OBJECTS} required objects")

    @property
    def free_slots(self) -> int:
        return N_OBJECTS - len(self.slots)


def _clip(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def in_contact_with_body(body_position, obj: ObjectState) -> bool:
    if obj.consumed:
        return False
    return _distance(body_position, obj.position) < AGENT_RADIUS + obj.size / 2


def objects_in_contact(a: ObjectState, b: ObjectState) -> bool:
    if a.consumed or b.consumed:
        return False
    return _distance(a.position, b.position) < (a.size + b.size) / 2


def grows_with(target_type: str, supply_type: str) -> bool:
    """Animals grow with water or food, plants with water only."""
    if target_type in CATEGORIES["animal"]:
        return supply_type in SUPPLIES
    if target_type in CATEGORIES["plant"]:
        return supply_type == "water"
    return False


def reset(spec: SceneSpec, seed: int, episode_length: int = DEFAULT_EPISODE_LENGTH) -> SceneState:
    rng = SplitMix64(seed)
    constraints = list(spec.slots) + [ObjectConstraint()] * spec.free_slots
    objects: list[ObjectState] = []
    for constraint in constraints:
        obj_type = constraint.type or rng.choice(OBJECT_TYPES)
        color = constraint.color or rng.choice(COLOR_NAMES)
        rgb = sample_rgb(color, rng)
        size = rng.uniform(*SIZE_RANGE)
        limit = WORLD_HALF - size / 2
        for _ in range(PLACEMENT_ATTEMPTS):
            pos = (rng.uniform(-limit, limit), rng.uniform(-limit, limit))
            if all(_distance(pos, o.position) > (size + o.size) / 2 for o in objects):
                break
        else:
            raise PlacementFailure(f"could not place object {len(objects)}")
        objects.append(
            ObjectState(
                type=obj_type,
                position=pos,
                rgb=rgb,
                size=size,
                grasped=False,
                initial_size=size,
                initial_position=pos,
            )
        )
    body = BodyState(position=(0.0, 0.0), gripper_closed=False)
    return SceneState(body=body, objects=tuple(objects), step_index=0, episode_length=episode_length)


def step(state: SceneState, action: Action) -> SceneState:
    if state.step_index >= state.episode_length:
        raise EpisodeOver(f"episode finished at step {state.step_index}")

    x, y = state.body.position
    pos = (
        _clip(x + STEP_SCALE * action.dx, -WORLD_HALF, WORLD_HALF),
        _clip(y + STEP_SCALE * action.dy, -WORLD_HALF, WORLD_HALF),
    )
    objects = list(state.objects)
    held = next((i for i, o in enumerate(objects) if o.grasped), None)
    if held is not None:
        objects[held] = replace(objects[held], position=pos)

    closed = action.gripper > 0
    if closed and held is None:
        contacts = [
            (_distance(pos, o.position), i)
            for i, o in enumerate(objects)
            if in_contact_with_body(pos, o)
        ]
        if contacts:
            _, held = min(contacts)
            objects[held] = replace(objects[held], grasped=True, position=pos)
    elif not closed and held is not None:
        objects[held] = replace(objects[held], grasped=False)
        held = None

    if held is not None and objects[held].type in SUPPLIES:
        supply = objects[held]
        targets = [
            (_distance(supply.position, o.position), j)
            for j, o in enumerate(objects)
            if j != held
            and objects_in_contact(supply, o)
            and grows_with(o.type, supply.type)
        ]
        if targets:
            _, j = min(targets)
            objects[j] = replace(objects[j], size=objects[j].size * GROWTH_FACTOR)
            objects[held] = replace(
                supply, grasped=False, consumed=True, position=CONSUMED_POSITION
            )

    return SceneState(
        body=BodyState(position=pos, gripper_closed=closed),
        objects=tuple(objects),
        step_index=state.step_index + 1,
        episode_length=state.episode_length,
    )


# --- observations -----------------------------------------------------------

def _body_block(state: SceneState) -> list:
    x, y = state.body.position
    return [x, y, 1.0 if state.body.gripper_closed else 0.0]


def _object_block(obj: ObjectState) -> list:
    block = [0.0] * len(OBJECT_TYPES)
    block[_TYPE_INDEX[obj.type]] = 1.0
    block += [obj.position[0], obj.position[1], *obj.rgb, obj.size,
              1.0 if obj.grasped else 0.0]
    return block


def _check_same_episode(state: SceneState, initial: SceneState) -> None:
    if len(state.objects) != len(initial.objects) or any(
        a.type != b.type or a.initial_position != b.initial_position
        for a, b in zip(state.objects, initial.objects)
    ):
        raise LayoutMismatch("states come from different episodes")


def observation_of(state: SceneState, initial: SceneState) -> list:
    """Flat feature vector [o_t, o_t - o_0]; the delta gives a sense of time."""
    _check_same_episode(state, initial)
    o_t = _body_block(state)
    for obj in state.objects:
        o_t += _object_block(obj)
    o_0 = _body_block(initial)
    for obj in initial.objects:
        o_0 += _object_block(obj)
    return o_t + [a - b for a, b in zip(o_t, o_0)]


def object_centric_view(state: SceneState, initial: SceneState) -> list:
    """Per-object sub-states [body, dbody, obj_i, dobj_i], one per object."""
    _check_same_episode(state, initial)
    body, body0 = _body_block(state), _body_block(initial)
    dbody = [a - b for a, b in zip(body, body0)]
    views = []
    for obj, obj0 in zip(state.objects, initial.objects):
        block, block0 = _object_block(obj), _object_block(obj0)
        dblock = [a - b for a, b in zip(block, block0)]
        views.append(body + dbody + block + dblock)
    return views


# --- serialization (episode logs, wire protocol) ----------------------------

def scene_to_dict(state: SceneState) -> dict:
    return {
        "body": {"position": list(state.body.position), "gripper": state.body.gripper_closed},
        "objects": [
            {
                "type": o.type,
                "position": list(o.position),
                "rgb": list(o.rgb),
                "size": o.size,
                "grasped": o.grasped,
                "initial_size": o.initial_size,
                "initial_position": list(o.initial_position),
                "consumed": o.consumed,
            }
            for o in state.objects
        ],
        "step_index": state.step_index,
        "episode_length": state.episode_length,
    }


def scene_from_dict(data: dict) -> SceneState:
    return SceneState(
        body=BodyState(
            position=tuple(data["body"]["position"]),
            gripper_closed=bool(data["body"]["gripper"]),
        ),
        objects=tuple(
            ObjectState(
                type=o["type"],
                position=tuple(o["position"]),
                rgb=tuple(o["rgb"]),
                size=o["size"],
                grasped=bool(o["grasped"]),
                initial_size=o["initial_size"],
                initial_position=tuple(o["initial_position"]),
                consumed=bool(o["consumed"]),
            )
            for o in data["objects"]
        ),
        step_index=int(data["step_index"]),
        episode_length=int(data["episode_length"]),
    )
