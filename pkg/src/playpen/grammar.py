"""Goal language: enumeration, parsing, train/test split and the achievement
semantics used as the ground-truth reward oracle."""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import (
    ANIMALS,
    CATEGORIES,
    COLOR_NAMES,
    OBJECT_TYPES,
    PLANTS,
    ZONES,
    classify_rgb,
)

PREDICATES = ("go", "grasp", "grow")

# Referents accepted by each predicate's descriptor slot.
GRASP_REFERENTS = OBJECT_TYPES + ("living_thing", "animal", "plant", "furniture", "supply")
GROW_REFERENTS = ANIMALS + PLANTS + ("living_thing", "animal", "plant")

COLOR_OR_ANY = COLOR_NAMES + ("any",)

# An object counts as grown once its size exceeds this ratio of its size at
# episode start. A single growth event clears it; noise cannot.
GROWN_RATIO = 1.2

# Zone geometry: directional zones start past +-0.3, the center band is inside.
ZONE_HALF = 0.3


class NotInGrammar(ValueError):
    """Sentence is not generated by the goal grammar."""


class MissingTestGoal(ValueError):
    """A designated test sentence is absent from the achievable set."""


@dataclass(frozen=True)
class Goal:
    raw: str
    predicate: str
    zone: str | None = None
    color: str | None = None  # "red" | "blue" | "green" | "any"
    referent: str | None = None  # object type, category or "thing"


def parse(sentence: str) -> Goal:
    tokens = sentence.split()
    if not tokens:
        raise NotInGrammar("empty sentence")
    predicate = tokens[0]
    if predicate == "go":
        zone = " ".join(tokens[1:])
        if zone not in ZONES:
            raise NotInGrammar(f"not a zone: {sentence!r}")
        return Goal(raw=sentence, predicate="go", zone=zone)
    if predicate in ("grasp", "grow"):
        rest = tokens[1:]
        if len(rest) == 3 and rest[0] == "any" and rest[1] in COLOR_NAMES and rest[2] == "thing":
            return Goal(raw=sentence, predicate=predicate, color=rest[1], referent="thing")
        if len(rest) == 2 and rest[0] in COLOR_OR_ANY:
            referents = GRASP_REFERENTS if predicate == "grasp" else GROW_REFERENTS
            if rest[1] in referents:
                return Goal(raw=sentence, predicate=predicate, color=rest[0], referent=rest[1])
        raise NotInGrammar(f"not in grammar: {sentence!r}")
    raise NotInGrammar(f"unknown predicate: {sentence!r}")


def render(goal: Goal) -> str:
    if goal.predicate == "go":
        return f"go {goal.zone}"
    if goal.referent == "thing":
        return f"{goal.predicate} any {goal.color} thing"
    return f"{goal.predicate} {goal.color} {goal.referent}"


def enumerate_achievable() -> list[str]:
    """All achievable goal sentences, in canonical enumeration order.

    Direct expansion of the grammar yields 255 sentences (9 go + 151 grasp +
    95 grow); grow goals on furniture or supplies are not generated because
    nothing can grow them.
    """
    goals = [f"go {zone}" for zone in ZONES]
    for color in COLOR_OR_ANY:
        for referent in GRASP_REFERENTS:
            goals.append(f"grasp {color} {referent}")
    for color in COLOR_NAMES:
        goals.append(f"grasp any {color} thing")
    for color in COLOR_OR_ANY:
        for referent in GROW_REFERENTS:
            goals.append(f"grow {color} {referent}")
    for color in COLOR_NAMES:
        goals.append(f"grow any {color} thing")
    return goals


def _test_split_by_type() -> dict[str, int]:
    """The 64 held-out sentences, keyed by generalization type 1-5."""
    split: dict[str, int] = {}
    for g in ("grasp blue door", "grasp green dog", "grasp red tree", "grow green dog"):
        split[g] = 1
    for pred in ("grasp", "grow"):
        for c in COLOR_OR_ANY:
            split[f"{pred} {c} flower"] = 2
    for c in COLOR_OR_ANY:
        split[f"grasp {c} animal"] = 3
    for c in COLOR_OR_ANY:
        split[f"grasp {c} fly"] = 4
    grow_plantish = tuple(p for p in PLANTS if p != "flower") + ("plant", "living_thing")
    for c in COLOR_OR_ANY:
        for ref in grow_plantish:
            split[f"grow {c} {ref}"] = 5
    return split


@dataclass(frozen=True)
class GoalSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    test_types: dict[str, int]

    def type_of(self, sentence: str) -> int | None:
        return self.test_types.get(sentence)


def split_train_test(all_goals: list[str] | None = None) -> GoalSplit:
    if all_goals is None:
        all_goals = enumerate_achievable()
    test_types = _test_split_by_type()
    missing = set(test_types) - set(all_goals)
    if missing:
        raise MissingTestGoal(f"test sentences not achievable: {sorted(missing)}")
    test = tuple(g for g in all_goals if g in test_types)
    train = tuple(g for g in all_goals if g not in test_types)
    return GoalSplit(train=train, test=test, test_types=test_types)


# --- achievement semantics -------------------------------------------------

def zone_contains(zone: str, position) -> bool:
    x, y = position
    checks = {
        "left": x < -ZONE_HALF,
        "right": x > ZONE_HALF,
        "top": y > ZONE_HALF,
        "bottom": y < -ZONE_HALF,
    }
    if zone == "center":
        return abs(x) <= ZONE_HALF and abs(y) <= ZONE_HALF
    return all(checks[word] for word in zone.split())


def matches_descriptor(obj, color: str | None, referent: str | None) -> bool:
    """Does a scene object satisfy a (color, referent) descriptor?"""
    if color is not None and color != "any" and classify_rgb(obj.rgb) != color:
        return False
    if referent is None or referent == "thing":
        return True
    if referent in CATEGORIES:
        return obj.type in CATEGORIES[referent]
    return obj.type == referent


def holds(goal: Goal | str, scene) -> bool:
    """Ground-truth achievement of a goal in a scene state.

    Descriptions are end-of-episode judgements, but the same predicate can be
    evaluated on any state: grow compares against the object's size at episode
    start, carried on the object itself.
    """
    if isinstance(goal, str):
        goal = parse(goal)
    if goal.predicate == "go":
        return zone_contains(goal.zone, scene.body.position)
    if goal.predicate == "grasp":
        return any(
            obj.grasped and matches_descriptor(obj, goal.color, goal.referent)
            for obj in scene.objects
        )
    return any(
        obj.size >= GROWN_RATIO * obj.initial_size
        and matches_descriptor(obj, goal.color, goal.referent)
        for obj in scene.objects
    )


def achieved_goals(scene, goals) -> list[str]:
    """Raw sentences of the given goals (parsed or raw) that hold in the scene.

    Per-object attributes are computed once, so checking the whole training
    split against a state costs one pass over the objects plus one cheap
    test per goal.
    """
    position = scene.body.position
    views = []
    for obj in scene.objects:
        views.append(
            (obj.type, classify_rgb(obj.rgb), obj.grasped,
             obj.size >= GROWN_RATIO * obj.initial_size)
        )

    def descriptor_ok(view, color, referent):
        if color is not None and color != "any" and view[1] != color:
            return False
        if referent is None or referent == "thing":
            return True
        if referent in CATEGORIES:
            return view[0] in CATEGORIES[referent]
        return view[0] == referent

    out = []
    for goal in goals:
        g = parse(goal) if isinstance(goal, str) else goal
        if g.predicate == "go":
            ok = zone_contains(g.zone, position)
        elif g.predicate == "grasp":
            ok = any(v[2] and descriptor_ok(v, g.color, g.referent) for v in views)
        else:
            ok = any(v[3] and descriptor_ok(v, g.color, g.referent) for v in views)
        if ok:
            out.append(g.raw)
    return out


# --- syntactic plausibility (used by imagination analytics) ----------------

_ZONE_AXIS = {"top": "v", "bottom": "v", "left": "h", "right": "h", "center": "n"}


def plausible_shape(sentence: str) -> bool:
    """Loose well-formedness: does the sentence look like a goal, ignoring
    achievability? Rules out doubled colors and same-axis zone compounds."""
    tokens = sentence.split()
    if not tokens:
        return False
    if tokens[0] == "go":
        rest = tokens[1:]
        if not rest or any(w not in _ZONE_AXIS for w in rest):
            return False
        if len(rest) == 1:
            return True
        if len(rest) == 2:
            a, b = (_ZONE_AXIS[w] for w in rest)
            return a != b
        return False
    if tokens[0] in ("grasp", "grow"):
        rest = tokens[1:]
        if len(rest) == 2:
            return rest[0] in COLOR_OR_ANY and rest[1] in GRASP_REFERENTS
        if len(rest) == 3:
            return rest[0] == "any" and rest[1] in COLOR_NAMES and rest[2] == "thing"
    return False
