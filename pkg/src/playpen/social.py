"""Social partner: scene organization for a chosen goal, end-of-episode
descriptions restricted to the training split, and presence/exhaustiveness
relaxations."""

from __future__ import annotations

from dataclasses import dataclass

from . import grammar
from .catalog import CATEGORIES, COLOR_NAMES, GROWABLE_TYPES, OBJECT_TYPES, PLANTS
from .rng import SplitMix64
from .world import ObjectConstraint, SceneSpec, SceneState

YOU_PREFIX = "you "
SUPPLY_CHOICES = ("water", "food")


class MalformedDescription(ValueError):
    """Description text does not strip to a training-split sentence."""


@dataclass(frozen=True)
class SPConfig:
    """Feedback behavior: when the partner is present and what it says.

    presence: "always", "probability" (present with chance `presence_value`
    per episode) or "first_fraction" (present only in the first
    `presence_value` share of episodes). When `exhaustive` is false, the
    partner utters `counts` = (n_pos, n_neg) sampled descriptions instead of
    every valid one.
    """

    presence: str = "always"
    presence_value: float = 1.0
    exhaustive: bool = True
    counts: tuple | None = None

    def to_dict(self) -> dict:
        data = {"presence": {"mode": self.presence}, "exhaustive": self.exhaustive}
        if self.presence != "always":
            data["presence"]["value"] = self.presence_value
        if self.counts is not None:
            data["counts"] = list(self.counts)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SPConfig":
        presence = data.get("presence", {"mode": "always"})
        counts = data.get("counts")
        return cls(
            presence=presence.get("mode", "always"),
            presence_value=float(presence.get("value", 1.0)),
            exhaustive=bool(data.get("exhaustive", True)),
            counts=tuple(counts) if counts else None,
        )


@dataclass(frozen=True)
class Feedback:
    """Descriptions for one episode; negatives only occur in sampled modes."""

    positives: tuple = ()
    negatives: tuple = ()
    present: bool = True


_TRAIN = grammar.split_train_test().train
_TRAIN_PARSED = tuple(grammar.parse(g) for g in _TRAIN)


def _keyword_descriptor(target: str):
    """Loose reading of any sentence: (predicate, color, referent)."""
    tokens = target.split()
    predicate = tokens[0] if tokens and tokens[0] in grammar.PREDICATES else None
    color = next((t for t in tokens if t in COLOR_NAMES), None)
    referent = next((t for t in tokens[1:] if t in OBJECT_TYPES or t in CATEGORIES), None)
    return predicate, color, referent


def _concrete_type(referent: str, rng: SplitMix64) -> str:
    if referent in CATEGORIES:
        return rng.choice(sorted(CATEGORIES[referent]))
    return referent


def organize_scene(target: str, rng: SplitMix64) -> SceneSpec:
    """Scene requirements for a chosen goal sentence (known or imagined).

    The goal's objects are always present; a grow goal also gets a suitable
    supply. Unparseable or impossible sentences degrade gracefully: whatever
    object the sentence mentions is still added, so the agent can try.
    """
    predicate, color, referent = _keyword_descriptor(target)
    if predicate == "go" or predicate is None:
        return SceneSpec()

    slots: list[ObjectConstraint] = []
    if predicate == "grow":
        if referent is not None:
            required = _concrete_type(referent, rng)
        else:
            # "grow any red thing" and friends: anything growable will do
            required = rng.choice(GROWABLE_TYPES)
        supply = "water" if required in PLANTS else rng.choice(SUPPLY_CHOICES)
        slots.append(ObjectConstraint(type=required, color=color))
        slots.append(ObjectConstraint(type=supply))
    elif referent is not None or color is not None:
        required = _concrete_type(referent, rng) if referent else None
        slots.append(ObjectConstraint(type=required, color=color))
    return SceneSpec(slots=tuple(slots))


def describe(
    final: SceneState,
    cfg: SPConfig,
    rng: SplitMix64,
    episode_index: int = 0,
    total_episodes: int = 1,
) -> Feedback:
    """Descriptions of a final state, drawn from the training split only."""
    if cfg.presence == "probability":
        present = rng.bernoulli(cfg.presence_value)
    elif cfg.presence == "first_fraction":
        present = episode_index < cfg.presence_value * total_episodes
    else:
        present = True
    if not present:
        return Feedback(present=False)

    valid = grammar.achieved_goals(final, _TRAIN_PARSED)
    if cfg.exhaustive:
        return Feedback(positives=tuple(YOU_PREFIX + g for g in valid))

    n_pos, n_neg = cfg.counts if cfg.counts is not None else (1, 1)
    valid_set = set(valid)
    invalid = [g for g in _TRAIN if g not in valid_set]
    positives = tuple(YOU_PREFIX + g for g in rng.sample(valid, min(n_pos, len(valid))))
    negatives = tuple(YOU_PREFIX + g for g in rng.sample(invalid, min(n_neg, len(invalid))))
    return Feedback(positives=positives, negatives=negatives)


def to_goals(descriptions) -> set:
    """Strip the leading "you" token, mapping descriptions back to goals."""
    goals = set()
    train = set(_TRAIN)
    for text in descriptions:
        if not text.startswith(YOU_PREFIX):
            raise MalformedDescription(f"missing {YOU_PREFIX!r} prefix: {text!r}")
        sentence = text[len(YOU_PREFIX):]
        if sentence not in train:
            raise MalformedDescription(f"not a training goal: {sentence!r}")
        goals.add(sentence)
    return goals


def infer_unachieved(known, described) -> set:
    """Goals the agent knows about that were not described this episode."""
    return set(known) - set(described)
