"""Replay buffer, hindsight goal substitution and reward-dataset emission."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

from . import grammar
from .rng import SplitMix64
from .social import to_goals
from .world import observation_of


class NoCandidates(ValueError):
    """Hindsight relabeling called with an empty candidate pool."""


class InsufficientPositives(UserWarning):
    """Some goals have no positive example yet; their slots fall back to negatives."""


@dataclass(frozen=True)
class StoredTransition:
    episode_id: int
    state: object
    action: object
    next_state: object
    initial: object  # episode reset state, needed for delta features


@dataclass(frozen=True)
class RelabeledTransition:
    transition: StoredTransition
    goal: str
    reward: int


class ReplayBuffer:
    """Bounded FIFO of transitions; every entry keeps its episode's reset state."""

    def __init__(self, capacity: int):
        self._items: deque = deque(maxlen=capacity)
        self._episodes = 0

    def add_episode(self, trajectory) -> None:
        if not trajectory.transitions:
            raise ValueError("trajectory recorded without transitions")
        episode_id = self._episodes
        self._episodes += 1
        for state, action, next_state in trajectory.transitions:
            self._items.append(
                StoredTransition(episode_id, state, action, next_state, trajectory.initial)
            )

    def __len__(self) -> int:
        return len(self._items)

    def snapshot(self) -> tuple:
        return tuple(self._items)

    def sample(self, n: int, rng: SplitMix64) -> list:
        items = self.snapshot()
        return [items[rng.randrange(len(items))] for _ in range(n)]


def _holds_quietly(goal: str, state) -> bool:
    try:
        return grammar.holds(goal, state)
    except grammar.NotInGrammar:
        return False


def _next_state(transition):
    return transition.next_state if hasattr(transition, "next_state") else transition[2]


def hindsight_relabel(
    batch,
    candidate_goals,
    rng: SplitMix64,
    n_candidates: int = 40,
    p_positive: float = 0.5,
) -> list:
    """Attach a substitute goal and oracle reward to each transition.

    Candidates are scanned against the post-transition state; with probability
    `p_positive` a satisfied candidate is chosen when one exists, otherwise an
    unsatisfied one. Imagined candidates outside the grammar never hold.
    Transitions may be StoredTransition objects or raw (s, a, s') triples.
    """
    pool = list(candidate_goals)
    if not pool:
        raise NoCandidates("empty candidate goal pool")
    out = []
    for transition in batch:
        candidates = rng.sample(pool, min(n_candidates, len(pool)))
        satisfied = [g for g in candidates if _holds_quietly(g, _next_state(transition))]
        unsatisfied = [g for g in candidates if g not in set(satisfied)]
        if satisfied and (not unsatisfied or rng.bernoulli(p_positive)):
            goal, reward = rng.choice(satisfied), 1
        else:
            goal, reward = rng.choice(unsatisfied), 0
        out.append(RelabeledTransition(transition, goal, reward))
    return out


def hindsight_batches(
    transitions,
    candidate_goals,
    rng: SplitMix64,
    n_batches: int,
    batch_size: int = 256,
    positive_ratio: float = 0.5,
    n_candidates: int = 40,
):
    """Replay batches over relabeled transitions, enforcing the positive-reward
    share per batch whenever both pools can supply it."""
    relabeled = hindsight_relabel(transitions, candidate_goals, rng, n_candidates)
    positives = [r for r in relabeled if r.reward == 1]
    negatives = [r for r in relabeled if r.reward == 0]
    for _ in range(n_batches):
        n_pos = round(positive_ratio * batch_size)
        if not positives:
            n_pos = 0
        elif not negatives:
            n_pos = batch_size
        batch = [positives[rng.randrange(len(positives))] for _ in range(n_pos)]
        batch += [negatives[rng.randrange(len(negatives))] for _ in range(batch_size - n_pos)]
        rng.shuffle(batch)
        yield batch


@dataclass(frozen=True)
class RewardExample:
    observation: tuple
    goal: str
    label: int


class RewardDatasetEmitter:
    """Final-state reward examples for external reward-function training.

    Positives are the episode's descriptions; negatives are inferred for
    every known goal that was not described. Batches carry at least one
    example per known goal and hold each goal's positive share at
    `positive_ratio` whenever its pool allows (a fractional carry keeps the
    long-run share exact despite integer batch slots).
    """

    def __init__(self, samples, known_goals):
        """samples: (final observation, set of described goal sentences) pairs."""
        self.goals = sorted(set(known_goals))
        self.observations: list = []
        self.positive_ids: dict = {g: [] for g in self.goals}
        self.negative_ids: dict = {g: [] for g in self.goals}
        for obs, described in samples:
            idx = len(self.observations)
            self.observations.append(tuple(obs))
            described = set(described)
            for g in self.goals:
                (self.positive_ids if g in described else self.negative_ids)[g].append(idx)
        self.missing_positives = {g for g in self.goals if not self.positive_ids[g]}

    @classmethod
    def from_samples(cls, samples, known_goals) -> "RewardDatasetEmitter":
        return cls(samples, known_goals)

    @classmethod
    def from_trajectories(cls, trajectories, known_goals) -> "RewardDatasetEmitter":
        samples = [
            (observation_of(t.final, t.initial), to_goals(t.feedback.positives))
            for t in trajectories
        ]
        return cls(samples, known_goals)

    def examples(self):
        """The raw example pool, one (observation, goal, label) per pair."""
        for g in self.goals:
            for idx in self.positive_ids[g]:
                yield RewardExample(self.observations[idx], g, 1)
            for idx in self.negative_ids[g]:
                yield RewardExample(self.observations[idx], g, 0)

    def batches(
        self,
        rng: SplitMix64,
        n_batches: int,
        batch_size: int = 512,
        positive_ratio: float = 0.2,
    ):
        if batch_size < len(self.goals):
            raise ValueError("batch too small to include every known goal")
        if self.missing_positives:
            warnings.warn(
                f"{len(self.missing_positives)} goals have no positive example",
                InsufficientPositives,
                stacklevel=2,
            )
        credit = {g: 0.0 for g in self.goals}
        for _ in range(n_batches):
            base, extra = divmod(batch_size, len(self.goals))
            bonus = set(rng.sample(self.goals, extra))
            batch = []
            for g in self.goals:
                n_slots = base + (1 if g in bonus else 0)
                if not self.positive_ids[g]:
                    n_pos = 0
                elif not self.negative_ids[g]:
                    n_pos = n_slots
                else:
                    credit[g] += positive_ratio * n_slots
                    n_pos = min(int(credit[g]), n_slots)
                    credit[g] -= n_pos
                for idx in _draw(self.positive_ids[g], n_pos, rng):
                    batch.append(RewardExample(self.observations[idx], g, 1))
                for idx in _draw(self.negative_ids[g], n_slots - n_pos, rng):
                    batch.append(RewardExample(self.observations[idx], g, 0))
            rng.shuffle(batch)
            yield batch


def _draw(pool, k, rng):
    if k <= 0:
        return []
    if len(pool) >= k:
        return rng.sample(pool, k)
    return [rng.choice(pool) for _ in range(k)]


def emit_reward_dataset(
    episodes,
    known_goals,
    rng: SplitMix64,
    n_batches: int = 1,
    batch_size: int = 512,
    positive_ratio: float = 0.2,
):
    """Stream reward-example batches straight from trajectories."""
    emitter = RewardDatasetEmitter.from_trajectories(episodes, known_goals)
    yield from emitter.batches(
        rng, n_batches=n_batches, batch_size=batch_size, positive_ratio=positive_ratio
    )
