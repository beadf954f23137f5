"""Success rate, interaction-count exploration metrics and Welch's t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import grammar
from .agents import run_episode
from .catalog import CATEGORIES, SUPPLIES
from .rng import derive_seed
from .social import SPConfig
from .world import DEFAULT_EPISODE_LENGTH, objects_in_contact

DEFAULT_WINDOW = 600
ALPHA = 0.05


class NoDeliveries(ValueError):
    """No supply was ever delivered to the requested category."""


class DegenerateVariance(ValueError):
    """Both samples are constant and equal; the t statistic is undefined."""


# --- interesting interactions ----------------------------------------------

_EXTRA_PREDICATES = ("supply to furniture", "supply to supply")


class InteractionSet:
    def __init__(self, name: str, sentences=(), extra: bool = False):
        self.name = name
        self.sentences = tuple(grammar.parse(s) for s in sentences)
        self.extra = extra  # geometric supply-delivery predicates

    def achieved_in(self, state) -> int:
        """Number of this set's interactions realized in a final state."""
        count = len(grammar.achieved_goals(state, self.sentences))
        if self.extra:
            count += sum(_extra_achieved(state))
        return count


def _extra_achieved(state) -> tuple:
    """(supply touching furniture, supply touching another supply) flags."""
    furniture = CATEGORIES["furniture"]
    to_furniture = to_supply = False
    supplies = [o for o in state.objects if o.type in SUPPLIES and not o.consumed]
    for supply in supplies:
        for other in state.objects:
            if other is supply or other.consumed:
                continue
            if not objects_in_contact(supply, other):
                continue
            if other.type in furniture:
                to_furniture = True
            elif other.type in SUPPLIES:
                to_supply = True
    return (1 if to_furniture else 0, 1 if to_supply else 0)


def interaction_set(name: str) -> InteractionSet:
    split = grammar.split_train_test()
    if name == "train":
        return InteractionSet("train", sentences=split.train)
    if name == "test":
        return InteractionSet("test", sentences=split.test)
    if name == "extra":
        return InteractionSet("extra", extra=True)
    raise ValueError(f"unknown interaction set: {name!r}")


def i2c(final_states, interactions: InteractionSet, window: int = DEFAULT_WINDOW) -> int:
    """Count of the set's interactions achieved over the last `window` final
    states, targeted or not."""
    finals = list(final_states)[-window:]
    return sum(interactions.achieved_in(state) for state in finals)


# --- success rate -----------------------------------------------------------

def success_rate(
    policy_kind: str,
    goal: str,
    n: int = 30,
    base_seed: int = 0,
    sp_cfg: SPConfig | None = None,
    episode_length: int | None = None,
) -> float:
    cfg = sp_cfg or SPConfig()
    length = episode_length or DEFAULT_EPISODE_LENGTH
    hits = 0
    for i in range(n):
        seed = derive_seed(base_seed, f"sr|{goal}|{i}")
        hits += run_episode(policy_kind, goal, cfg, seed, episode_length=length).achieved
    return hits / n


def mean_success_rate(policy_kind: str, goals, n: int = 30, base_seed: int = 0, **kwargs):
    """Per-goal success rates plus their mean (the SR-bar summary)."""
    per_goal = {g: success_rate(policy_kind, g, n=n, base_seed=base_seed, **kwargs) for g in goals}
    mean = sum(per_goal.values()) / len(per_goal) if per_goal else 0.0
    return mean, per_goal


# --- supply-choice probabilities ---------------------------------------------

def supply_choice_probability(trajectories, target_category: str) -> tuple:
    """Empirical (water, food) frequencies over supply deliveries to a category.

    A delivery is either a growth event (the supply is consumed by it) or a
    held supply brought into contact with a category member; each (episode,
    supply) pair counts once.
    """
    members = CATEGORIES[target_category]
    counts = {"water": 0, "food": 0}
    total = 0
    for trajectory in trajectories:
        if not trajectory.transitions:
            raise ValueError("supply deliveries require recorded transitions")
        delivered = set()
        for state, _action, nxt in trajectory.transitions:
            for i, after in enumerate(nxt.objects):
                if after.type not in SUPPLIES or i in delivered:
                    continue
                before = state.objects[i]
                if after.consumed and not before.consumed:
                    grown = next(
                        (o for o, prev in zip(nxt.objects, state.objects) if o.size > prev.size),
                        None,
                    )
                    if grown is not None and grown.type in members:
                        delivered.add(i)
                elif after.grasped and any(
                    o.type in members and objects_in_contact(after, o)
                    for j, o in enumerate(nxt.objects)
                    if j != i
                ):
                    delivered.add(i)
                else:
                    continue
                if i in delivered:
                    counts[after.type] += 1
                    total += 1
    if total == 0:
        raise NoDeliveries(f"no supply deliveries to {target_category!r}")
    return counts["water"] / total, counts["food"] / total


# --- Welch's t-test ----------------------------------------------------------

@dataclass(frozen=True)
class WelchResult:
    t: float
    p_value: float
    significant: bool
    df: float


def welch_ttest(a, b, alpha: float = ALPHA) -> WelchResult:
    """Two-tailed Welch's t-test with Welch-Satterthwaite degrees of freedom."""
    a, b = list(a), list(b)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("both samples need at least two values")
    m1, m2 = sum(a) / n1, sum(b) / n2
    v1 = sum((x - m1) ** 2 for x in a) / (n1 - 1)
    v2 = sum((x - m2) ** 2 for x in b) / (n2 - 1)
    se2 = v1 / n1 + v2 / n2
    if se2 == 0.0:
        if m1 == m2:
            raise DegenerateVariance("both samples constant and equal")
        t = math.inf if m1 > m2 else -math.inf
        return WelchResult(t=t, p_value=0.0, significant=True, df=float(n1 + n2 - 2))
    t = (m1 - m2) / math.sqrt(se2)
    df = se2**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    p = student_t_two_tailed_p(t, df)
    return WelchResult(t=t, p_value=p, significant=p < alpha, df=df)


def student_t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) by the continued-fraction expansion (modified Lentz scheme)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float, max_iter: int = 300) -> float:
    tiny = 1e-30
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h
