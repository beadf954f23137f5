"""Goal imagination: composing new goal sentences out of known ones.

Known sentences are compared pairwise; whenever two differ by exactly one
word those words become interchangeable (equivalence classes, kept disjoint
with union-find). Sentences that differ from every stored template by two or
more words become templates themselves. New sentences are then composed by
substituting classmates into template word positions, repeated until no new
sentence appears, under two composition rules: a word never substitutes into
a sentence that already contains it, and the wildcard "any" is never
introduced by substitution (only replaced), since it would only loosen a
sentence the composer already knows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rng import SplitMix64

WILDCARD = "any"


class NoGoalsKnown(RuntimeError):
    """Target sampling requested before any goal is known."""


def word_distance(a: str, b: str) -> int:
    """Substitution-only word distance; unequal lengths are incomparable."""
    ta, tb = a.split(), b.split()
    if len(ta) != len(tb):
        return max(len(ta), len(tb))
    return sum(x != y for x, y in zip(ta, tb))


def _differing_words(a: str, b: str):
    for x, y in zip(a.split(), b.split()):
        if x != y:
            return x, y
    raise ValueError("sentences do not differ")


@dataclass
class ImaginationState:
    variant: str = "cgh"
    known: list = field(default_factory=list)
    templates: list = field(default_factory=list)
    _parent: dict = field(default_factory=dict)

    # --- union-find over words ---
    def _find(self, word: str) -> str:
        parent = self._parent
        parent.setdefault(word, word)
        root = word
        while parent[root] != root:
            root = parent[root]
        while parent[word] != root:
            parent[word], word = root, parent[word]
        return root

    def _union(self, a: str, b: str) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self._parent[ra] = rb

    def equivalence_classes(self) -> list:
        groups: dict[str, set] = {}
        for word in self._parent:
            groups.setdefault(self._find(word), set()).add(word)
        return [frozenset(g) for g in groups.values() if len(g) > 1]

    def classmates(self, word: str) -> frozenset:
        if word not in self._parent:
            return frozenset()
        root = self._find(word)
        group = frozenset(w for w in self._parent if self._find(w) == root)
        return group if len(group) > 1 else frozenset()


def update_equivalences(state: ImaginationState, new_goal: str) -> ImaginationState:
    """Fold one sentence into the state: merge word pairs against templates at
    distance one; keep the sentence as a template if no template is within
    distance one."""
    if new_goal in state.known:
        return state
    is_new_template = True
    for template in state.templates:
        distance = word_distance(new_goal, template)
        if distance < 2:
            is_new_template = False
        if distance == 1:
            w1, w2 = _differing_words(new_goal, template)
            state._union(w1, w2)
    if is_new_template:
        state.templates.append(new_goal)
    state.known.append(new_goal)
    return state


def build_state(known_goals, variant: str = "cgh") -> ImaginationState:
    state = ImaginationState(variant=variant)
    for goal in known_goals:
        update_equivalences(state, goal)
    return state


def imagine(state: ImaginationState) -> set:
    """All sentences composable from the templates via classmate substitution,
    iterated to a fixed point, minus the known goals."""
    classes = {}
    for group in state.equivalence_classes():
        for word in group:
            classes[word] = group
    known = set(state.known)
    seen = set(state.templates)
    frontier = list(state.templates)
    imagined = set()
    while frontier:
        next_frontier = []
        for sentence in frontier:
            tokens = sentence.split()
            present = set(tokens)
            for i, word in enumerate(tokens):
                for mate in classes.get(word, ()):
                    if mate == word or mate == WILDCARD or mate in present:
                        continue
                    candidate = " ".join(tokens[:i] + [mate] + tokens[i + 1:])
                    if candidate in seen:
                        continue
                    seen.add(candidate)
                    next_frontier.append(candidate)
                    if candidate not in known:
                        imagined.add(candidate)
        frontier = next_frontier
    return imagined


def _vocabulary(sentences) -> tuple:
    words = set()
    lengths = set()
    for s in sentences:
        tokens = s.split()
        words.update(tokens)
        lengths.add(len(tokens))
    return tuple(sorted(words)), tuple(sorted(lengths))


def _random_sentence(words, lengths, rng: SplitMix64) -> str:
    n = rng.choice(lengths)
    return " ".join(rng.choice(words) for _ in range(n))


def apply_variant(
    base_imagined: set,
    variant: str,
    rng: SplitMix64,
    test_split,
    known_goals,
) -> set:
    """Post-process the composed goals per the studied imagination variants."""
    test = set(test_split)
    if variant == "cgh":
        return set(base_imagined)
    if variant == "low_coverage":
        # iterate in sorted order so the kept set is a function of the seed
        # alone, not of set iteration order
        return {g for g in sorted(base_imagined) if rng.bernoulli(0.5)}
    words, lengths = _vocabulary(known_goals)
    if variant == "low_precision":
        out = set(base_imagined)
        for goal in sorted(base_imagined):
            if goal not in test:
                out.add(_random_sentence(words, lengths, rng))
        return out
    if variant == "random":
        return {_random_sentence(words, lengths, rng) for _ in sorted(base_imagined)}
    if variant == "oracle":
        found = base_imagined & test
        known_words = set(words)
        # Test goals built from words never heard cannot be composed; once
        # every composable test goal has been imagined, the oracle tops the
        # set up with that remainder.
        composable = {g for g in test if set(g.split()) <= known_words}
        if found and found == composable:
            return test
        return found
    raise ValueError(f"unknown variant: {variant!r}")


def coverage_precision(imagined, test_split, achievable) -> tuple:
    """(share of the test split imagined, share of imagined that is achievable)."""
    imagined = set(imagined)
    if not imagined:
        return 0.0, 0.0
    coverage = len(imagined & set(test_split)) / len(set(test_split))
    precision = len(imagined & set(achievable)) / len(imagined)
    return coverage, precision


def sample_target(known, imagined, imagination_enabled: bool, rng: SplitMix64) -> str:
    """Uniform over known goals; with imagination enabled, a fair coin picks
    the known or the imagined set first."""
    known = list(known)
    if not known:
        raise NoGoalsKnown("no known goals to sample from")
    imagined = list(imagined)
    if imagination_enabled and imagined and rng.bernoulli(0.5):
        return rng.choice(imagined)
    return rng.choice(known)
