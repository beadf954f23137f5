"""Static taxonomy: object types, categories, color attributes and zones."""

from __future__ import annotations

from .rng import SplitMix64

ANIMALS = ("dog", "cat", "chameleon", "human", "fly", "parrot", "mouse", "lion", "pig", "cow")
PLANTS = ("cactus", "carnivorous", "flower", "tree", "bush", "grass", "algae", "tea", "rose", "bonsai")
FURNITURE = ("door", "chair", "desk", "lamp", "table", "cupboard", "sink", "window", "sofa", "carpet")
SUPPLIES = ("water", "food")

# Canonical object-type order; also the one-hot encoding order of observations.
OBJECT_TYPES = ANIMALS + PLANTS + FURNITURE + SUPPLIES

CATEGORIES = {
    "animal": frozenset(ANIMALS),
    "plant": frozenset(PLANTS),
    "furniture": frozenset(FURNITURE),
    "supply": frozenset(SUPPLIES),
    "living_thing": frozenset(ANIMALS + PLANTS),
}

GROWABLE_TYPES = ANIMALS + PLANTS

COLOR_NAMES = ("red", "blue", "green")

# Disjoint axis-aligned RGB boxes: the attribute's own channel is dominant
# ([0.6, 1]) and the other two stay low ([0, 0.3]), so classification is
# unambiguous and white/grey codes belong to no attribute.
_LOW = (0.0, 0.3)
_HIGH = (0.6, 1.0)
COLOR_BOXES = {
    "red": (_HIGH, _LOW, _LOW),
    "green": (_LOW, _HIGH, _LOW),
    "blue": (_LOW, _LOW, _HIGH),
}

ZONES = (
    "center", "top", "bottom", "right", "left",
    "top left", "top right", "bottom left", "bottom right",
)


class NotInAnyBox(ValueError):
    """RGB triple lies outside every color attribute's box."""


def categories_of(object_type: str) -> frozenset:
    if object_type not in OBJECT_TYPES:
        raise KeyError(f"unknown object type: {object_type!r}")
    return frozenset(name for name, members in CATEGORIES.items() if object_type in members)


def sample_rgb(color: str, rng: SplitMix64) -> tuple:
    box = COLOR_BOXES[color]
    return tuple(rng.uniform(lo, hi) for lo, hi in box)


def classify_rgb(rgb) -> str:
    r, g, b = rgb
    for name, box in COLOR_BOXES.items():
        (rlo, rhi), (glo, ghi), (blo, bhi) = box
        if rlo <= r <= rhi and glo <= g <= ghi and blo <= b <= bhi:
            return name
    raise NotInAnyBox(f"rgb {rgb!r} is outside all color boxes")


def taxonomy() -> dict:
    """JSON-ready dump of the taxonomy for client-side mirroring."""
    return {
        "object_types": list(OBJECT_TYPES),
        "categories": {name: sorted(members) for name, members in CATEGORIES.items()},
        "colors": {name: [list(chan) for chan in box] for name, box in COLOR_BOXES.items()},
        "zones": list(ZONES),
    }
