"""Deterministic 2D language-goal environment with a ground-truth reward
oracle, social-partner feedback, goal imagination and dataset machinery."""

from .catalog import ANIMALS, CATEGORIES, COLOR_NAMES, FURNITURE, OBJECT_TYPES, PLANTS, SUPPLIES, ZONES
from .grammar import Goal, GoalSplit, enumerate_achievable, holds, parse, render, split_train_test
from .imagination import ImaginationState, build_state, imagine, sample_target
from .rng import SplitMix64, derive_seed
from .social import Feedback, SPConfig, describe, infer_unachieved, organize_scene, to_goals
from .world import (
    Action,
    BodyState,
    ObjectConstraint,
    ObjectState,
    SceneSpec,
    SceneState,
    observation_of,
    object_centric_view,
    reset,
    step,
)

__version__ = "0.1.0"
