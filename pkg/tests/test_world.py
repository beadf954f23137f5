import math

import pytest
from hypothesis import given, settings, strategies as st

from playpen import world
from playpen.catalog import classify_rgb
from playpen.world import (
    Action,
    EpisodeOver,
    LayoutMismatch,
    ObjectConstraint,
    PlacementFailure,
    SceneSpec,
    object_centric_view,
    observation_of,
    reset,
    scene_from_dict,
    scene_to_dict,
    step,
)


def spec_red_cat():
    return SceneSpec(slots=(ObjectConstraint("cat", "red"),))


def test_reset_is_deterministic():
    a = reset(spec_red_cat(), seed=12)
    b = reset(spec_red_cat(), seed=12)
    assert a == b
    assert a != reset(spec_red_cat(), seed=13)


def test_reset_honors_spec():
    scene = reset(spec_red_cat(), seed=4)
    assert scene.body.position == (0.0, 0.0)
    assert not scene.body.gripper_closed
    assert len(scene.objects) == 3
    required = scene.objects[0]
    assert required.type == "cat"
    assert classify_rgb(required.rgb) == "red"
    for obj in scene.objects:
        assert 0.2 <= obj.size <= 0.3
        assert obj.size == obj.initial_size


def test_reset_objects_not_in_contact():
    for seed in range(50):
        scene = reset(SceneSpec(), seed=seed)
        for i, a in enumerate(scene.objects):
            for b in scene.objects[i + 1:]:
                gap = math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])
                assert gap > (a.size + b.size) / 2


def test_reset_placement_failure():
    overfull = SceneSpec(slots=(ObjectConstraint("cat"),) * 3)
    # shrink the world so three objects cannot avoid each other
    original = world.WORLD_HALF
    world.WORLD_HALF = 0.2
    try:
        with pytest.raises(PlacementFailure):
            reset(overfull, seed=0)
    finally:
        world.WORLD_HALF = original


def test_step_translation_and_noop():
    scene = reset(SceneSpec(), seed=1)
    moved = step(scene, Action(1.0, 0.0, -1.0))
    assert moved.body.position == (0.15, 0.0)
    still = step(scene, Action(0.0, 0.0, -1.0))
    assert still.body.position == (0.0, 0.0)
    assert still.step_index == 1


def test_action_components_clamped():
    a = Action(5.0, -7.0, 2.0)
    assert (a.dx, a.dy, a.gripper) == (1.0, -1.0, 1.0)


def test_body_stays_in_bounds():
    scene = reset(SceneSpec(), seed=2)
    for _ in range(40):
        scene = step(scene, Action(1.0, 1.0, -1.0))
    assert scene.body.position == (world.WORLD_HALF, world.WORLD_HALF)


def _walk_to(scene, target, gripper=-1.0):
    for _ in range(60):
        x, y = scene.body.position
        dx = (target[0] - x) / world.STEP_SCALE
        dy = (target[1] - y) / world.STEP_SCALE
        scene = step(scene, Action(dx, dy, gripper))
        if scene.body.position == tuple(target):
            break
    return scene


def test_grasp_on_contact_with_positive_gripper():
    scene = reset(spec_red_cat(), seed=9)
    cat = scene.objects[0]
    scene = _walk_to(scene, cat.position)
    assert not scene.objects[0].grasped
    scene = step(scene, Action(0.0, 0.0, 1.0))
    assert scene.objects[0].grasped
    assert scene.objects[0].position == scene.body.position
    # releasing leaves it in place
    scene = step(scene, Action(0.0, 0.0, -1.0))
    assert not scene.objects[0].grasped


def test_single_grasp_invariant_and_tracking():
    scene = reset(spec_red_cat(), seed=9)
    scene = _walk_to(scene, scene.objects[0].position)
    scene = step(scene, Action(0.0, 0.0, 1.0))
    scene = step(scene, Action(1.0, 0.0, 1.0))
    assert sum(o.grasped for o in scene.objects) == 1
    assert scene.objects[0].position == scene.body.position


def test_growth_with_water_on_plant():
    spec = SceneSpec(slots=(ObjectConstraint("tree", "green"), ObjectConstraint("water")))
    scene = reset(spec, seed=21)
    water = scene.objects[1]
    scene = _walk_to(scene, water.position)
    scene = step(scene, Action(0.0, 0.0, 1.0))
    assert scene.objects[1].grasped
    tree_size = scene.objects[0].size
    scene = _walk_to(scene, scene.objects[0].position, gripper=1.0)
    tree = scene.objects[0]
    supply = scene.objects[1]
    assert tree.size == pytest.approx(tree_size * world.GROWTH_FACTOR)
    assert supply.consumed and not supply.grasped
    assert supply.position == world.CONSUMED_POSITION


def test_food_does_not_grow_plants():
    spec = SceneSpec(slots=(ObjectConstraint("tree", "green"), ObjectConstraint("food")))
    scene = reset(spec, seed=21)
    scene = _walk_to(scene, scene.objects[1].position)
    scene = step(scene, Action(0.0, 0.0, 1.0))
    scene = _walk_to(scene, scene.objects[0].position, gripper=1.0)
    assert scene.objects[0].size == scene.objects[0].initial_size
    assert not scene.objects[1].consumed


def _object(kind, position, size=0.25, grasped=False):
    return world.ObjectState(
        type=kind, position=position, rgb=(0.8, 0.1, 0.1), size=size,
        grasped=grasped, initial_size=size, initial_position=position,
    )


def test_consumed_supply_cannot_act_again():
    scene = world.SceneState(
        body=world.BodyState((0.0, 0.0), True),
        objects=(
            _object("food", (0.0, 0.0), grasped=True),
            _object("dog", (0.3, 0.0)),
            _object("cat", (-0.6, 0.0)),
        ),
        step_index=0,
    )
    scene = step(scene, Action(1.0, 0.0, 1.0))  # food touches the dog
    food, dog, cat = scene.objects
    assert dog.size == pytest.approx(0.25 * world.GROWTH_FACTOR)
    assert food.consumed and not food.grasped
    assert food.position == world.CONSUMED_POSITION
    grown = dog.size
    # an empty hand dragged across the other animal changes nothing
    for _ in range(8):
        scene = step(scene, Action(-1.0, 0.0, -1.0))
    assert scene.objects[2].size == scene.objects[2].initial_size
    assert scene.objects[1].size == grown
    # and the consumed supply is out of reach of any further grasp
    assert not any(o.grasped for o in scene.objects)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=30))
def test_sizes_never_decrease_and_bounds_hold(seed, actions):
    scene = reset(SceneSpec(slots=(ObjectConstraint("pig"), ObjectConstraint("water"))), seed=seed)
    sizes = [o.size for o in scene.objects]
    for dx, dy, g in actions:
        scene = step(scene, Action(dx, dy, g))
        current = [o.size for o in scene.objects]
        assert all(c >= s for c, s in zip(current, sizes))
        sizes = current
        assert abs(scene.body.position[0]) <= world.WORLD_HALF
        assert abs(scene.body.position[1]) <= world.WORLD_HALF
        assert sum(o.grasped for o in scene.objects) <= 1


def _reference_step(state, action):
    """Independent re-derivation of the dynamics contract, used as an oracle."""
    clamp = lambda v, lo, hi: max(lo, min(hi, v))
    ax = clamp(action.dx, -1.0, 1.0)
    ay = clamp(action.dy, -1.0, 1.0)
    px = clamp(state.body.position[0] + 0.15 * ax, -1.2, 1.2)
    py = clamp(state.body.position[1] + 0.15 * ay, -1.2, 1.2)
    objs = [dict(type=o.type, pos=o.position, rgb=o.rgb, size=o.size, grasped=o.grasped,
                 isize=o.initial_size, ipos=o.initial_position, consumed=o.consumed)
            for o in state.objects]
    held = next((i for i, o in enumerate(objs) if o["grasped"]), None)
    if held is not None:
        objs[held]["pos"] = (px, py)
    closed = action.gripper > 0
    if closed and held is None:
        touching = [
            (math.hypot(px - o["pos"][0], py - o["pos"][1]), i)
            for i, o in enumerate(objs)
            if not o["consumed"]
            and math.hypot(px - o["pos"][0], py - o["pos"][1]) < 0.025 + o["size"] / 2
        ]
        if touching:
            held = min(touching)[1]
            objs[held]["grasped"] = True
            objs[held]["pos"] = (px, py)
    elif not closed and held is not None:
        objs[held]["grasped"] = False
        held = None
    if held is not None and objs[held]["type"] in ("water", "food") and not objs[held]["consumed"]:
        supply = objs[held]
        eligible = []
        for j, o in enumerate(objs):
            if j == held or o["consumed"]:
                continue
            gap = math.hypot(supply["pos"][0] - o["pos"][0], supply["pos"][1] - o["pos"][1])
            if gap >= (supply["size"] + o["size"]) / 2:
                continue
            if o["type"] in ("dog", "cat", "chameleon", "human", "fly", "parrot",
                             "mouse", "lion", "pig", "cow"):
                ok = True
            elif o["type"] in ("cactus", "carnivorous", "flower", "tree", "bush",
                               "grass", "algae", "tea", "rose", "bonsai"):
                ok = supply["type"] == "water"
            else:
                ok = False
            if ok:
                eligible.append((gap, j))
        if eligible:
            j = min(eligible)[1]
            objs[j]["size"] *= 1.5
            supply["grasped"] = False
            supply["consumed"] = True
            supply["pos"] = (-2.0, -2.0)
    return world.SceneState(
        body=world.BodyState((px, py), closed),
        objects=tuple(
            world.ObjectState(
                type=o["type"], position=o["pos"], rgb=o["rgb"], size=o["size"],
                grasped=o["grasped"], initial_size=o["isize"],
                initial_position=o["ipos"], consumed=o["consumed"],
            )
            for o in objs
        ),
        step_index=state.step_index + 1,
        episode_length=state.episode_length,
    )


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 10_000),
    st.lists(
        st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
        min_size=1, max_size=40,
    ),
)
def test_step_matches_independent_reference(seed, actions):
    spec = SceneSpec(slots=(ObjectConstraint("pig"), ObjectConstraint("water")))
    scene = ref = reset(spec, seed=seed)
    for dx, dy, g in actions:
        action = Action(dx, dy, g)
        scene = step(scene, action)
        ref = _reference_step(ref, action)
        assert scene == ref


def test_episode_over():
    scene = reset(SceneSpec(), seed=5, episode_length=2)
    scene = step(scene, Action(0, 0, -1))
    scene = step(scene, Action(0, 0, -1))
    with pytest.raises(EpisodeOver):
        step(scene, Action(0, 0, -1))


def test_observation_layout():
    initial = reset(SceneSpec(), seed=8)
    obs = observation_of(initial, initial)
    assert len(obs) == world.OBS_LENGTH == 240
    assert obs[world.OBS_LENGTH // 2:] == [0.0] * (world.OBS_LENGTH // 2)
    later = step(initial, Action(1.0, 0.0, -1.0))
    obs2 = observation_of(later, initial)
    assert obs2[0] == 0.15
    assert obs2[120] == 0.15  # delta of body x


def test_observation_grasp_flag_flips_once():
    initial = reset(spec_red_cat(), seed=9)
    scene = _walk_to(initial, initial.objects[0].position)
    scene = step(scene, Action(0.0, 0.0, 1.0))
    obs = observation_of(scene, initial)
    grasp_flags = [obs[3 + i * world.OBJECT_BLOCK + world.OBJECT_BLOCK - 1] for i in range(3)]
    assert grasp_flags.count(1.0) == 1


def test_object_centric_view_shape_and_symmetry():
    initial = reset(SceneSpec(), seed=14)
    later = step(initial, Action(0.5, -0.5, -1.0))
    views = object_centric_view(later, initial)
    assert len(views) == 3
    assert all(len(v) == 84 for v in views)
    assert all(v[:3] == views[0][:3] for v in views)
    # permuting objects permutes the sub-states without altering them
    permuted = world.SceneState(
        body=later.body,
        objects=later.objects[::-1],
        step_index=later.step_index,
        episode_length=later.episode_length,
    )
    permuted_initial = world.SceneState(
        body=initial.body,
        objects=initial.objects[::-1],
        step_index=initial.step_index,
        episode_length=initial.episode_length,
    )
    assert object_centric_view(permuted, permuted_initial) == views[::-1]


def test_layout_mismatch_detected():
    a = reset(SceneSpec(), seed=1)
    b = reset(SceneSpec(), seed=2)
    with pytest.raises(LayoutMismatch):
        observation_of(a, b)


def test_scene_dict_round_trip():
    scene = reset(spec_red_cat(), seed=77)
    scene = step(scene, Action(0.3, -0.2, 1.0))
    assert scene_from_dict(scene_to_dict(scene)) == scene
