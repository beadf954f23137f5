"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report as it executes. The exact-inventory check of the goal-imagination
criterion is expected to fail by four sentences; the assertion message and
the README's fidelity notes carry the analysis.
"""

import hashlib
import pathlib
import sys
import time

import pytest
import scipy.stats

from playpen import grammar, imagination
from playpen.agents import run_episode
from playpen.episodes import EpisodeLogWriter, record_trajectory, replay_log
from playpen.metrics import i2c, interaction_set, welch_ttest
from playpen.replay import RewardDatasetEmitter, hindsight_batches, hindsight_relabel
from playpen.rng import SplitMix64, derive_seed
from playpen.social import SPConfig, describe, to_goals
from playpen.world import observation_of

DATA = pathlib.Path(__file__).parent / "data"
SPLIT = grammar.split_train_test()
ACHIEVABLE = SPLIT.train + SPLIT.test
SILENT = SPConfig(presence="probability", presence_value=0.0)


def report(name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] {status} {name}: {detail}", file=sys.stderr, flush=True)


def imagined_full_train() -> set:
    return imagination.imagine(imagination.build_state(SPLIT.train))


# --- grammar fidelity --------------------------------------------------------

def test_grammar_fidelity():
    t0 = time.monotonic()
    goals = grammar.enumerate_achievable()
    rows = [line.split("\t") for line in (DATA / "test_split_64.tsv").read_text().splitlines()]
    table = {sentence: int(kind) for kind, sentence in rows}
    type_counts = [list(table.values()).count(k) for k in (1, 2, 3, 4, 5)]
    elapsed = time.monotonic() - t0
    ok = (
        len(goals) == 255
        and set(SPLIT.test) == set(table)
        and SPLIT.test_types == table
        and type_counts == [4, 8, 4, 4, 44]
        and elapsed < 1.0
    )
    report(
        "grammar fidelity",
        ok,
        f"255 achievable (the printed grammar expands to 255, not the claimed 256; "
        f"see README), test split == 64-sentence table with types {type_counts}, "
        f"{elapsed:.3f}s",
    )
    assert len(goals) == 255  # direct expansion; documented divergence from the claimed 256
    assert set(SPLIT.test) == set(table) and SPLIT.test_types == table
    assert type_counts == [4, 8, 4, 4, 44]
    assert elapsed < 1.0


# --- construction-grammar imagination ---------------------------------------

def test_cgh_coverage_and_precision():
    t0 = time.monotonic()
    imagined = imagined_full_train()
    coverage, precision = imagination.coverage_precision(imagined, SPLIT.test, ACHIEVABLE)
    plausible = [g for g in imagined if grammar.plausible_shape(g)]
    precision_plausible = len(set(plausible) & set(ACHIEVABLE)) / len(plausible)
    elapsed = time.monotonic() - t0
    ok = (
        coverage == 0.875
        and 0.40 <= precision <= 0.46
        and 0.40 <= precision_plausible <= 0.46
        and elapsed < 1.0
    )
    report(
        "cgh coverage/precision",
        ok,
        f"coverage={coverage} precision(all)={precision:.4f} "
        f"precision(plausible-only)={precision_plausible:.4f} in {elapsed:.3f}s",
    )
    assert coverage == 0.875
    assert 0.40 <= precision <= 0.46
    assert 0.40 <= precision_plausible <= 0.46
    assert elapsed < 1.0


def test_cgh_exact_table_match():
    imagined = imagined_full_train()
    table = set((DATA / "imaginable_goals_136.txt").read_text().splitlines())
    missing = sorted(table - imagined)
    extra = sorted(imagined - table)
    ok = len(imagined) == 136 and not missing and not extra
    report(
        "cgh exact table match",
        ok,
        f"|imagined|={len(imagined)} missing={len(missing)} extra={extra or 0}",
    )
    assert ok, (
        f"composed {len(imagined)} sentences; the reference inventory "
        f"(tests/data/imaginable_goals_136.txt) has 136. "
        f"Missing: {missing}. Extra: {extra}. The four extra sentences are the "
        "predicate mirrors of the inventory's grow-thing entries; no uniform "
        "recombination mechanism can produce that grasp/grow asymmetry while "
        "also reaching the inventory's two-substitution go compounds. "
        "See README, Fidelity notes."
    )


def test_variant_properties():
    base = imagined_full_train()
    oracle = imagination.apply_variant(base, "oracle", SplitMix64(0), SPLIT.test, SPLIT.train)
    oracle_cov, oracle_pre = imagination.coverage_precision(oracle, SPLIT.test, ACHIEVABLE)

    coverages = []
    for k in range(50):
        low = imagination.apply_variant(
            base, "low_coverage", SplitMix64(derive_seed(11, f"lc-{k}")), SPLIT.test, SPLIT.train
        )
        coverages.append(imagination.coverage_precision(low, SPLIT.test, ACHIEVABLE)[0])
    mean_low = sum(coverages) / len(coverages)

    rnd = imagination.apply_variant(base, "random", SplitMix64(5), SPLIT.test, SPLIT.train)
    rnd_cov, rnd_pre = imagination.coverage_precision(rnd, SPLIT.test, ACHIEVABLE)

    ok = (
        (oracle_cov, oracle_pre) == (1.0, 1.0)
        and abs(mean_low - 0.44) <= 0.05
        and rnd_cov < 0.02
        and rnd_pre < 0.02
    )
    report(
        "variant properties",
        ok,
        f"oracle=({oracle_cov},{oracle_pre}) low-coverage mean={mean_low:.4f} "
        f"random=({rnd_cov:.4f},{rnd_pre:.4f})",
    )
    assert (oracle_cov, oracle_pre) == (1.0, 1.0)
    assert mean_low == pytest.approx(0.44, abs=0.05)
    assert rnd_cov < 0.02 and rnd_pre < 0.02


# --- scripted competence ------------------------------------------------------

def test_scripted_competence():
    from playpen.metrics import mean_success_rate

    t0 = time.monotonic()
    sr_bar, per_goal = mean_success_rate(
        "scripted", SPLIT.train, n=30, base_seed=2024, sp_cfg=SILENT
    )
    elapsed = time.monotonic() - t0
    ok = sr_bar >= 0.95 and elapsed < 300
    report(
        "scripted competence",
        ok,
        f"SR-bar={sr_bar:.4f} over {len(per_goal)} goals x 30 episodes in {elapsed:.0f}s",
    )
    assert sr_bar >= 0.95
    assert elapsed < 300


# --- social partner contract --------------------------------------------------

def test_sp_contract():
    rng = SplitMix64(99)
    train_set = set(SPLIT.train)
    test_set = set(SPLIT.test)
    checked = 0
    for i in range(1000):
        goal = rng.choice(ACHIEVABLE)
        policy = "scripted" if i % 2 == 0 else "random"
        final = run_episode(policy, goal, SILENT, derive_seed(31, f"sp-{i}")).final
        feedback = describe(final, SPConfig(), SplitMix64(derive_seed(32, f"sp-{i}")))
        described = to_goals(feedback.positives)
        expected = {g for g in train_set if grammar.holds(g, final)}
        assert described == expected, f"episode {i}: SP output diverged from the oracle"
        assert described.isdisjoint(test_set)
        checked += 1
    report("sp contract", True, f"{checked} terminal states, exhaustive + precise, 0 leaks")


# --- exploration effect ---------------------------------------------------------

def _exploration_campaign(campaign_seed: int, enabled: bool, imagined, n: int = 600):
    rng = SplitMix64(campaign_seed)
    known = list(SPLIT.train)
    finals = []
    for i in range(n):
        goal = imagination.sample_target(known, imagined, enabled, rng.spawn(f"target-{i}"))
        finals.append(
            run_episode(
                "scripted", goal, SILENT, derive_seed(campaign_seed, f"episode-{i}")
            ).final
        )
    return finals


@pytest.fixture(scope="module")
def exploration_counts():
    imagined = sorted(imagined_full_train())
    sets = {name: interaction_set(name) for name in ("train", "test", "extra")}
    t0 = time.monotonic()
    counts = {}
    for condition, enabled in (("off", False), ("on", True)):
        per = {name: [] for name in sets}
        for k in range(10):
            seed = derive_seed(0, f"explore-{condition}-{k}")
            finals = _exploration_campaign(seed, enabled, imagined if enabled else [])
            for name, iset in sets.items():
                per[name].append(i2c(finals, iset, window=600))
        counts[condition] = per
    counts["elapsed"] = time.monotonic() - t0
    return counts


def test_exploration_boost_on_test_and_extra(exploration_counts):
    elapsed = exploration_counts["elapsed"]
    details = []
    ok = elapsed < 900
    for name in ("test", "extra"):
        off = exploration_counts["off"][name]
        on = exploration_counts["on"][name]
        w = welch_ttest(off, on)
        strict = min(on) > max(off)
        ok = ok and strict and w.p_value < 0.05 and sum(on) > sum(off)
        details.append(f"{name}: {sum(off)/10:.0f} -> {sum(on)/10:.0f} p={w.p_value:.2e} strict={strict}")
    report("exploration boost (test/extra)", ok, "; ".join(details) + f"; {elapsed:.0f}s")
    assert ok, details


def test_exploration_train_not_significantly_lower(exploration_counts):
    off = exploration_counts["off"]["train"]
    on = exploration_counts["on"]["train"]
    w = welch_ttest(off, on)
    lower = sum(on) < sum(off)
    ok = not (lower and w.significant)
    report(
        "exploration train parity",
        ok,
        f"train: {sum(off)/10:.0f} -> {sum(on)/10:.0f} p={w.p_value:.3f} "
        f"(significantly lower: {lower and w.significant})",
    )
    assert ok, (off, on, w)


# --- dataset contracts ----------------------------------------------------------

@pytest.fixture(scope="module")
def described_episodes():
    rng = SplitMix64(888)
    episodes = []
    for i in range(400):
        goal = rng.choice(SPLIT.train)
        episodes.append(
            run_episode("scripted", goal, SPConfig(), derive_seed(77, f"data-{i}"),
                        keep_transitions=True)
        )
    return episodes


def test_reward_dataset_contract(described_episodes):
    emitter = RewardDatasetEmitter.from_trajectories(described_episodes, SPLIT.train)
    # every pool label agrees with the oracle on the decoded final state
    from playpen.episodes import decode_observation

    mismatches = 0
    for example in emitter.examples():
        state = decode_observation(list(example.observation), 50, 50)
        mismatches += grammar.holds(example.goal, state) != bool(example.label)
    assert mismatches == 0

    rng = SplitMix64(3)
    totals = {g: [0, 0] for g in emitter.goals}
    n_batches = 100
    coverage_ok = True
    for batch in emitter.batches(rng, n_batches=n_batches, batch_size=512):
        assert len(batch) == 512
        goals_in_batch = {e.goal for e in batch}
        coverage_ok = coverage_ok and goals_in_batch == set(emitter.goals)
        for e in batch:
            totals[e.goal][0] += e.label
            totals[e.goal][1] += 1
    balanced = [
        g for g in emitter.goals
        if g not in emitter.missing_positives and emitter.negative_ids[g]
    ]
    ratios = [totals[g][0] / totals[g][1] for g in balanced]
    worst = max(abs(r - 0.2) for r in ratios)
    ok = coverage_ok and worst <= 0.02 and mismatches == 0
    report(
        "reward dataset contract",
        ok,
        f"{n_batches} batches of 512, every goal present={coverage_ok}, "
        f"worst per-goal |ratio-0.2|={worst:.4f} over {len(ratios)} goals, "
        f"label/oracle mismatches={mismatches}",
    )
    assert coverage_ok
    assert worst <= 0.02


def test_hindsight_contract(described_episodes):
    transitions = [tr for t in described_episodes[:100] for tr in t.transitions]
    candidates = list(SPLIT.train) + sorted(imagined_full_train())
    relabeled = hindsight_relabel(transitions, candidates, SplitMix64(41))
    mismatches = 0
    for item in relabeled:
        try:
            expected = grammar.holds(item.goal, item.transition[2])
        except grammar.NotInGrammar:
            expected = False
        mismatches += item.reward != int(expected)
    fractions = []
    for batch in hindsight_batches(
        transitions, candidates, SplitMix64(42), n_batches=50, batch_size=256
    ):
        fractions.append(sum(item.reward for item in batch) / len(batch))
    mean_fraction = sum(fractions) / len(fractions)
    ok = mismatches == 0 and abs(mean_fraction - 0.5) <= 0.03
    report(
        "hindsight contract",
        ok,
        f"labels==oracle on {len(relabeled)} transitions (mismatches={mismatches}), "
        f"batch positive fraction={mean_fraction:.4f}",
    )
    assert mismatches == 0
    assert mean_fraction == pytest.approx(0.5, abs=0.03)


# --- determinism -----------------------------------------------------------------

GOLDEN_LOG_SHA256 = "b78d2ed068c2ec37fc4431c80392e4f3fe9b97e04ad99b7ed6752f51c9f7471b"


def _write_canonical_log(path):
    goals = ["grasp red cat", "grow any pig", "go top left", "grow red lamp"]
    with EpisodeLogWriter(str(path), {"seed": 123, "note": "determinism probe"}) as writer:
        for i, goal in enumerate(goals):
            t = run_episode("scripted", goal, SPConfig(), derive_seed(123, f"det-{i}"),
                            keep_transitions=True)
            writer.append(record_trajectory(i, t))


def test_determinism(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    _write_canonical_log(a)
    _write_canonical_log(b)
    identical = a.read_bytes() == b.read_bytes()
    digest = hashlib.sha256(a.read_bytes()).hexdigest()
    replayed = replay_log(str(a))
    ok = identical and replayed == 4 and digest == GOLDEN_LOG_SHA256
    report(
        "determinism",
        ok,
        f"two runs byte-identical={identical}, replay reproduces observations "
        f"({replayed} episodes), sha256 pinned={digest == GOLDEN_LOG_SHA256}",
    )
    assert identical
    assert replayed == 4
    assert digest == GOLDEN_LOG_SHA256, f"canonical log digest drifted: {digest}"


# --- statistics ------------------------------------------------------------------

def test_statistics_oracle_agreement():
    rng = SplitMix64(77)
    worst = 0.0
    for _ in range(100):
        n1, n2 = 2 + rng.randrange(40), 2 + rng.randrange(40)
        scale = 1.0 + rng.uniform(0, 3)
        a = [rng.uniform(-scale, scale) for _ in range(n1)]
        b = [rng.uniform(-1, 1) + rng.uniform(0, 1) for _ in range(n2)]
        ours = welch_ttest(a, b)
        _ref_t, ref_p = scipy.stats.ttest_ind(a, b, equal_var=False)
        worst = max(worst, abs(ours.p_value - ref_p))
    ok = worst < 1e-6
    report("statistics vs reference oracle", ok, f"worst |dp|={worst:.2e} over 100 pairs")
    assert worst < 1e-6
