import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anonbandits.env import Environment, Instance, RewardFamily, gen_uniform_instance
from anonbandits.feedback import EstimateRecord, elicit, elicit_repeated, plan_groups, schedule
from anonbandits.rng import stream
from spy import SpyEnvironment


def test_exact_division():
    plan = plan_groups(np.zeros(50, int), 4)
    assert plan.sizes == [5] * 10
    assert not plan.skipped_users


def test_remainder_merges_into_last_chunk():
    plan = plan_groups(np.zeros(7, int), 2)
    assert sorted(plan.sizes) == [3, 4]


def test_small_arm_is_skipped():
    plan = plan_groups([0, 0, 0, 1, 1], 2)
    assert plan.skipped_users == {3, 4}
    assert plan.groups == ((0, (0, 1, 2)),)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=60), st.integers(1, 5))
def test_plan_covers_and_bounds(assignment, c):
    a = np.array(assignment)
    plan = plan_groups(a, c)
    seen = []
    for arm, members in plan.groups:
        assert c + 1 <= len(members) <= 2 * c + 1
        assert list(members) == sorted(members)
        assert np.all(a[list(members)] == arm)
        seen += members
    assert len(seen) == len(set(seen))
    counts = np.bincount(a, minlength=4)
    expect = {i for i in range(len(a)) if counts[a[i]] >= c + 1}
    assert set(seen) == expect
    assert plan.skipped_users == set(range(len(a))) - expect


@given(st.lists(st.integers(0, 2), min_size=1, max_size=30), st.integers(1, 4))
def test_schedule_groups_stay_above_floor(assignment, c):
    plan = plan_groups(assignment, c)
    labels, users, group, pos = schedule(plan, len(assignment), c)
    assert labels.shape == (2 * c + 2, len(assignment))
    for r, row in enumerate(labels):
        _, counts = np.unique(row[row >= 0], return_counts=True)
        assert np.all(counts >= c)
        if r == 0:
            assert np.all(counts >= c + 1)
    # each member is dropped in exactly one round
    for u, p in zip(users, pos):
        assert labels[p, u] == -1 and np.sum(labels[:, u] == -1) == 1


def test_deterministic_leave_one_out():
    means = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    env = Environment(Instance(means, 2, 100, RewardFamily.DETERMINISTIC), stream(0, "r"))
    est = elicit(env, [0, 0, 0], 2)
    assert env.t == 6
    assert list(est) == [EstimateRecord(0, 0, 1.0), EstimateRecord(1, 0, 0.0), EstimateRecord(2, 0, 1.0)]


@given(st.integers(0, 2**31), st.integers(1, 3))
def test_deterministic_estimates_exact(seed, c):
    inst = gen_uniform_instance(12, 3, c, 1000, seed=seed)
    inst = Instance(inst.means, c, 1000, RewardFamily.DETERMINISTIC)
    a = np.random.default_rng(seed).integers(0, 3, size=12)
    est = elicit(Environment(inst, stream(seed, "r")), a, c)
    for rec in est:
        assert rec.arm == a[rec.user]
        assert rec.value == pytest.approx(inst.means[rec.user, rec.arm], abs=1e-12)


def test_bernoulli_estimate_mean():
    inst = Instance(np.full((3, 1), 0.5), 2, 600_000)
    est = elicit_repeated(Environment(inst, stream(3, "rewards")), [0, 0, 0], 2, 100_000)
    assert len(est) == 300_000
    for u in range(3):
        assert abs(est.values[est.users == u].mean() - 0.5) <= 0.015


def test_repeated_matches_individual_calls():
    inst = gen_uniform_instance(11, 3, 2, 500, seed=9)
    a = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2, 0, 1])
    env1 = Environment(inst, stream(4, "rewards"))
    env2 = Environment(inst, stream(4, "rewards"))
    parts = [elicit(env1, a, 2) for _ in range(13)]
    block = elicit_repeated(env2, a, 2, 13)
    assert env1.t == env2.t == 13 * 6
    assert np.array_equal(np.concatenate([p.users for p in parts]), block.users)
    assert np.array_equal(np.concatenate([p.values for p in parts]), block.values)
    assert np.array_equal(env1.trace().cumulative_realized_reward, env2.trace().cumulative_realized_reward)


@pytest.mark.parametrize("left", [0, 1, 5])
def test_truncated_elicitation_emits_nothing(left):
    inst = gen_uniform_instance(6, 2, 2, 6 + left, seed=0)
    env = Environment(inst, stream(0, "rewards"))
    env.play(np.zeros(6, int), 6)
    assert len(elicit(env, np.zeros(6, int), 2)) == 0
    assert env.rounds_remaining == 0


def test_repeated_truncation_keeps_full_copies():
    inst = gen_uniform_instance(6, 2, 2, 6 * 3 + 4, seed=0)
    env = Environment(inst, stream(0, "rewards"))
    est = elicit_repeated(env, np.zeros(6, int), 2, 5)
    assert len(est) == 3 * 6
    assert env.rounds_remaining == 0


def test_elicitation_protocol_through_spy():
    inst = gen_uniform_instance(10, 3, 2, 100, seed=1)
    env = SpyEnvironment(inst, stream(1, "rewards"))
    a = np.array([0, 0, 0, 0, 0, 1, 1, 1, 2, 2])
    elicit(env, a, 2)
    assert env.t == 6 and env.open_reads == 0
    assert env.min_group_size() >= 2
    for arm_of, labels in env.blocks:
        assert np.array_equal(arm_of, a)  # assignment never changes within an elicitation
        assert labels.shape[0] == 6
        assert np.all(labels[:, 8:] == -1)  # arm 2 has only two users
