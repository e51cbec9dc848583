from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safereach.core import (
    Belief,
    CandidatePlan,
    LinearBeliefPredicate,
    ModelError,
    Pomdp,
    available_actions,
    belief_update,
    eval_predicate,
    goal_step,
    observation_probability,
    plan_satisfies,
)

from oracles import dense_matrix_update, random_instance


# --------------------------------------------------------------------------
# Belief transition goldens (pick-up model, verified by hand)
# --------------------------------------------------------------------------

POSTERIORS = [
    (0, 0, (F(0), F(1, 25), F(24, 25))),    # left hand, positive observation
    (0, 1, (F(0), F(7, 25), F(18, 25))),    # left hand, negative observation
    (1, 0, (F(1, 20), F(1, 10), F(17, 20))),
    (1, 1, (F(1, 20), F(1, 10), F(17, 20))),
]

EDGE_PROBS = [
    (0, 0, F(3, 4)),
    (0, 1, F(1, 4)),
    (1, 0, F(4, 5)),
    (1, 1, F(1, 5)),
]


@pytest.mark.parametrize("action,obs,expected", POSTERIORS)
def test_pickup_posteriors_exact(pickup, action, obs, expected):
    model, b_init, _ = pickup
    posterior = belief_update(b_init, action, obs, model)
    assert posterior is not None
    assert posterior.probs == expected


@pytest.mark.parametrize("action,obs,expected", EDGE_PROBS)
def test_pickup_observation_probabilities_exact(pickup, action, obs, expected):
    model, b_init, _ = pickup
    assert observation_probability(b_init, action, obs, model) == expected


def test_observation_probabilities_sum_to_one(pickup):
    model, b_init, _ = pickup
    for action in range(2):
        total = sum(observation_probability(b_init, action, o, model) for o in range(3))
        assert total == 1


def test_identity_update_on_deterministic_self_loop():
    model = Pomdp(
        states=("only",),
        actions=("wait",),
        observations=("tick",),
        transition={(0, 0): {0: F(1)}},
        observe={(0, 0): {0: F(1)}},
    )
    b = Belief.point(0, 1)
    assert belief_update(b, 0, 0, model) == b


def test_impossible_observation_returns_none(pickup):
    model, b_init, _ = pickup
    # the null observation never occurs from the initial belief
    assert belief_update(b_init, 0, 2, model) is None
    assert observation_probability(b_init, 0, 2, model) == 0


# --------------------------------------------------------------------------
# Type invariants
# --------------------------------------------------------------------------

def test_belief_rejects_negative_and_unnormalized():
    with pytest.raises(ModelError):
        Belief((F(-1, 2), F(3, 2)))
    with pytest.raises(ModelError):
        Belief((F(1, 2), F(1, 4)))


def test_pomdp_rejects_bad_distributions():
    with pytest.raises(ModelError):
        Pomdp(("s0",), ("a0",), ("o0",),
              transition={(0, 0): {0: F(1, 2)}},
              observe={(0, 0): {0: F(1)}})
    with pytest.raises(ModelError):
        Pomdp(("s0",), ("a0",), ("o0",),
              transition={(0, 0): {0: F(1)}},
              observe={(0, 0): {0: F(2, 3)}})
    with pytest.raises(ModelError):  # missing observation row for reachable landing
        Pomdp(("s0", "s1"), ("a0",), ("o0",),
              transition={(0, 0): {1: F(1)}, (1, 0): {1: F(1)}},
              observe={(0, 0): {0: F(1)}})


def test_predicate_validation():
    with pytest.raises(ModelError):
        LinearBeliefPredicate(frozenset(), ">", F(1, 2))
    with pytest.raises(ModelError):
        LinearBeliefPredicate(frozenset({0}), "!=", F(1, 2))
    with pytest.raises(ModelError):
        LinearBeliefPredicate(frozenset({0}), ">", F(3, 2))


# --------------------------------------------------------------------------
# Predicates and plan satisfaction (objective from the pick-up model)
# --------------------------------------------------------------------------

def test_goal_predicate_on_bad_branch_belief(pickup):
    _, _, objective = pickup
    goal = objective.goal[0]
    assert not eval_predicate(goal, Belief((F(0), F(7, 25), F(18, 25))))
    assert eval_predicate(goal, Belief((F(1, 20), F(1, 10), F(17, 20))))


def test_safe_predicate_trivial_case(pickup):
    _, _, objective = pickup
    safe = objective.safe[0]
    assert eval_predicate(safe, Belief((F(0), F(0), F(1))))


def test_plan_satisfies_good_and_bad_paths(pickup):
    model, b_init, objective = pickup
    good = CandidatePlan(
        0, (b_init, Belief((F(1, 20), F(1, 10), F(17, 20)))), (1,), (0,))
    assert plan_satisfies(good, objective)
    bad = CandidatePlan(
        0, (b_init, Belief((F(0), F(7, 25), F(18, 25)))), (0,), (1,))
    assert not plan_satisfies(bad, objective)


def test_zero_length_plan_in_goal_satisfies(pickup):
    _, _, objective = pickup
    at_goal = CandidatePlan(3, (Belief((F(0), F(0), F(1))),), (), ())
    assert plan_satisfies(at_goal, objective)
    assert goal_step(at_goal, objective) == 3


def test_plan_prefix_helper(pickup):
    model, b_init, objective = pickup
    b1 = belief_update(b_init, 1, 0, model)
    plan = CandidatePlan(0, (b_init, b1), (1,), (0,))
    assert plan.prefix(0).beliefs == (b_init,)
    assert plan.prefix(1) == plan


def test_available_actions_respects_support():
    model = Pomdp(
        states=("a", "b"),
        actions=("both", "only_a"),
        observations=("o",),
        transition={(0, 0): {0: F(1)}, (1, 0): {1: F(1)}, (0, 1): {0: F(1)}},
        observe={(0, 0): {0: F(1)}, (1, 0): {0: F(1)}, (0, 1): {0: F(1)}},
        availability={0: frozenset({0, 1}), 1: frozenset({0})},
    )
    assert available_actions(model, Belief.point(0, 2)) == [0, 1]
    assert available_actions(model, Belief.point(1, 2)) == [0]
    assert available_actions(model, Belief((F(1, 2), F(1, 2)))) == [0]


# --------------------------------------------------------------------------
# Properties on random models
# --------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_update_matches_matrix_form_and_probs_sum(seed):
    model, b_init, _, _ = random_instance(random.Random(seed))
    belief = b_init
    for action in range(len(model.actions)):
        total = F(0)
        for obs in range(len(model.observations)):
            p = observation_probability(belief, action, obs, model)
            total += p
            mine = belief_update(belief, action, obs, model)
            oracle = dense_matrix_update(belief, action, obs, model)
            assert mine == oracle
            if mine is not None:
                assert sum(mine.probs) == 1
                assert all(x >= 0 for x in mine.probs)
        assert total == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000),
       st.fractions(min_value=0, max_value=1))
def test_predicate_monotone_in_threshold(seed, threshold):
    model, b_init, _, _ = random_instance(random.Random(seed))
    b = belief_update(b_init, 0, 0, model) or b_init
    members = frozenset(range(len(model.states) // 2 + 1))
    pred = LinearBeliefPredicate(members, ">", F(threshold))
    if eval_predicate(pred, b):
        for lower in (F(threshold) / 2, F(threshold) * F(3, 4)):
            assert eval_predicate(LinearBeliefPredicate(members, ">", lower), b)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_plan_satisfaction_is_prefix_extendable(seed):
    rng = random.Random(seed)
    model, b_init, objective, _ = random_instance(rng)
    beliefs = [b_init]
    actions, observations = [], []
    for _ in range(4):
        action = rng.randrange(len(model.actions))
        options = [o for o in range(len(model.observations))
                   if observation_probability(beliefs[-1], action, o, model) > 0]
        obs = rng.choice(options)
        beliefs.append(belief_update(beliefs[-1], action, obs, model))
        actions.append(action)
        observations.append(obs)
    full = CandidatePlan(0, tuple(beliefs), tuple(actions), tuple(observations))
    step = goal_step(full, objective)
    if step is not None:
        for end in range(step, full.end_step + 1):
            assert plan_satisfies(full.prefix(end), objective)
