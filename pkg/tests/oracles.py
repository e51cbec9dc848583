"""Independent oracles the tests check the library against.

Everything here is deliberately naive: direct recursion, dense matrix
arithmetic, exhaustive enumeration.  None of it shares code paths with the
encoding, the solver backends or the synthesis loops.
"""

from __future__ import annotations

import random
from fractions import Fraction

from safereach.core import (
    Belief,
    LinearBeliefPredicate,
    Pomdp,
    SafeReachObjective,
)


def dense_matrix_update(belief: Belief, action: int, observation: int, model: Pomdp):
    """Matrix-form belief update: dense push-forward, then weight and normalize."""
    n = len(model.states)
    t_matrix = [[model.trans_dist(s, action).get(s2, Fraction(0)) for s2 in range(n)]
                for s in range(n)]
    pushed = [sum(belief[s] * t_matrix[s][s2] for s in range(n)) for s2 in range(n)]
    weighted = [model.obs_dist(s2, action).get(observation, Fraction(0)) * pushed[s2]
                for s2 in range(n)]
    total = sum(weighted)
    if total == 0:
        return None
    return Belief(tuple(w / total for w in weighted))


def brute_force_feasible(
    model: Pomdp,
    objective: SafeReachObjective,
    belief: Belief,
    budget: int,
    _memo: dict | None = None,
) -> bool:
    """Does a valid policy tree of height <= budget exist from this belief?

    Direct recursion on the objective semantics: a goal belief is done
    (regardless of its own safety); otherwise the belief must be safe and
    some available action must work for every possible observation.
    """
    if _memo is None:
        _memo = {}
    key = (belief.probs, budget)
    if key in _memo:
        return _memo[key]
    if objective.is_goal(belief):
        _memo[key] = True
        return True
    result = False
    if budget > 0 and objective.is_safe(belief):
        for action in range(len(model.actions)):
            support = belief.support()
            if any(action not in model.allowed_actions(s) for s in support):
                continue
            branches_ok = True
            any_branch = False
            for obs in range(len(model.observations)):
                child = _posterior(belief, action, obs, model)
                if child is None:
                    continue
                any_branch = True
                if not brute_force_feasible(model, objective, child, budget - 1, _memo):
                    branches_ok = False
                    break
            if any_branch and branches_ok:
                result = True
                break
    _memo[key] = result
    return result


def _posterior(belief: Belief, action: int, obs: int, model: Pomdp):
    return dense_matrix_update(belief, action, obs, model)


def enumerate_plans(model: Pomdp, belief: Belief, length: int):
    """Every (actions, observations, beliefs) sequence of exactly ``length``
    steps with positive probability, action availability respected."""
    if length == 0:
        yield (), (), (belief,)
        return
    for a in range(len(model.actions)):
        if any(a not in model.allowed_actions(s) for s in belief.support()):
            continue
        for o in range(len(model.observations)):
            child = _posterior(belief, a, o, model)
            if child is None:
                continue
            for acts, obss, bels in enumerate_plans(model, child, length - 1):
                yield (a,) + acts, (o,) + obss, (belief,) + bels


def satisfies_bounded(beliefs, objective: SafeReachObjective) -> bool:
    """Formula-2 semantics on a belief sequence, computed the obvious way."""
    for i, b in enumerate(beliefs):
        if objective.is_goal(b) and all(objective.is_safe(p) for p in beliefs[:i]):
            return True
    return False


# --------------------------------------------------------------------------
# Constraint AST evaluation under a complete assignment
# --------------------------------------------------------------------------

def eval_term(term, env):
    """Evaluate an encoding AST term under a complete variable assignment."""
    from safereach import encoding as enc

    if isinstance(term, enc.RConst):
        return term.value
    if isinstance(term, enc.IConst):
        return term.value
    if isinstance(term, (enc.RVar, enc.IVar)):
        return env[term.name]
    if isinstance(term, enc.BoolConst):
        return term.value
    if isinstance(term, enc.Add):
        return sum(eval_term(a, env) for a in term.args)
    if isinstance(term, enc.Mul):
        out = Fraction(1)
        for a in term.args:
            out *= eval_term(a, env)
        return out
    if isinstance(term, enc.Eq):
        return eval_term(term.lhs, env) == eval_term(term.rhs, env)
    if isinstance(term, enc.Le):
        return eval_term(term.lhs, env) <= eval_term(term.rhs, env)
    if isinstance(term, enc.Lt):
        return eval_term(term.lhs, env) < eval_term(term.rhs, env)
    if isinstance(term, enc.Not):
        return not eval_term(term.arg, env)
    if isinstance(term, enc.And):
        return all(eval_term(a, env) for a in term.args)
    if isinstance(term, enc.Or):
        return any(eval_term(a, env) for a in term.args)
    if isinstance(term, enc.Ite):
        return eval_term(term.then if eval_term(term.cond, env) else term.other, env)
    raise TypeError(f"unknown term {term!r}")


def transition_env(prev_belief: Belief, cur_belief: Belief, action: int, obs: int,
                   model: Pomdp, prev_step: int, cur_step: int):
    """A complete assignment for one transition step, from first principles."""
    from safereach import encoding as enc

    n = len(model.states)
    env = {enc.action_var_name(cur_step): action, enc.observation_var_name(cur_step): obs}
    for j in range(n):
        env[enc.belief_var_name(prev_step, j)] = prev_belief[j]
        env[enc.belief_var_name(cur_step, j)] = cur_belief[j]
    pushed = [sum(prev_belief[s] * model.trans_dist(s, action).get(s2, Fraction(0))
                  for s in range(n)) for s2 in range(n)]
    unnorm = [model.obs_dist(s2, action).get(obs, Fraction(0)) * pushed[s2]
              for s2 in range(n)]
    for j in range(n):
        env[enc.unnorm_var_name(cur_step, j)] = unnorm[j]
    env[enc.denom_var_name(cur_step)] = sum(unnorm)
    return env


# --------------------------------------------------------------------------
# Randomized model suite
# --------------------------------------------------------------------------

GOAL_THRESHOLDS = (Fraction(1, 2), Fraction(3, 5), Fraction(7, 10), Fraction(4, 5))
SAFE_THRESHOLDS = (Fraction(1, 5), Fraction(3, 10), Fraction(2, 5))


def random_instance(rng: random.Random, max_states: int = 5, max_actions: int = 3,
                    max_obs: int = 2, max_horizon: int = 4):
    """A random small synthesis problem (model, initial belief, objective, horizon)."""
    n = rng.randint(2, max_states)
    na = rng.randint(2, max_actions)
    no = rng.randint(1, max_obs)
    states = tuple(f"s{i}" for i in range(n))
    actions = tuple(f"a{i}" for i in range(na))
    observations = tuple(f"o{i}" for i in range(no))
    transition = {}
    observe = {}
    for s in range(n):
        for a in range(na):
            succs = rng.sample(range(n), rng.randint(1, min(3, n)))
            weights = [rng.randint(1, 4) for _ in succs]
            total = sum(weights)
            transition[(s, a)] = {s2: Fraction(w, total) for s2, w in zip(succs, weights)}
    for s2 in range(n):
        for a in range(na):
            weights = [rng.randint(0, 3) for _ in range(no)]
            if sum(weights) == 0:
                weights[rng.randrange(no)] = 1
            total = sum(weights)
            observe[(s2, a)] = {o: Fraction(w, total) for o, w in enumerate(weights) if w}
    model = Pomdp(states, actions, observations, transition, observe)
    b_init = Belief.point(0, n)
    goal_set = frozenset(rng.sample(range(n), rng.randint(1, 2)))
    safe_set = frozenset(rng.sample(range(n), rng.randint(1, 2)))
    objective = SafeReachObjective(
        (LinearBeliefPredicate(goal_set, ">", rng.choice(GOAL_THRESHOLDS)),),
        (LinearBeliefPredicate(safe_set, "<", rng.choice(SAFE_THRESHOLDS)),),
    )
    horizon = rng.randint(1, max_horizon)
    return model, b_init, objective, horizon
