"""Independent policy checking: exhaustive path enumeration and simulation.

The validator is the trust anchor: it recomputes every child belief with the
exact belief update (stored values are compared, never trusted), demands a
branch for every positive-probability observation, and checks each
root-to-leaf path against the objective.  It uses only the core model
operations, nothing from the synthesis machinery, and knows no tolerances.

The simulator executes a policy against sampled hidden states; its
frequencies come with Wilson intervals and are diagnostics only, never a
validity gate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Belief,
    CandidatePlan,
    ModelError,
    PolicyTree,
    Pomdp,
    SafeReachObjective,
    available_actions,
    belief_update,
    observation_probability,
    plan_satisfies,
)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    paths: int
    reason: Optional[str] = None
    counterexample: Optional[CandidatePlan] = None


def _path_plan(beliefs: list[Belief], actions: list[int], observations: list[int]) -> CandidatePlan:
    return CandidatePlan(0, tuple(beliefs), tuple(actions), tuple(observations))


def validate_policy(
    policy: PolicyTree,
    model: Pomdp,
    objective: SafeReachObjective,
    horizon: int,
) -> ValidationReport:
    """Exhaustively check a policy tree against model semantics and objective.

    Valid iff every internal node's action is available on its belief, its
    children cover exactly the positive-probability observations with
    exactly the updated beliefs, no path exceeds the horizon, goal flags do
    not lie, and every root-to-leaf path (read as a plan) satisfies the
    objective.  The first violation is reported with the path that led
    there.
    """
    paths_seen = 0

    def fail(reason: str, beliefs, actions, observations) -> ValidationReport:
        counterexample = None
        try:
            counterexample = _path_plan(beliefs, actions, observations)
        except ModelError:  # malformed path is still a useful reason string
            pass
        return ValidationReport(False, paths_seen, reason, counterexample)

    def walk(node: PolicyTree, beliefs, actions, observations) -> Optional[ValidationReport]:
        nonlocal paths_seen
        if node.goal_reached and not objective.is_goal(node.belief):
            return fail("goal_reached flag on a non-goal belief", beliefs, actions, observations)
        if node.action is None:
            paths_seen += 1
            if len(actions) > horizon:
                return fail("path exceeds the horizon bound", beliefs, actions, observations)
            plan = _path_plan(beliefs, actions, observations)
            if not plan_satisfies(plan, objective):
                return fail("path does not satisfy the objective", beliefs, actions, observations)
            return None
        if node.action not in available_actions(model, node.belief):
            return fail(
                f"action {model.actions[node.action]} unavailable on the node belief",
                beliefs, actions, observations)
        required = {
            o for o in range(len(model.observations))
            if observation_probability(node.belief, node.action, o, model) > 0
        }
        present = set(node.children)
        if required - present:
            missing = ", ".join(model.observations[o] for o in sorted(required - present))
            return fail(f"missing branch for observation(s) {missing}",
                        beliefs, actions, observations)
        if present - required:
            extra = ", ".join(model.observations[o] for o in sorted(present - required))
            return fail(f"branch for impossible observation(s) {extra}",
                        beliefs, actions, observations)
        for o in sorted(node.children):
            child = node.children[o]
            derived = belief_update(node.belief, node.action, o, model)
            assert derived is not None  # o is in the required set
            if derived != child.belief:
                return fail(
                    f"stored child belief differs from the exact update on "
                    f"observation {model.observations[o]}",
                    beliefs + [derived], actions + [node.action], observations + [o])
            report = walk(child, beliefs + [derived],
                          actions + [node.action], observations + [o])
            if report is not None:
                return report
        return None

    violation = walk(policy, [policy.belief], [], [])
    if violation is not None:
        return violation
    return ValidationReport(True, paths_seen)


@dataclass
class SimulationReport:
    episodes: int
    goal_reached: int
    unsafe_visited: int
    goal_freq: float = field(init=False)
    unsafe_visit_freq: float = field(init=False)
    goal_interval: tuple[float, float] = field(init=False)
    unsafe_interval: tuple[float, float] = field(init=False)
    traces: list[list[tuple[int, int, int]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.goal_freq = self.goal_reached / self.episodes
        self.unsafe_visit_freq = self.unsafe_visited / self.episodes
        self.goal_interval = wilson_interval(self.goal_reached, self.episodes)
        self.unsafe_interval = wilson_interval(self.unsafe_visited, self.episodes)


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    margin = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


def _sample(rng: random.Random, dist: dict) -> int:
    # Exact-rational CDF walk; the float draw only selects, never rounds model
    # probabilities.
    draw = rng.random()
    acc = 0.0
    last = None
    for key in sorted(dist):
        p = dist[key]
        if p == 0:
            continue
        acc += float(p)
        last = key
        if draw < acc:
            return key
    assert last is not None, "cannot sample from an empty distribution"
    return last


def simulate(
    policy: PolicyTree,
    model: Pomdp,
    objective: SafeReachObjective,
    episodes: int,
    seed: int = 0,
    max_traces: int = 10,
    initial: Optional[Belief] = None,
) -> SimulationReport:
    """Execute the policy against sampled hidden states.

    Per episode: sample the true state from the root belief (or the
    ``initial`` override), then follow the tree, sampling a successor from T
    and an observation from Z at each action node.  Counts episodes that
    ever visit a goal-predicate state and episodes that ever visit a
    safety-predicate state.  Reproducible under a fixed seed.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    goal_states = frozenset().union(*(p.state_set for p in objective.goal))
    unsafe_states = frozenset().union(*(p.state_set for p in objective.safe)) \
        if objective.safe else frozenset()
    rng = random.Random(seed)
    start_belief = initial if initial is not None else policy.belief
    init_dist = {j: p for j, p in enumerate(start_belief.probs) if p > 0}
    goal_count = 0
    unsafe_count = 0
    traces: list[list[tuple[int, int, int]]] = []
    for episode in range(episodes):
        state = _sample(rng, init_dist)
        node = policy
        hit_goal = state in goal_states
        hit_unsafe = state in unsafe_states
        trace: list[tuple[int, int, int]] = []
        while node.action is not None:
            action = node.action
            state = _sample(rng, dict(model.trans_dist(state, action)))
            obs = _sample(rng, dict(model.obs_dist(state, action)))
            hit_goal = hit_goal or state in goal_states
            hit_unsafe = hit_unsafe or state in unsafe_states
            trace.append((action, state, obs))
            child = node.children.get(obs)
            assert child is not None, (
                "simulator bug: sampled an observation with no policy branch")
            node = child
        goal_count += hit_goal
        unsafe_count += hit_unsafe
        if episode < max_traces:
            traces.append(trace)
    return SimulationReport(episodes, goal_count, unsafe_count, traces=traces)
