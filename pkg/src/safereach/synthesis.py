"""Bounded policy synthesis over the goal-constrained belief space.

The outer loop grows a horizon k from the start step, keeping the
initial-belief and transition constraints in the persistent solver scope and
the goal (and any blocking) constraints inside a pushed scope.  Each
satisfying model yields a candidate plan; policy generation then tries to
complete it into a full observation-branching tree by recursively
synthesizing every off-plan branch.  A failed branch produces a blocking
constraint that rules the candidate's prefix out for the current horizon;
when the horizon grows the scope is popped, so previously blocked prefixes
are revisited with the larger budget.

Branch synthesis is bounded by the current horizon k (the bound the outer
loop hands to policy generation), not by the overall bound h; that is what
makes popping blocking constraints meaningful.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import encoding
from .core import (
    Belief,
    BlockEvent,
    CandidatePlan,
    PolicyTree,
    Pomdp,
    SafeReachObjective,
    SynthesisStats,
    belief_update,
    goal_step,
    observation_probability,
)
from .solver import (
    EnumerativeSession,
    Sat,
    SmtLibSession,
    SolverConfig,
    SolverError,
    SolverSession,
    Unknown,
    Unsat,
    extract_plan,
)

log = logging.getLogger(__name__)

SessionFactory = Callable[[], SolverSession]

_MISS = object()


class SynthesisError(RuntimeError):
    """Synthesis could not finish; distinct from "no policy within the bound"."""


class EncodingSoundnessError(SynthesisError):
    """A solver model passed extraction but does not satisfy the objective."""


@dataclass
class SynthesisConfig:
    horizon: int
    backend: str = "enum"  # "enum" or "smtlib"
    solver: SolverConfig = field(default_factory=SolverConfig)
    validate: bool = True
    memoize: bool = False


VERDICT_VALID = "valid"
VERDICT_NO_POLICY = "no-policy-within-bound"
VERDICT_ERROR = "error"


@dataclass
class SynthesisResult:
    verdict: str
    policy: Optional[PolicyTree]
    stats: SynthesisStats
    error: Optional[str] = None


@dataclass(frozen=True)
class Failure:
    """Where policy generation gave up on a candidate plan."""

    plan: CandidatePlan
    fail_step: int
    horizon: int

    def to_event(self) -> BlockEvent:
        cut = self.fail_step - self.plan.start_step
        return BlockEvent(
            horizon=self.horizon,
            fail_step=self.fail_step,
            start_belief=self.plan.beliefs[0],
            actions=self.plan.actions[:cut],
            observations=self.plan.observations[: cut - 1],
        )


def make_session_factory(
    model: Pomdp, config: SynthesisConfig, stats: SynthesisStats
) -> SessionFactory:
    if config.backend == "enum":
        # Fresh sessions per recursion level, but one shared cache of
        # fruitless subtrees: the cached facts are horizon- and
        # blocking-independent, so sharing is sound and saves repeated work.
        shared_cache: set = set()

        def make_enum() -> SolverSession:
            session = EnumerativeSession(model, stats)
            session._fruitless = shared_cache
            return session

        return make_enum
    if config.backend == "smtlib":
        return lambda: SmtLibSession(config.solver, stats)
    raise ValueError(f"unknown backend {config.backend!r}")


def _truncate_at_goal(plan: CandidatePlan, objective: SafeReachObjective) -> CandidatePlan:
    """Cut the plan at its earliest objective-satisfying step.

    Models may pad beyond the goal (the unfolding always spans the full
    horizon); branching on those filler steps would demand synthesis past
    the objective and could block otherwise-valid plans.
    """
    step = goal_step(plan, objective)
    if step is None:
        raise EncodingSoundnessError(
            "solver model decodes to a plan that does not satisfy the objective")
    return plan.prefix(step)


def bps(
    model: Pomdp,
    b_init: Belief,
    objective: SafeReachObjective,
    start_step: int,
    horizon_bound: int,
    session_factory: SessionFactory,
    stats: SynthesisStats,
    memo: Optional[dict] = None,
) -> Optional[PolicyTree]:
    """Search for a valid policy from ``b_init`` within the step budget.

    Returns a policy tree valid from ``b_init`` using at most
    ``horizon_bound - start_step`` steps, or ``None`` when no valid policy
    exists within the bound.  Unknown solver verdicts and backend failures
    raise :class:`SynthesisError`.
    """
    if start_step > horizon_bound:
        return None
    memo_key = (b_init.probs, horizon_bound - start_step)
    if memo is not None:
        hit = memo.get(memo_key, _MISS)
        if hit is not _MISS:
            return hit

    session = session_factory()
    try:
        n = len(model.states)
        all_vars = [encoding.step_vars(start_step, n, start=True)]
        session.add(encoding.initial_constraint(all_vars[0], b_init))
        k = start_step
        while k <= horizon_bound:
            if k > start_step:
                all_vars.append(encoding.step_vars(k, n))
                session.add(encoding.transition_constraint(all_vars[-2], all_vars[-1], model))
            session.push()
            session.add(encoding.goal_constraint(all_vars, objective))
            while True:
                outcome = session.check()
                if isinstance(outcome, Unsat):
                    break
                if isinstance(outcome, Unknown):
                    raise SynthesisError(
                        f"solver returned unknown at horizon {k}: {outcome.reason}")
                assert isinstance(outcome, Sat)
                stats.plans_checked += 1
                plan = extract_plan(outcome.model, all_vars, model)
                if plan.beliefs[0] != b_init:
                    raise EncodingSoundnessError("model start belief differs from b_init")
                plan = _truncate_at_goal(plan, objective)
                stats.interactions += 1
                tree, failure = policy_generation(
                    model, objective, plan, start_step + 1, k,
                    session_factory, stats, memo)
                if tree is not None:
                    stats.final_horizon = max(stats.final_horizon, k)
                    if memo is not None:
                        memo[memo_key] = tree
                    return tree
                assert failure is not None
                session.add(
                    encoding.blocking_constraint(failure.plan, failure.fail_step))
                stats.record_block(failure.to_event())
                log.debug("blocked prefix at horizon %d, fail step %d",
                          k, failure.fail_step)
            session.pop()
            stats.final_horizon = max(stats.final_horizon, k)
            k += 1
        if memo is not None:
            memo[memo_key] = None
        return None
    finally:
        session.close()


def policy_generation(
    model: Pomdp,
    objective: SafeReachObjective,
    plan: CandidatePlan,
    first_step: int,
    bound: int,
    session_factory: SessionFactory,
    stats: SynthesisStats,
    memo: Optional[dict] = None,
) -> tuple[Optional[PolicyTree], Optional[Failure]]:
    """Complete a candidate plan into a policy tree, or report where it fails.

    Walks the plan from its last step down to ``first_step``; at each step
    every other positive-probability observation spawns a recursive
    synthesis problem from the resulting belief, bounded by the current
    horizon.  On the first branch that cannot be completed, returns the
    failing step so the caller can assert the matching blocking constraint.
    Zero-probability observations get no branch (the belief update is
    undefined there); each skip is counted and logged.
    """
    if first_step != plan.start_step + 1:
        raise ValueError("policy generation must start right after the plan's start step")
    subtree = PolicyTree(plan.beliefs[-1], None, {}, True)
    n_obs = len(model.observations)
    for i in range(plan.end_step, plan.start_step, -1):
        idx = i - plan.start_step - 1
        prev_belief = plan.beliefs[idx]
        action = plan.actions[idx]
        on_plan_obs = plan.observations[idx]
        children = {on_plan_obs: subtree}
        for obs in range(n_obs):
            if obs == on_plan_obs:
                continue
            if observation_probability(prev_belief, action, obs, model) == 0:
                stats.zero_probability_skips += 1
                log.debug("step %d: observation %s impossible, no branch",
                          i, model.observations[obs])
                continue
            branch_belief = belief_update(prev_belief, action, obs, model)
            assert branch_belief is not None
            branch = bps(model, branch_belief, objective, i, bound,
                         session_factory, stats, memo)
            if branch is None:
                return None, Failure(plan, i, bound)
            children[obs] = branch
        subtree = PolicyTree(prev_belief, action, children, False)
    return subtree, None


def synthesis_run(
    model: Pomdp,
    b_init: Belief,
    objective: SafeReachObjective,
    config: SynthesisConfig,
) -> SynthesisResult:
    """Top-level driver: synthesize, exhaustively validate, time and count."""
    from .validate import validate_policy

    stats = SynthesisStats()
    factory = make_session_factory(model, config, stats)
    memo: Optional[dict] = {} if config.memoize else None
    started = time.monotonic()
    try:
        policy = bps(model, b_init, objective, 0, config.horizon, factory, stats, memo)
    except (SynthesisError, SolverError) as exc:
        stats.wall_time = time.monotonic() - started
        return SynthesisResult(VERDICT_ERROR, None, stats, error=str(exc))
    stats.wall_time = time.monotonic() - started
    if policy is None:
        return SynthesisResult(VERDICT_NO_POLICY, None, stats)
    if config.validate:
        report = validate_policy(policy, model, objective, config.horizon)
        if not report.valid:
            return SynthesisResult(
                VERDICT_ERROR, policy, stats,
                error=f"synthesized policy failed validation: {report.reason}")
    return SynthesisResult(VERDICT_VALID, policy, stats)
