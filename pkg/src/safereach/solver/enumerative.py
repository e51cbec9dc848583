"""Built-in exact enumerative backend.

Interprets the encoded step structure directly — no constraint AST, no
external process — by depth-first search over action/observation sequences
with exact belief updates.  It serves as the independent oracle for the
symbolic pipeline and as a fast default backend.

Determinism: candidates are explored action index ascending, then
observation index ascending, so the first satisfying plan is the
lexicographically smallest one.  An internal memo of fruitless
(belief, steps-remaining) pairs prunes repeated subtrees; entries are only
recorded on blocking-free subtrees, which keeps them sound to reuse under
any blocking set, and they stay valid across horizons within one session.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence, Union

from ..core import (
    Belief,
    Pomdp,
    SafeReachObjective,
    SynthesisStats,
    available_actions,
    belief_update,
    unnormalized_update,
)
from ..encoding import (
    BlockingInfo,
    EncodedConstraint,
    GoalInfo,
    InitialInfo,
    TransitionInfo,
    action_var_name,
    belief_var_name,
    denom_var_name,
    observation_var_name,
    unnorm_var_name,
)
from .session import (
    Sat,
    SatResult,
    SolverSession,
    SolverUsageError,
    Unsat,
    _record,
)


class EnumerativeSession(SolverSession):
    def __init__(self, model: Pomdp, stats: Optional[SynthesisStats] = None) -> None:
        self.model = model
        self.stats = stats
        self._frames: list[list[EncodedConstraint]] = [[]]
        self._closed = False
        # (objective, belief probs, steps remaining) proven to admit no
        # goal-satisfying completion; see the module docstring for soundness.
        self._fruitless: set[tuple[SafeReachObjective, tuple[Fraction, ...], int]] = set()

    def add(self, constraint: EncodedConstraint) -> None:
        self._guard()
        if constraint.kind not in ("initial", "transition", "goal", "blocking"):
            raise SolverUsageError(f"unsupported constraint kind {constraint.kind!r}")
        self._frames[-1].append(constraint)

    def push(self) -> None:
        self._guard()
        self._frames.append([])

    def pop(self) -> None:
        self._guard()
        if len(self._frames) <= 1:
            raise SolverUsageError("pop with no matching push")
        self._frames.pop()

    def close(self) -> None:
        self._closed = True

    def _guard(self) -> None:
        if self._closed:
            raise SolverUsageError("session is closed")

    # -- structure assembly --------------------------------------------------

    def _assemble(self):
        initials: list[InitialInfo] = []
        transitions: list[TransitionInfo] = []
        goals: list[GoalInfo] = []
        blocks: list[BlockingInfo] = []
        for frame in self._frames:
            for c in frame:
                if isinstance(c.payload, InitialInfo):
                    initials.append(c.payload)
                elif isinstance(c.payload, TransitionInfo):
                    transitions.append(c.payload)
                elif isinstance(c.payload, GoalInfo):
                    goals.append(c.payload)
                elif isinstance(c.payload, BlockingInfo):
                    blocks.append(c.payload)
        if len(initials) != 1:
            raise SolverUsageError("exactly one initial-belief constraint is required")
        start = initials[0].step
        steps = sorted(t.step for t in transitions)
        if steps != list(range(start + 1, start + 1 + len(steps))):
            raise SolverUsageError("transition steps must be contiguous from the start step")
        horizon = start + len(steps)
        for g in goals:
            if g.start_step != start or g.end_step > horizon:
                raise SolverUsageError("goal constraint span does not match the unfolding")
        for bl in blocks:
            if bl.plan.start_step != start or bl.fail_step > horizon:
                raise SolverUsageError("blocking constraint does not match the unfolding")
        return initials[0].belief, start, horizon, goals, blocks

    # -- the search ------------------------------------------------------------

    def check(self) -> SatResult:
        self._guard()
        belief, start, horizon, goals, blocks = self._assemble()
        trail = self._search(belief, start, horizon, goals, blocks)
        kind = "sat" if trail is not None else "unsat"
        _record(self.stats, start, horizon, kind)
        if trail is None:
            return Unsat()
        return Sat(self._to_model(belief, start, trail))

    def _search(self, b0: Belief, start: int, horizon: int,
                goals: Sequence[GoalInfo], blocks: Sequence[BlockingInfo]):
        model = self.model
        n_obs = len(model.observations)
        fired0 = []
        for g in goals:
            if g.objective.is_goal(b0):
                fired0.append(True)
            elif not g.objective.is_safe(b0) or g.end_step <= start:
                return None  # can never fire on this branch
            else:
                fired0.append(False)
        live0 = [bl for bl in blocks if bl.plan.beliefs[0] == b0]
        memo_goal = goals[0] if len(goals) == 1 and goals[0].end_step == horizon else None

        def recurse(belief: Belief, step: int, trail: list, live: list, fired: tuple):
            if step == horizon:
                return list(trail) if all(fired) else None
            if memo_goal is not None and not fired[0] \
                    and (memo_goal.objective, belief.probs, horizon - step) in self._fruitless:
                return None
            for a in available_actions(model, belief):
                if any(bl.fail_step == step + 1
                       and bl.plan.actions[step - bl.plan.start_step] == a
                       for bl in live):
                    continue  # the blocked prefix ends exactly here
                for o in range(n_obs):
                    b2 = belief_update(belief, a, o, model)
                    if b2 is None:
                        continue
                    new_fired = []
                    dead = False
                    for g, was_fired in zip(goals, fired):
                        if was_fired:
                            new_fired.append(True)
                            continue
                        if g.objective.is_goal(b2) and step + 1 <= g.end_step:
                            new_fired.append(True)
                            continue
                        new_fired.append(False)
                        if not g.objective.is_safe(b2) or step + 1 >= g.end_step:
                            dead = True
                            break
                    if dead:
                        continue
                    next_live = [
                        bl for bl in live
                        if bl.fail_step > step + 1
                        and bl.plan.actions[step - bl.plan.start_step] == a
                        and bl.plan.observations[step - bl.plan.start_step] == o
                        and bl.plan.beliefs[step - bl.plan.start_step + 1] == b2
                    ]
                    trail.append((a, o, b2))
                    found = recurse(b2, step + 1, trail, next_live, tuple(new_fired))
                    trail.pop()
                    if found is not None:
                        return found
            if memo_goal is not None and not fired[0] and not live:
                self._fruitless.add((memo_goal.objective, belief.probs, horizon - step))
            return None

        return recurse(b0, start, [], live0, tuple(fired0))

    def _to_model(self, b0: Belief, start: int, trail) -> dict:
        out: dict[str, Union[Fraction, int]] = {}
        for j, p in enumerate(b0.probs):
            out[belief_var_name(start, j)] = p
        prev = b0
        for offset, (a, o, b2) in enumerate(trail):
            step = start + offset + 1
            out[action_var_name(step)] = a
            out[observation_var_name(step)] = o
            unnorm, denom = unnormalized_update(prev, a, o, self.model)
            for j, u in enumerate(unnorm):
                out[unnorm_var_name(step, j)] = u
            out[denom_var_name(step)] = denom
            for j, p in enumerate(b2.probs):
                out[belief_var_name(step, j)] = p
            prev = b2
        return out


def enumerative_check(
    model: Pomdp,
    b_init: Belief,
    start: int,
    horizon: int,
    objective: SafeReachObjective,
    blocks: Sequence[BlockingInfo] = (),
) -> SatResult:
    """One-shot satisfiability of the bounded structure, for tests and tools."""
    from .. import encoding

    session = EnumerativeSession(model)
    all_vars = [encoding.step_vars(start, len(model.states), start=True)]
    session.add(encoding.initial_constraint(all_vars[0], b_init))
    for step in range(start + 1, horizon + 1):
        all_vars.append(encoding.step_vars(step, len(model.states)))
        session.add(encoding.transition_constraint(all_vars[-2], all_vars[-1], model))
    session.add(encoding.goal_constraint(all_vars, objective))
    for bl in blocks:
        session.add(encoding.blocking_constraint(bl.plan, bl.fail_step))
    return session.check()
