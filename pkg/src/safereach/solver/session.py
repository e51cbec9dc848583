"""Session interface shared by the solver backends, plus plan extraction."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from ..core import Belief, CandidatePlan, ModelError, Pomdp, SynthesisStats, belief_update
from ..encoding import EncodedConstraint, StepVars


class SolverError(RuntimeError):
    """Backend failure; the session is dead once this is raised."""


class SolverUsageError(SolverError):
    """Caller misuse, e.g. pop on an empty scope stack."""


class PlanDecodeError(SolverError):
    """A satisfying model did not decode to a consistent belief-space plan."""


@dataclass(frozen=True)
class Sat:
    model: Mapping[str, Union[Fraction, int]]


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


SatResult = Union[Sat, Unsat, Unknown]


@dataclass(frozen=True)
class SolverConfig:
    """External-backend knobs; ``command=None`` selects the bundled solver."""

    command: Optional[tuple[str, ...]] = None
    check_timeout: float = 60.0
    incremental: bool = True
    logic: str = "QF_NIRA"


class SolverSession(ABC):
    """An incremental satisfiability session with a stack of assertion scopes.

    Sessions are single-owner: never share one across threads.  Distinct
    sessions may run concurrently.
    """

    @abstractmethod
    def add(self, constraint: EncodedConstraint) -> None:
        """Assert a constraint into the current (top) scope."""

    @abstractmethod
    def push(self) -> None:
        """Open a new scope."""

    @abstractmethod
    def pop(self) -> None:
        """Discard the top scope and everything asserted inside it."""

    @abstractmethod
    def check(self) -> SatResult:
        """Decide satisfiability of all live assertions."""

    @abstractmethod
    def close(self) -> None:
        """Release backend resources; the session is unusable afterwards."""

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _record(stats: Optional[SynthesisStats], start: int, horizon: int, kind: str) -> None:
    if stats is not None:
        stats.solver_calls += 1
        stats.record_check(start, horizon, kind)


def extract_plan(
    model: Mapping[str, Union[Fraction, int]],
    all_vars: Sequence[StepVars],
    pomdp: Pomdp,
) -> CandidatePlan:
    """Decode a satisfying model into a candidate plan and re-verify it.

    Beliefs are read as exact rationals and each step is re-checked against
    the belief transition; any mismatch means the solver's model violates
    the encoding (or returned non-rational values) and is a hard error.
    """
    try:
        beliefs = []
        for sv in all_vars:
            values = tuple(Fraction(model[v.name]) for v in sv.belief_vars)
            try:
                beliefs.append(Belief(values))
            except ModelError as exc:
                raise PlanDecodeError(f"step {sv.step}: {exc}") from None
        actions, observations = [], []
        for sv in all_vars[1:]:
            assert sv.action_var is not None and sv.observation_var is not None
            actions.append(int(model[sv.action_var.name]))
            observations.append(int(model[sv.observation_var.name]))
    except KeyError as exc:
        raise PlanDecodeError(f"model is missing variable {exc.args[0]!r}") from None
    start = all_vars[0].step
    for a in actions:
        if not 0 <= a < len(pomdp.actions):
            raise PlanDecodeError(f"action selector out of range: {a}")
    for o in observations:
        if not 0 <= o < len(pomdp.observations):
            raise PlanDecodeError(f"observation selector out of range: {o}")
    for i, (a, o) in enumerate(zip(actions, observations)):
        expected = belief_update(beliefs[i], a, o, pomdp)
        if expected is None:
            raise PlanDecodeError(
                f"step {start + i + 1}: model chose an impossible observation")
        if expected != beliefs[i + 1]:
            raise PlanDecodeError(
                f"step {start + i + 1}: model belief disagrees with the exact update")
    return CandidatePlan(start, tuple(beliefs), tuple(actions), tuple(observations))
