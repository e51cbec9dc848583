"""Satisfiability backends for the bounded encoding.

Two interchangeable session kinds sit behind one interface: an external
SMT-LIB v2 process driven over a pipe with push/pop scopes, and a built-in
exact enumerative backend that interprets the encoded step structure
directly and doubles as an independent oracle.
"""

from .session import (
    PlanDecodeError,
    Sat,
    SatResult,
    SolverConfig,
    SolverError,
    SolverSession,
    SolverUsageError,
    Unknown,
    Unsat,
    extract_plan,
)
from .enumerative import EnumerativeSession, enumerative_check
from .smtlib import ModelValueError, SmtLibSession, default_solver_command

__all__ = [
    "EnumerativeSession",
    "ModelValueError",
    "PlanDecodeError",
    "Sat",
    "SatResult",
    "SmtLibSession",
    "SolverConfig",
    "SolverError",
    "SolverSession",
    "SolverUsageError",
    "Unknown",
    "Unsat",
    "default_solver_command",
    "enumerative_check",
    "extract_plan",
]
