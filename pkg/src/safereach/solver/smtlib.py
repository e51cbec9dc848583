"""External SMT backend: SMT-LIB v2 over a subprocess pipe.

Serializes the constraint AST, drives any conforming solver binary
(``z3 -in`` works; the default is the bundled reference solver) with
``push``/``pop`` scopes, and parses models back into exact rationals.
In non-incremental mode every check re-serializes all live assertions
into a fresh solver process, for the from-scratch comparison.
"""

from __future__ import annotations

import os
import select
import subprocess
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence, Union

from ..core import SynthesisStats
from ..encoding import (
    Add,
    And,
    BoolConst,
    EncodedConstraint,
    Eq,
    IConst,
    InitialInfo,
    Ite,
    IVar,
    Le,
    Lt,
    Mul,
    Not,
    Or,
    RConst,
    RVar,
    Term,
    TransitionInfo,
    term_variables,
)
from .session import (
    Sat,
    SatResult,
    SolverConfig,
    SolverError,
    SolverSession,
    SolverUsageError,
    Unknown,
    Unsat,
    _record,
)


class ModelValueError(SolverError):
    """The solver returned a model value that is not an exact rational."""


def default_solver_command() -> tuple[str, ...]:
    """Run the bundled reference solver with the current interpreter."""
    here = os.path.dirname(os.path.abspath(__file__))
    return (sys.executable, os.path.join(here, os.pardir, "refsolver.py"))


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _rational_literal(value: Fraction) -> str:
    if value < 0:
        return f"(- {_rational_literal(-value)})"
    if value.denominator == 1:
        return f"{value.numerator}.0"
    return f"(/ {value.numerator}.0 {value.denominator}.0)"


def serialize(term: Term) -> str:
    parts: list[str] = []
    _serialize_into(term, parts)
    return "".join(parts)


def _serialize_into(term: Term, parts: list[str]) -> None:
    if isinstance(term, RConst):
        parts.append(_rational_literal(term.value))
    elif isinstance(term, IConst):
        parts.append(str(term.value) if term.value >= 0 else f"(- {-term.value})")
    elif isinstance(term, (RVar, IVar)):
        parts.append(term.name)
    elif isinstance(term, BoolConst):
        parts.append("true" if term.value else "false")
    elif isinstance(term, (Add, Mul, And, Or)):
        op = {Add: "+", Mul: "*", And: "and", Or: "or"}[type(term)]
        if len(term.args) == 1:
            _serialize_into(term.args[0], parts)
            return
        parts.append(f"({op}")
        for arg in term.args:
            parts.append(" ")
            _serialize_into(arg, parts)
        parts.append(")")
    elif isinstance(term, (Eq, Le, Lt)):
        op = {Eq: "=", Le: "<=", Lt: "<"}[type(term)]
        parts.append(f"({op} ")
        _serialize_into(term.lhs, parts)
        parts.append(" ")
        _serialize_into(term.rhs, parts)
        parts.append(")")
    elif isinstance(term, Not):
        parts.append("(not ")
        _serialize_into(term.arg, parts)
        parts.append(")")
    elif isinstance(term, Ite):
        parts.append("(ite ")
        _serialize_into(term.cond, parts)
        parts.append(" ")
        _serialize_into(term.then, parts)
        parts.append(" ")
        _serialize_into(term.other, parts)
        parts.append(")")
    else:
        raise TypeError(f"cannot serialize {term!r}")


# --------------------------------------------------------------------------
# Response parsing
# --------------------------------------------------------------------------

def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    token = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == '"':
            j = text.find('"', i + 1)
            out.append(text[i:j + 1])
            i = j + 1
            continue
        if c in "()":
            if token:
                out.append("".join(token))
                token = []
            out.append(c)
        elif c.isspace():
            if token:
                out.append("".join(token))
                token = []
        else:
            token.append(c)
        i += 1
    if token:
        out.append("".join(token))
    return out


def _parse_sexpr(tokens: list[str], pos: int = 0):
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while tokens[pos] != ")":
            item, pos = _parse_sexpr(tokens, pos)
            items.append(item)
        return items, pos + 1
    return tok, pos + 1


def _parse_numeric(node, context: str) -> Union[Fraction, int]:
    if isinstance(node, str):
        try:
            if "." in node:
                return Fraction(node)
            return int(node)
        except ValueError:
            raise ModelValueError(f"non-rational model value for {context}: {node}") from None
    if isinstance(node, list) and node:
        if node[0] == "-" and len(node) == 2:
            return -_parse_numeric(node[1], context)
        if node[0] == "/" and len(node) == 3:
            num = _parse_numeric(node[1], context)
            den = _parse_numeric(node[2], context)
            return Fraction(num) / Fraction(den)
    raise ModelValueError(f"non-rational model value for {context}: {node}")


def parse_model(text: str) -> dict[str, Union[Fraction, int]]:
    """Parse a ``get-model`` response (with or without the ``model`` keyword)."""
    tokens = _tokenize(text)
    tree, _ = _parse_sexpr(tokens)
    if not isinstance(tree, list):
        raise SolverError(f"unexpected get-model response: {text[:200]}")
    entries = tree[1:] if tree and tree[0] == "model" else tree
    model: dict[str, Union[Fraction, int]] = {}
    for entry in entries:
        if not (isinstance(entry, list) and entry and entry[0] == "define-fun"):
            continue
        name, _args, sort, value = entry[1], entry[2], entry[3], entry[4]
        parsed = _parse_numeric(value, name)
        model[name] = int(parsed) if sort == "Int" else Fraction(parsed)
    return model


# --------------------------------------------------------------------------
# Process plumbing
# --------------------------------------------------------------------------

class _SmtProcess:
    def __init__(self, command: Sequence[str]) -> None:
        try:
            self.proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
            )
        except OSError as exc:
            raise SolverError(f"cannot start solver {command!r}: {exc}") from exc
        self._buffer = b""

    def send(self, line: str) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(line.encode() + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver pipe closed: {exc}") from exc

    def _fill(self, deadline: Optional[float]) -> None:
        assert self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0 or not select.select([fd], [], [], remaining)[0]:
                raise TimeoutError
        chunk = os.read(fd, 65536)
        if not chunk:
            raise SolverError("solver closed its output stream" + self._stderr_tail())
        self._buffer += chunk

    def read_line(self, deadline: Optional[float]) -> str:
        while b"\n" not in self._buffer:
            self._fill(deadline)
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode().strip()

    def read_sexpr(self, deadline: Optional[float]) -> str:
        """Read one balanced s-expression (may span lines)."""
        text = ""
        while True:
            text += self.read_line(deadline) + "\n"
            depth = 0
            in_string = False
            opened = False
            for c in text:
                if c == '"':
                    in_string = not in_string
                elif not in_string and c == "(":
                    depth += 1
                    opened = True
                elif not in_string and c == ")":
                    depth -= 1
            if opened and depth == 0:
                return text

    def _stderr_tail(self) -> str:
        if self.proc.stderr is None:
            return ""
        try:
            os.set_blocking(self.proc.stderr.fileno(), False)
            tail = self.proc.stderr.read() or b""
        except OSError:
            return ""
        text = tail.decode(errors="replace").strip()
        return f" (stderr: {text[-300:]})" if text else ""

    def close(self) -> None:
        try:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.terminate()
            self.proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            self.proc.kill()


# --------------------------------------------------------------------------
# The session
# --------------------------------------------------------------------------

class SmtLibSession(SolverSession):
    """Drives one solver process incrementally, or one process per check."""

    def __init__(self, config: SolverConfig = SolverConfig(),
                 stats: Optional[SynthesisStats] = None) -> None:
        self.config = config
        self.stats = stats
        self.command = tuple(config.command) if config.command else default_solver_command()
        self._frames: list[list[EncodedConstraint]] = [[]]
        self._declared: list[dict[str, str]] = [{}]
        self._proc: Optional[_SmtProcess] = None
        self._dead = False
        self._closed = False

    # -- bookkeeping -------------------------------------------------------

    def _guard(self) -> None:
        if self._closed:
            raise SolverUsageError("session is closed")
        if self._dead:
            raise SolverError("session is dead after a backend failure")

    def _known(self, name: str) -> bool:
        return any(name in frame for frame in self._declared)

    def _header_lines(self) -> list[str]:
        return ["(set-option :produce-models true)", f"(set-logic {self.config.logic})"]

    def _ensure_process(self) -> _SmtProcess:
        if self._proc is None:
            self._proc = _SmtProcess(self.command)
            for line in self._header_lines():
                self._proc.send(line)
        return self._proc

    def _fail(self, exc: Exception) -> SolverError:
        self._dead = True
        if self._proc is not None:
            self._proc.close()
            self._proc = None
        if isinstance(exc, SolverError):
            return exc
        return SolverError(str(exc))

    # -- SolverSession -----------------------------------------------------

    def add(self, constraint: EncodedConstraint) -> None:
        self._guard()
        self._frames[-1].append(constraint)
        fresh = {
            name: sort
            for name, sort in sorted(term_variables(constraint.term).items())
            if not self._known(name)
        }
        self._declared[-1].update(fresh)
        if self.config.incremental:
            try:
                proc = self._ensure_process()
                for name, sort in fresh.items():
                    proc.send(f"(declare-const {name} {sort})")
                proc.send(f"(assert {serialize(constraint.term)})")
            except SolverError as exc:
                raise self._fail(exc) from None

    def push(self) -> None:
        self._guard()
        self._frames.append([])
        self._declared.append({})
        if self.config.incremental:
            try:
                self._ensure_process().send("(push 1)")
            except SolverError as exc:
                raise self._fail(exc) from None

    def pop(self) -> None:
        self._guard()
        if len(self._frames) <= 1:
            raise SolverUsageError("pop with no matching push")
        self._frames.pop()
        self._declared.pop()
        if self.config.incremental:
            try:
                self._ensure_process().send("(pop 1)")
            except SolverError as exc:
                raise self._fail(exc) from None

    def _span(self) -> tuple[int, int]:
        start = 0
        steps = [0]
        for frame in self._frames:
            for c in frame:
                if isinstance(c.payload, InitialInfo):
                    start = c.payload.step
                    steps.append(start)
                elif isinstance(c.payload, TransitionInfo):
                    steps.append(c.payload.step)
        return start, max(steps)

    def check(self) -> SatResult:
        self._guard()
        start, end = self._span()
        deadline = time.monotonic() + self.config.check_timeout
        try:
            if self.config.incremental:
                result = self._check_on(self._ensure_process(), deadline)
            else:
                proc = _SmtProcess(self.command)
                try:
                    for line in self._header_lines():
                        proc.send(line)
                    for frame_decls in self._declared:
                        for name, sort in frame_decls.items():
                            proc.send(f"(declare-const {name} {sort})")
                    for frame in self._frames:
                        for c in frame:
                            proc.send(f"(assert {serialize(c.term)})")
                    result = self._check_on(proc, deadline)
                finally:
                    proc.close()
        except TimeoutError:
            self._fail(SolverError("timeout"))
            result = Unknown(f"check timed out after {self.config.check_timeout}s")
        except SolverError as exc:
            self._fail(exc)
            result = Unknown(f"solver failure: {exc}")
        kind = {Sat: "sat", Unsat: "unsat", Unknown: "unknown"}[type(result)]
        _record(self.stats, start, end, kind)
        return result

    def _check_on(self, proc: _SmtProcess, deadline: float) -> SatResult:
        proc.send("(check-sat)")
        verdict = proc.read_line(deadline)
        while verdict == "":
            verdict = proc.read_line(deadline)
        if verdict.startswith("(error"):
            raise SolverError(f"solver error: {verdict}")
        if verdict == "unsat":
            return Unsat()
        if verdict == "unknown":
            return Unknown("solver returned unknown")
        if verdict != "sat":
            raise SolverError(f"unexpected check-sat response: {verdict!r}")
        proc.send("(get-model)")
        text = proc.read_sexpr(deadline)
        return Sat(parse_model(text))

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._proc is not None:
            try:
                self._proc.send("(exit)")
            except SolverError:
                pass
            self._proc.close()
            self._proc = None
