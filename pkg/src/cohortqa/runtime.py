"""Sandboxed tree-walking interpreter for parsed answer programs.

Every retrieve() call is routed through a Retriever; rejected lookups
substitute the kind-default value and execution continues. Hard limits cap
retrieve calls, interpreter steps, and list sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .dsl import (
    Append,
    Assign,
    Binary,
    BuiltinCall,
    Expr,
    ForEach,
    FormatString,
    If,
    Index,
    Interp,
    Literal,
    ParamRef,
    Program,
    RetrieveCall,
    Return,
    Stmt,
    Unary,
    ValueKind,
    VarRef,
)
from .retriever import (
    OUTCOME_ERROR,
    OUTCOME_REJECTED,
    OUTCOME_VALUE,
    Retriever,
    RetrieveRequest,
)

STATUS_ANSWERED = "answered"
STATUS_FAILURE = "runtime_failure"
STATUS_LIMIT = "limit_exceeded"

LIMIT_RETRIEVES = "retrieves"
LIMIT_STEPS = "steps"
LIMIT_LIST = "list"

KIND_DEFAULTS = {
    ValueKind.BOOL: False,
    ValueKind.INT: 0,
    ValueKind.FLOAT: 0.0,
    ValueKind.STR: "",
    ValueKind.LIST: (),
}


@dataclass(frozen=True)
class ExecutionLimits:
    max_retrieve_calls: int = 64
    max_steps: int = 10_000
    max_list_len: int = 1024

    def __post_init__(self):
        if min(self.max_retrieve_calls, self.max_steps, self.max_list_len) <= 0:
            raise ValueError("all limits must be strictly positive")


@dataclass(frozen=True)
class RetrieveEvent:
    rendered_question: str
    requested_kind: ValueKind
    outcome: str  # value | rejected | error
    value: object = None
    reason: str = ""

    def to_json(self) -> dict:
        obj = {
            "q": self.rendered_question,
            "kind": self.requested_kind.value,
            "outcome": self.outcome,
        }
        if self.outcome == OUTCOME_VALUE:
            obj["value"] = list(self.value) if isinstance(self.value, tuple) else self.value
        if self.reason:
            obj["reason"] = self.reason
        return obj


@dataclass(frozen=True)
class ExecutionResult:
    status: str  # answered | runtime_failure | limit_exceeded
    answer: Optional[int] = None
    failure_reason: str = ""
    limit_which: str = ""
    was_rejected: bool = False
    trace: tuple[RetrieveEvent, ...] = ()

    @property
    def answered(self) -> bool:
        return self.status == STATUS_ANSWERED

    @property
    def dynamic_retrieve_count(self) -> int:
        return len(self.trace)


class UnboundName(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)


class _RuntimeFailure(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class _LimitExceeded(Exception):
    def __init__(self, which: str):
        self.which = which
        super().__init__(which)


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value
        super().__init__()


def render_value(value) -> str:
    """Canonical text rendering used for f-string interpolation."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return ", ".join(render_value(v) for v in value)
    raise TypeError(f"unrenderable value {value!r}")


def render_question(fstring: FormatString, env: Mapping[str, object]) -> str:
    """Resolve interpolations against env; raises UnboundName on a miss."""
    parts = []
    for seg in fstring.segments:
        if isinstance(seg, Interp):
            if seg.name not in env:
                raise UnboundName(seg.name)
            parts.append(render_value(env[seg.name]))
        else:
            parts.append(seg)
    return "".join(parts)


def _coerce_binding(kind: ValueKind, text: str):
    if kind is ValueKind.STR:
        return text
    try:
        if kind is ValueKind.INT:
            return int(text)
        if kind is ValueKind.FLOAT:
            return float(text)
        if kind is ValueKind.BOOL:
            return {"true": True, "false": False}[text.strip().casefold()]
    except (ValueError, KeyError):
        raise _RuntimeFailure(f"cannot coerce binding {text!r} to {kind.value}") from None
    raise _RuntimeFailure(f"unsupported parameter kind {kind.value}")


class _Interpreter:
    def __init__(self, retriever: Retriever, limits: ExecutionLimits):
        self.retriever = retriever
        self.limits = limits
        self.env: dict[str, object] = {}
        self.trace: list[RetrieveEvent] = []
        self.was_rejected = False
        self.steps = 0

    def _step(self):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _LimitExceeded(LIMIT_STEPS)

    # -- statements --

    def exec_body(self, body: tuple[Stmt, ...]):
        for stmt in body:
            self.exec_stmt(stmt)

    def exec_stmt(self, stmt: Stmt):
        self._step()
        if isinstance(stmt, Assign):
            self.env[stmt.name] = self.eval(stmt.value)
        elif isinstance(stmt, Append):
            target = self._lookup(stmt.target)
            if not isinstance(target, list):
                raise _RuntimeFailure(f"append target {stmt.target!r} is not a list")
            if len(target) >= self.limits.max_list_len:
                raise _LimitExceeded(LIMIT_LIST)
            target.append(self.eval(stmt.value))
        elif isinstance(stmt, Return):
            raise _ReturnSignal(self.eval(stmt.value))
        elif isinstance(stmt, If):
            for cond, body in stmt.branches:
                if self._eval_bool(cond, "if condition"):
                    self.exec_body(body)
                    return
            self.exec_body(stmt.orelse)
        elif isinstance(stmt, ForEach):
            iterable = self.eval(stmt.iterable)
            if not isinstance(iterable, (list, tuple)):
                raise _RuntimeFailure("for-loop iterable is not a list")
            if len(iterable) > self.limits.max_list_len:
                raise _LimitExceeded(LIMIT_LIST)
            for item in list(iterable):
                self.env[stmt.loop_var] = item
                self.exec_body(stmt.body)
        else:
            raise _RuntimeFailure(f"unknown statement {type(stmt).__name__}")

    # -- expressions --

    def _lookup(self, name: str):
        if name not in self.env:
            raise _RuntimeFailure(f"unbound name {name!r}")
        return self.env[name]

    def _eval_bool(self, expr: Expr, context: str) -> bool:
        value = self.eval(expr)
        if not isinstance(value, bool):
            raise _RuntimeFailure(f"{context} is not a bool: {value!r}")
        return value

    def _eval_number(self, expr: Expr, context: str):
        value = self.eval(expr)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _RuntimeFailure(f"{context} is not a number: {value!r}")
        return value

    def eval(self, expr: Expr):
        self._step()
        if isinstance(expr, (ParamRef, VarRef)):
            return self._lookup(expr.name)
        if isinstance(expr, Literal):
            if expr.kind is ValueKind.LIST:
                return list(expr.value)
            return expr.value
        if isinstance(expr, RetrieveCall):
            return self._eval_retrieve(expr)
        if isinstance(expr, Unary):
            if expr.op == "not":
                return not self._eval_bool(expr.operand, "operand of not")
            return -self._eval_number(expr.operand, "operand of unary minus")
        if isinstance(expr, Binary):
            return self._eval_binary(expr)
        if isinstance(expr, Index):
            return self._eval_index(expr)
        if isinstance(expr, BuiltinCall):
            return self._eval_builtin(expr)
        raise _RuntimeFailure(f"unknown expression {type(expr).__name__}")

    def _eval_retrieve(self, expr: RetrieveCall):
        if len(self.trace) >= self.limits.max_retrieve_calls:
            raise _LimitExceeded(LIMIT_RETRIEVES)
        try:
            question = render_question(expr.question, self.env)
        except UnboundName as exc:
            raise _RuntimeFailure(f"unbound name {exc.name!r} in retrieve question") from exc
        response = self.retriever.retrieve(RetrieveRequest(question, expr.kind))
        event = RetrieveEvent(
            rendered_question=question,
            requested_kind=expr.kind,
            outcome=response.outcome,
            value=response.value,
            reason=response.reason,
        )
        self.trace.append(event)
        if response.outcome == OUTCOME_VALUE:
            value = response.value
            if expr.kind is ValueKind.LIST:
                value = list(value)
                if len(value) > self.limits.max_list_len:
                    raise _LimitExceeded(LIMIT_LIST)
            return value
        if response.outcome == OUTCOME_REJECTED:
            self.was_rejected = True
            default = KIND_DEFAULTS[expr.kind]
            return list(default) if expr.kind is ValueKind.LIST else default
        raise _RuntimeFailure(f"retriever backend error: {response.reason}")

    def _eval_binary(self, expr: Binary):
        op = expr.op
        if op in ("and", "or"):
            left = self._eval_bool(expr.left, f"left operand of {op}")
            if op == "and" and not left:
                return False
            if op == "or" and left:
                return True
            return self._eval_bool(expr.right, f"right operand of {op}")
        if op in ("==", "!="):
            left, right = self.eval(expr.left), self.eval(expr.right)
            return (left == right) if op == "==" else (left != right)
        if op in ("<", "<=", ">", ">="):
            left = self._eval_number(expr.left, f"left operand of {op}")
            right = self._eval_number(expr.right, f"right operand of {op}")
            return {"<": left < right, "<=": left <= right,
                    ">": left > right, ">=": left >= right}[op]
        if op in ("+", "-"):
            left = self._eval_number(expr.left, f"left operand of {op}")
            right = self._eval_number(expr.right, f"right operand of {op}")
            return left + right if op == "+" else left - right
        raise _RuntimeFailure(f"unknown operator {op!r}")

    def _eval_index(self, expr: Index):
        base = self.eval(expr.base)
        if not isinstance(base, (list, tuple)):
            raise _RuntimeFailure("indexing a non-list value")
        index = self.eval(expr.index)
        if isinstance(index, bool) or not isinstance(index, int):
            raise _RuntimeFailure(f"list index is not an integer: {index!r}")
        if not -len(base) <= index < len(base):
            raise _RuntimeFailure(f"list index {index} out of range for length {len(base)}")
        return base[index]

    def _eval_builtin(self, expr: BuiltinCall):
        value = self.eval(expr.args[0])
        if expr.func == "len":
            if not isinstance(value, (list, tuple, str)):
                raise _RuntimeFailure("len() of a non-list, non-string value")
            return len(value)
        if not isinstance(value, (list, tuple)):
            raise _RuntimeFailure(f"{expr.func}() of a non-list value")
        if expr.func == "unique_count":
            try:
                return len(set(value))
            except TypeError:
                raise _RuntimeFailure("unhashable list elements in len(set(...))") from None
        if expr.func in ("all", "any"):
            if not all(isinstance(v, bool) for v in value):
                raise _RuntimeFailure(f"{expr.func}() over non-boolean elements")
            return all(value) if expr.func == "all" else any(value)
        raise _RuntimeFailure(f"unknown builtin {expr.func!r}")


def execute(
    program: Program,
    bindings: Mapping[str, str],
    retriever: Retriever,
    limits: ExecutionLimits = ExecutionLimits(),
) -> ExecutionResult:
    """Run one program against one member's bindings."""
    missing = [name for name in program.param_names if name not in bindings]
    if missing:
        raise ValueError(f"bindings missing parameters {missing}")
    interp = _Interpreter(retriever, limits)

    def finish(status, **kwargs) -> ExecutionResult:
        return ExecutionResult(
            status=status,
            was_rejected=interp.was_rejected,
            trace=tuple(interp.trace),
            **kwargs,
        )

    try:
        for name, kind in program.params:
            interp.env[name] = _coerce_binding(kind, bindings[name])
        interp.exec_body(program.body)
    except _ReturnSignal as signal:
        value = signal.value
        if isinstance(value, bool) or not isinstance(value, int):
            return finish(STATUS_FAILURE, failure_reason=f"non-integer return: {value!r}")
        if value < 0:
            return finish(STATUS_FAILURE, failure_reason=f"negative answer index {value}")
        return finish(STATUS_ANSWERED, answer=value)
    except _RuntimeFailure as exc:
        return finish(STATUS_FAILURE, failure_reason=exc.reason)
    except _LimitExceeded as exc:
        return finish(STATUS_LIMIT, limit_which=exc.which)
    return finish(STATUS_FAILURE, failure_reason="control flow ended without return")
