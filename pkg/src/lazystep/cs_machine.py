"""The CS machine for the eager delay/force core.

The control string is kept as a whole plugged term; each step decomposes it
along the call-by-value context grammar (plus the two force contexts).  The
store is a dict from location index to machine expression.  Top-level
definitions are preloaded at locations ``0..k-1`` and a free variable naming
a definition steps to its location.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .expander import Expanded
from .prims import delta
from .terms import (
    App,
    Bool,
    Cons,
    Datum,
    Delay,
    Force,
    ForceLoc,
    If,
    Int,
    Lam,
    Loc,
    Null,
    Prim1,
    Prim2,
    Str,
    Term,
    Var,
    replace_at,
    subst,
)

Store = dict[int, Term]
Path = tuple[int, ...]

ADMIN_RULES = frozenset({"delay", "force-delay", "force-update", "force-nondelay"})


class Allocator:
    """Dense monotone location source with a non-consuming peek."""

    def __init__(self, start: int = 0):
        self.next = start

    def peek(self) -> int:
        return self.next

    def take(self) -> int:
        n = self.next
        self.next += 1
        return n


def is_mvalue(t: Term) -> bool:
    if isinstance(t, (Int, Str, Bool, Lam, Null, Loc, Datum)):
        return True
    if isinstance(t, Cons):
        return is_mvalue(t.head) and is_mvalue(t.tail)
    return False


def apply_prim1(op: str, v: Term) -> Optional[Term]:
    if op == "null?":
        return Bool(isinstance(v, Null))
    if isinstance(v, Cons):
        return v.head if op == "car" else v.tail
    return None


@dataclass(frozen=True)
class Definitions:
    """Definition names and their preassigned locations."""

    names: tuple[str, ...] = ()

    def loc(self, name: str) -> int:
        return self.names.index(name)

    def name_of(self, loc: int) -> Optional[str]:
        return self.names[loc] if 0 <= loc < len(self.names) else None

    def __contains__(self, name: str) -> bool:
        return name in self.names


@dataclass
class CSState:
    control: Term
    store: Store

    def snapshot(self) -> "CSState":
        return CSState(self.control, dict(self.store))


@dataclass(frozen=True)
class Halt:
    value: Term
    store: Store


@dataclass(frozen=True)
class MStuck:
    path: Path
    reason: str


@dataclass(frozen=True)
class Decomposed:
    path: Path
    redex: Term
    inside: frozenset[int]  # locations of enclosing force-loc frames


def decompose_cs(c: Term) -> Optional[Decomposed]:
    """Locate the redex; None when ``c`` is a value."""
    path: list[int] = []
    inside: set[int] = set()
    t = c
    while True:
        if is_mvalue(t):
            return None if not path else Decomposed(tuple(path), t, frozenset(inside))
        if isinstance(t, App):
            if not is_mvalue(t.fn):
                path.append(0)
                t = t.fn
                continue
            if not is_mvalue(t.arg):
                path.append(1)
                t = t.arg
                continue
        elif isinstance(t, (Prim2, Cons)):
            kids = (t.lhs, t.rhs) if isinstance(t, Prim2) else (t.head, t.tail)
            i = next((i for i, k in enumerate(kids) if not is_mvalue(k)), None)
            if i is not None:
                path.append(i)
                t = kids[i]
                continue
        elif isinstance(t, If):
            if not is_mvalue(t.test):
                path.append(0)
                t = t.test
                continue
        elif isinstance(t, (Prim1, Force)):
            inner = t.arg if isinstance(t, Prim1) else t.body
            if not is_mvalue(inner):
                path.append(0)
                t = inner
                continue
        elif isinstance(t, ForceLoc):
            if not is_mvalue(t.body):
                inside.add(t.loc)
                path.append(0)
                t = t.body
                continue
        return Decomposed(tuple(path), t, frozenset(inside))


def contract_cs(
    d: Decomposed, store: Store, alloc: Allocator, defs: Definitions
) -> Union[tuple[str, Term, Store], str]:
    """Fire the rule for one redex; a str result is a stuck reason."""
    t = d.redex
    if isinstance(t, App):
        if not isinstance(t.fn, Lam):
            return "application of a non-function"
        return "beta", subst(t.fn.body, t.fn.param, t.arg), store
    if isinstance(t, Prim2):
        out = delta(t.op, t.lhs, t.rhs)
        if out is None:
            return f"primitive {t.op} undefined on these operands"
        return "prim", out, store
    if isinstance(t, Prim1):
        out = apply_prim1(t.op, t.arg)
        if out is None:
            return f"{t.op} of a non-pair"
        return t.op, out, store
    if isinstance(t, If):
        if not isinstance(t.test, Bool):
            return "if on a non-boolean"
        return ("if-true", t.then, store) if t.test.value else ("if-false", t.orelse, store)
    if isinstance(t, Delay):
        loc = alloc.take()
        return "delay", Loc(loc), {**store, loc: t.body}
    if isinstance(t, Force):
        v = t.body
        if isinstance(v, Loc):
            if v.index in d.inside:
                return f"location {v.index} demands itself"
            return "force-delay", Force(ForceLoc(v.index, store[v.index])), store
        return "force-nondelay", v, store
    if isinstance(t, ForceLoc):
        return "force-update", t.body, {**store, t.loc: t.body}
    if isinstance(t, Var):
        if t.name in defs:
            return "defref", Loc(defs.loc(t.name)), store
        return f"free variable {t.name!r}"
    return f"no rule for {type(t).__name__}"


@dataclass
class CSStep:
    rule: str
    path: Path
    before: CSState
    after: CSState


def step_cs(state: CSState, alloc: Allocator, defs: Definitions) -> Union[CSStep, Halt, MStuck]:
    d = decompose_cs(state.control)
    if d is None:
        return Halt(state.control, state.store)
    out = contract_cs(d, state.store, alloc, defs)
    if isinstance(out, str):
        return MStuck(d.path, out)
    rule, contractum, store = out
    after = CSState(replace_at(state.control, d.path, contractum), store)
    return CSStep(rule, d.path, state, after)


@dataclass
class CSRun:
    verdict: str  # "halt" | "stuck" | "timeout"
    states: list[CSState]
    steps: list[CSStep] = field(default_factory=list)
    value: Optional[Term] = None
    reason: str = ""

    @property
    def final(self) -> CSState:
        return self.states[-1]


def initial_cs(program: Expanded) -> tuple[CSState, Definitions, Allocator]:
    defs = Definitions(tuple(name for name, _ in program.defs))
    store = {i: body for i, (_, body) in enumerate(program.defs)}
    return CSState(program.main, store), defs, Allocator(len(defs.names))


def run_cs(program: Union[Expanded, Term], budget: int = 100_000) -> CSRun:
    """Iterate ``step_cs`` from the initial state, recording every state."""
    if isinstance(program, Term):
        program = Expanded((), program)
    state, defs, alloc = initial_cs(program)
    run = CSRun("timeout", [state])
    while True:
        out = step_cs(state, alloc, defs)
        if isinstance(out, Halt):
            run.verdict, run.value = "halt", out.value
            return run
        if isinstance(out, MStuck):
            run.verdict, run.reason = "stuck", out.reason
            return run
        if len(run.steps) >= budget:
            return run
        run.steps.append(out)
        state = out.after
        run.states.append(state)
