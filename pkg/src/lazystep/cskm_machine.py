"""The CSKM machine: control, store, continuation stack and mark register.

Frames live on a Python list with the innermost frame last.  Each frame
remembers the mark register of the frame that pushed it, so ``π`` is the
current mark followed by the saved marks from the top of the stack down.
Output transitions are recorded as ``OutputEvent`` values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .cs_machine import Allocator, Definitions, apply_prim1, is_mvalue
from .expander import Expanded
from .prims import delta
from .syntax import quote
from .terms import (
    Alloc,
    App,
    Bool,
    Ccm,
    Cons,
    Datum,
    Delay,
    Force,
    Force1,
    If,
    Int,
    Lam,
    Loc,
    LocP,
    Null,
    Output,
    Prim1,
    Prim2,
    Quote,
    Tagged,
    Term,
    Var,
    Wcm,
    subst,
)

EMPTY = None  # the ∅ mark
OUTPUT_RESULT = Int(42)


@dataclass(frozen=True)
class Frame:
    kind: str
    data: tuple
    saved: Optional[Term]  # mark slot


@dataclass
class CSKMState:
    control: Term
    store: dict[int, Term]
    kont: list[Frame]
    mark: Optional[Term] = EMPTY

    def snapshot(self) -> "CSKMState":
        return CSKMState(self.control, dict(self.store), list(self.kont), self.mark)


@dataclass(frozen=True)
class OutputEvent:
    value: Term
    step_index: int


def machine_list(items: list[Term]) -> Term:
    out: Term = Null()
    for x in reversed(items):
        out = Cons(x, out)
    return out


def list_items(v: Term) -> list[Term]:
    items = []
    while isinstance(v, Cons):
        items.append(v.head)
        v = v.tail
    if not isinstance(v, Null):
        raise ValueError("improper machine list")
    return items


def collect_marks(kont: list[Frame], mark: Optional[Term]) -> Term:
    """π: current mark then each frame's mark slot outward, skipping ∅."""
    marks = [] if mark is EMPTY else [mark]
    marks.extend(f.saved for f in reversed(kont) if f.saved is not EMPTY)
    return machine_list(marks)


def _datum(parts) -> Datum:
    return Datum(tuple(p if isinstance(p, str) else quote(p) for p in parts))


class CSKM:
    """One machine run; ``step`` advances it by a single transition."""

    def __init__(self, control: Term, store: Optional[dict[int, Term]] = None, defs: Definitions = Definitions(), alloc: Optional[Allocator] = None):
        self.state = CSKMState(control, dict(store or {}), [])
        self.defs = defs
        self.alloc = alloc or Allocator(len(defs.names))
        self.active: set[int] = set()  # locations with a pending force-loc frame
        self.steps = 0

    # -- frame helpers
    def _push(self, kind: str, *data) -> None:
        s = self.state
        s.kont.append(Frame(kind, data, s.mark))
        if kind == "force-loc":
            self.active.add(data[0])
        s.mark = EMPTY

    def _enter(self, loc: int, outer: Optional[str]) -> Optional[str]:
        if loc in self.active:
            return f"location {loc} demands itself"
        if outer:
            self._push(outer)
        self._push("force-loc", loc)
        self.state.control = self.state.store[loc]
        return None

    def step(self) -> Union[str, tuple[str, Optional[Term]]]:
        """Return ("ok", emitted-or-None), ("halt", None) or a stuck reason."""
        s = self.state
        c = s.control
        self.steps += 1
        if is_mvalue(c):
            if not s.kont:
                return "halt", None
            return self._continue(c)
        if isinstance(c, App):
            self._push("appL", c.arg)
            s.control = c.fn
        elif isinstance(c, Prim2):
            self._push("prim2L", c.op, c.rhs)
            s.control = c.lhs
        elif isinstance(c, Cons):
            self._push("consL", c.tail)
            s.control = c.head
        elif isinstance(c, Prim1):
            self._push("prim1", c.op)
            s.control = c.arg
        elif isinstance(c, If):
            self._push("if", c.then, c.orelse)
            s.control = c.test
        elif isinstance(c, (Force, Force1)):
            kind = "force" if isinstance(c, Force) else "force1"
            if not is_mvalue(c.body):
                self._push(kind)
                s.control = c.body
            elif isinstance(c.body, Loc):
                err = self._enter(c.body.index, "force" if kind == "force" else None)
                if err:
                    return err
            else:
                s.control = c.body
        elif isinstance(c, Delay):
            loc = self.alloc.take()
            s.store[loc] = c.body
            s.control = Loc(loc)
        elif isinstance(c, Var):
            if c.name not in self.defs:
                return f"free variable {c.name!r}"
            s.control = Loc(self.defs.loc(c.name))
        elif isinstance(c, Wcm):
            self._push("wcm", c.body)
            s.control = c.mark
        elif isinstance(c, Ccm):
            s.control = collect_marks(s.kont, s.mark)
        elif isinstance(c, Output):
            self._push("output")
            s.control = c.body
        elif isinstance(c, LocP):
            self._push("loc?")
            s.control = c.body
        elif isinstance(c, Alloc):
            s.control = Loc(self.alloc.peek())
        elif isinstance(c, Quote):
            s.control = Datum(quote(c.template))
        elif isinstance(c, Tagged):
            s.control = _datum((c.tag,) + c.parts)
        else:
            return f"no rule for {type(c).__name__}"
        return "ok", None

    def _continue(self, v: Term) -> Union[str, tuple[str, Optional[Term]]]:
        s = self.state
        f = s.kont.pop()
        saved = f.saved
        k = f.kind
        emitted = None
        if k == "appL":
            s.kont.append(Frame("appR", (v,), saved))
            s.control, s.mark = f.data[0], EMPTY
            return "ok", None
        if k == "prim2L":
            s.kont.append(Frame("prim2R", (f.data[0], v), saved))
            s.control, s.mark = f.data[1], EMPTY
            return "ok", None
        if k == "consL":
            s.kont.append(Frame("consR", (v,), saved))
            s.control, s.mark = f.data[0], EMPTY
            return "ok", None
        s.mark = saved
        if k == "appR":
            fn = f.data[0]
            if not isinstance(fn, Lam):
                return "application of a non-function"
            s.control = subst(fn.body, fn.param, v)
        elif k == "prim2R":
            out = delta(f.data[0], f.data[1], v)
            if out is None:
                return f"primitive {f.data[0]} undefined on these operands"
            s.control = out
        elif k == "consR":
            s.control = Cons(f.data[0], v)
        elif k == "prim1":
            out = apply_prim1(f.data[0], v)
            if out is None:
                return f"{f.data[0]} of a non-pair"
            s.control = out
        elif k == "if":
            if not isinstance(v, Bool):
                return "if on a non-boolean"
            s.control = f.data[0] if v.value else f.data[1]
        elif k in ("force", "force1"):
            if isinstance(v, Loc):
                err = self._enter(v.index, "force" if k == "force" else None)
                if err:
                    return err
            else:
                s.control = v
        elif k == "force-loc":
            loc = f.data[0]
            self.active.discard(loc)
            s.store[loc] = v
            s.control = v
        elif k == "wcm":
            s.control, s.mark = f.data[0], v
        elif k == "output":
            emitted = v
            s.control = OUTPUT_RESULT
        elif k == "loc?":
            s.control = Bool(isinstance(v, Loc))
        else:  # pragma: no cover
            raise AssertionError(k)
        return "ok", emitted


@dataclass
class CSKMRun:
    verdict: str  # "halt" | "stuck" | "timeout"
    trace: list[OutputEvent] = field(default_factory=list)
    value: Optional[Term] = None
    store: dict[int, Term] = field(default_factory=dict)
    steps: int = 0
    reason: str = ""


def run_cskm(
    program: Union[Expanded, Term],
    budget: int = 1_000_000,
    on_event: Optional[Callable[[OutputEvent], None]] = None,
    check: Optional[Callable[[CSKMState, tuple], None]] = None,
) -> CSKMRun:
    """Run to halt, stuck or budget exhaustion, collecting output events.

    ``on_event`` receives each event as it is produced; ``check`` is an
    optional per-transition hook used by the test-suite.
    """
    if isinstance(program, Term):
        program = Expanded((), program)
    defs = Definitions(tuple(n for n, _ in program.defs))
    store = {i: body for i, (_, body) in enumerate(program.defs)}
    m = CSKM(program.main, store, defs)
    run = CSKMRun("timeout")
    while run.steps < budget:
        out = m.step()
        if isinstance(out, str):
            run.verdict, run.reason = "stuck", out
            break
        status, emitted = out
        if status == "halt":
            run.verdict, run.value = "halt", m.state.control
            break
        run.steps += 1
        if check is not None:
            check(m.state, out)
        if emitted is not None:
            ev = OutputEvent(emitted, run.steps)
            run.trace.append(ev)
            if on_event is not None:
                on_event(ev)
    run.store = m.state.store
    return run
