"""Rebuild CS machine states from the output trace of an annotated run."""
from __future__ import annotations

from typing import Callable, Iterable, Iterator, Optional

from .cs_machine import CSState
from .cskm_machine import OutputEvent, list_items
from .errors import QuoteError, ReconstructionError
from .syntax import unquote
from .terms import App, Cons, Datum, Force, ForceLoc, If, Loc, Prim1, Prim2, Term

Context = Callable[[Term], Term]


def _u(q) -> Term:
    try:
        return unquote(q)
    except QuoteError as e:
        raise ReconstructionError(str(e)) from e


def _frame(mark) -> Context:
    if not isinstance(mark, tuple) or not mark or not isinstance(mark[0], str):
        raise ReconstructionError(f"malformed mark {mark!r}")
    tag, args = mark[0], mark[1:]
    shape = (tag, len(args))
    if shape == ("force", 0):
        return Force
    if shape == ("force", 1) and isinstance(args[0], Loc):
        return lambda h: ForceLoc(args[0].index, h)
    if shape == ("appL", 1):
        return lambda h: App(h, _u(args[0]))
    if shape == ("appR", 1):
        return lambda h: App(_u(args[0]), h)
    if shape == ("prim2-1", 2):
        return lambda h: Prim2(args[0], h, _u(args[1]))
    if shape == ("prim2-2", 2):
        return lambda h: Prim2(args[0], _u(args[1]), h)
    if shape == ("consL", 1):
        return lambda h: Cons(h, _u(args[0]))
    if shape == ("consR", 1):
        return lambda h: Cons(_u(args[0]), h)
    if shape == ("prim1", 1):
        return lambda h: Prim1(args[0], h)
    if shape == ("if", 2):
        return lambda h: If(h, _u(args[0]), _u(args[1]))
    raise ReconstructionError(f"unknown mark {mark!r}")


def recon_context(marks: Iterable) -> Context:
    """Fold a mark list (innermost first) into a plugging function."""
    frames = [_frame(m) for m in marks]

    def plug(hole: Term) -> Term:
        for f in frames:
            hole = f(hole)
        return hole

    return plug


def _store_entry(head) -> Optional[tuple[int, object]]:
    if isinstance(head, tuple) and len(head) == 3 and head[0] in ("val", "loc") and isinstance(head[1], Loc):
        return head[1].index, head[2]
    return None


def recon_control(head, keep_locations: bool = False) -> Term:
    """Control string of one event.

    A ``val`` event normally puts the memoized value in the hole; with
    ``keep_locations`` it shows the location instead, which is how the lazy
    side keeps a shared value addressable.
    """
    if isinstance(head, tuple) and head and head[0] in ("val", "loc"):
        entry = _store_entry(head)
        if entry is None:
            raise ReconstructionError(f"malformed {head[0]} entry")
        if head[0] == "val" and not keep_locations:
            return _u(head[2])
        return Loc(entry[0])
    return _u(head)


def recon_store(heads: list, base: Optional[dict[int, Term]] = None) -> dict[int, Term]:
    """Later entries shadow earlier ones; ``base`` holds preloaded locations."""
    store = dict(base or {})
    for h in heads:
        entry = _store_entry(h)
        if entry is not None:
            store[entry[0]] = _u(entry[1])
    return store


def split_event(ev: OutputEvent | Term) -> tuple[object, list]:
    """Decode an emitted machine value into (head datum, mark data)."""
    v = ev.value if isinstance(ev, OutputEvent) else ev
    if not isinstance(v, Cons) or not isinstance(v.head, Datum):
        raise ReconstructionError("output value is not a (quoted . marks) pair")
    try:
        marks = list_items(v.tail)
    except ValueError as e:
        raise ReconstructionError(str(e)) from e
    if not all(isinstance(m, Datum) for m in marks):
        raise ReconstructionError("mark list holds a non-datum")
    return v.head.value, [m.value for m in marks]


def iter_states(
    trace: Iterable[OutputEvent], base: Optional[dict[int, Term]] = None, keep_locations: bool = False
) -> Iterator[tuple[Term, dict[int, Term]]]:
    """Yield (control, store) per event.  The store is updated in place between
    yields, so callers that keep it must copy it."""
    store = dict(base or {})
    for ev in trace:
        head, marks = split_event(ev)
        entry = _store_entry(head)
        if entry is not None:
            store[entry[0]] = _u(entry[1])
        yield recon_context(marks)(recon_control(head, keep_locations)), store


def reconstruct(
    trace: Iterable[OutputEvent], base: Optional[dict[int, Term]] = None, keep_locations: bool = False
) -> list[CSState]:
    """One CS state per event: plugged control plus the store seen so far."""
    return [CSState(c, dict(s)) for c, s in iter_states(trace, base, keep_locations)]
