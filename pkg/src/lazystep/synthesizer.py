"""Map eager machine states back to lazy surface terms.

Instead of threading the store through a left-to-right traversal, a pre-pass
collects every ``force-loc`` body in the control string as the current
contents of its location; each location then synthesizes from that view.
This gives every occurrence of a location the same intermediate expression.
"""
from __future__ import annotations

from typing import Optional

from .cs_machine import Definitions, is_mvalue
from .errors import SynthesisError
from .lazy_core import CYCLE
from .terms import Cons, Delay, Force, ForceLoc, Loc, Term, Var, map_children, walk

Store = dict[int, Term]


def _flatten_forcelocs(t: Term) -> Term:
    if isinstance(t, ForceLoc):
        return Loc(t.loc)
    return map_children(t, _flatten_forcelocs)


def effective_store(control: Term, store: Store) -> Store:
    """The store as seen by synthesis: force-loc bodies override bindings."""
    view = dict(store)
    for node in walk(control):
        if isinstance(node, ForceLoc):
            view[node.loc] = _flatten_forcelocs(node.body)
    return view


def _has_loc(t: Term) -> bool:
    return any(isinstance(n, Loc) for n in walk(t))


class _Synth:
    def __init__(self, store: Store, defs: Definitions):
        self.store = store
        self.defs = defs
        # a forced pair is shared by every location memoizing it; its
        # component locations make it unique, so equal content means identity
        self.holders: dict[Term, frozenset[int]] = {}
        for loc, body in store.items():
            if isinstance(body, Cons) and _has_loc(body):
                self.holders[body] = self.holders.get(body, frozenset()) | {loc}

    def settled(self, c: Term, seen: frozenset[int] = frozenset()) -> bool:
        if isinstance(c, Loc):
            if c.index in seen or c.index not in self.store:
                return False
            return self.settled(self.store[c.index], seen | {c.index})
        return is_mvalue(c)

    def lookup(self, loc: int) -> Term:
        if loc not in self.store:
            raise SynthesisError(f"unbound location {loc}")
        return self.store[loc]

    def aliases(self, t: Term) -> frozenset[int]:
        return self.holders.get(t, frozenset()) if isinstance(t, Cons) else frozenset()

    def go(self, t: Term, names: frozenset[str], locs: frozenset[int]) -> Term:
        rec = lambda k: self.go(k, names, locs)  # noqa: E731
        if isinstance(t, (Delay, Force)):
            return rec(t.body)
        if isinstance(t, ForceLoc):
            return rec(Loc(t.loc))
        if isinstance(t, Loc):
            name = self.defs.name_of(t.index)
            if name is not None:
                if name in names or not self.settled(Loc(t.index)):
                    return Var(name)
                body = self.lookup(t.index)
                return self.unfold(body, names | {name}, locs | self.aliases(body))
            if t.index in locs:
                return CYCLE
            body = self.lookup(t.index)
            if isinstance(body, Loc):  # forwarding location
                hops = {t.index}
                while isinstance(body, Loc) and self.defs.name_of(body.index) is None:
                    if body.index in locs or body.index in hops:
                        return CYCLE
                    hops.add(body.index)
                    t, body = body, self.lookup(body.index)
                if isinstance(body, Loc):
                    return self.go(body, names, locs)
                return self.unfold(body, names, locs | {t.index} | self.aliases(body))
            return self.unfold(body, names, locs | {t.index} | self.aliases(body))
        held = self.aliases(t)
        if held:
            named = sorted(n for n in map(self.defs.name_of, held) if n is not None)
            if named:
                if named[0] in names:
                    return Var(named[0])
                return self.unfold(t, names | {named[0]}, locs | held)
            if held & locs:
                return CYCLE
            return self.unfold(t, names, locs | held)
        return map_children(t, rec)

    def unfold(self, t: Term, names: frozenset[str], locs: frozenset[int]) -> Term:
        """Show ``t`` as a location's own content (never as a back-reference)."""
        if isinstance(t, Cons):
            return map_children(t, lambda k: self.go(k, names, locs))
        return self.go(t, names, locs)


def unmacro2(control: Term, store: Store, defs: Definitions = Definitions()) -> tuple[Term, Store]:
    """Synthesize ``control``; also return the store view used for it."""
    view = effective_store(control, store)
    return _Synth(view, defs).go(_flatten_forcelocs(control), frozenset(), frozenset()), view


def unmacro(control: Term, store: Optional[Store] = None, defs: Definitions = Definitions()) -> Term:
    return unmacro2(control, store or {}, defs)[0]


def synthesize_state(control: Term, store: Store, defs: Definitions) -> tuple[Term, tuple[tuple[str, Term], ...]]:
    """Display pair: the main term and every definition body."""
    view = effective_store(control, store)
    s = _Synth(view, defs)
    main = s.go(_flatten_forcelocs(control), frozenset(), frozenset())
    shown = tuple((name, s.unfold(view[i], frozenset([name]), s.aliases(view[i]))) for i, name in enumerate(defs.names))
    return main, shown
