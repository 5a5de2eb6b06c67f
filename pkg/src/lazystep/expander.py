"""Translation of the lazy surface language into the eager delay/force core."""
from __future__ import annotations

from dataclasses import dataclass

from .syntax import Program
from .terms import App, Cons, Delay, Force, If, Lam, Prim1, Prim2, Term, walk


def expand(t: Term) -> Term:
    if isinstance(t, Lam):
        return Lam(t.param, expand(t.body), span=t.span)
    if isinstance(t, App):
        return App(Force(expand(t.fn)), Delay(expand(t.arg)), span=t.span)
    if isinstance(t, Prim2):
        return Prim2(t.op, Force(expand(t.lhs)), Force(expand(t.rhs)), span=t.span)
    if isinstance(t, Cons):
        return Cons(Delay(expand(t.head)), Delay(expand(t.tail)), span=t.span)
    if isinstance(t, Prim1):
        return Prim1(t.op, Force(expand(t.arg)), span=t.span)
    if isinstance(t, If):
        return If(Force(expand(t.test)), expand(t.then), expand(t.orelse), span=t.span)
    return t


@dataclass(frozen=True)
class Expanded:
    defs: tuple[tuple[str, Term], ...]
    main: Term

    def def_table(self) -> dict[str, Term]:
        return dict(self.defs)


def expand_program(p: Program, force_main: bool = True) -> Expanded:
    """Expand every definition and the main expression.

    With ``force_main`` the main expression is wrapped in one ``force`` so a
    program whose result is a suspended computation still runs it, as the
    rewriting semantics keeps reducing under labels until it sees a value.
    """
    main = expand(p.main)
    return Expanded(
        tuple((name, expand(body)) for name, body in p.defs),
        Force(main) if force_main else main,
    )


def well_formed_expansion(m: Term) -> bool:
    """Check that ``force``/``delay`` only occur where expansion puts them."""
    allowed: set[int] = set()

    def mark(t: Term) -> None:
        if isinstance(t, App):
            allowed.update((id(t.fn), id(t.arg)))
            ok = isinstance(t.fn, Force) and isinstance(t.arg, Delay)
        elif isinstance(t, Prim2):
            allowed.update((id(t.lhs), id(t.rhs)))
            ok = isinstance(t.lhs, Force) and isinstance(t.rhs, Force)
        elif isinstance(t, Cons):
            allowed.update((id(t.head), id(t.tail)))
            ok = isinstance(t.head, Delay) and isinstance(t.tail, Delay)
        elif isinstance(t, Prim1):
            allowed.add(id(t.arg))
            ok = isinstance(t.arg, Force)
        elif isinstance(t, If):
            allowed.add(id(t.test))
            ok = isinstance(t.test, Force)
        else:
            ok = True
        if not ok:
            raise ValueError

    try:
        for node in walk(m):
            mark(node)
            if isinstance(node, (Force, Delay)) and id(node) not in allowed:
                return False
            if isinstance(node, (Force, Delay)) and isinstance(node.body, (Force, Delay)):
                return False
    except ValueError:
        return False
    return True
