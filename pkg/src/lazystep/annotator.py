"""Instrumentation of expanded programs with marks and output.

Every machine state worth reconstructing is announced by an ``output`` of a
pair: the quoted control string at the hole, and the current mark list.
Each non-value operand is evaluated under a ``wcm`` whose mark describes the
surrounding frame, so the mark list rebuilds the evaluation context.

Conventions (per construct):

* a redex whose operands are all syntactic values emits its own pre-state;
  otherwise the post-state output of the last computed operand already shows
  it.
* every non-value construct finishes with an output of its result in place,
  so the enclosing construct never needs to repeat it.
* a lambda body announces the post-state of beta on entry.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Optional

from .errors import AnnotationError
from .terms import (
    Alloc,
    App,
    Bool,
    Ccm,
    Cons,
    Delay,
    Force,
    Force1,
    If,
    Int,
    Lam,
    LocP,
    Null,
    Output,
    Prim1,
    Prim2,
    Quote,
    Str,
    Tagged,
    Term,
    Var,
    Wcm,
)

FORCE_MARK = Tagged("force", ())


def out(template: Term) -> Term:
    """``(output (cons ⌜template⌝ (ccm)))``"""
    return Output(Cons(Quote(template), Ccm()))


def let_star(bindings: Iterable[tuple[str, Term]], body: Term) -> Term:
    for name, rhs in reversed(list(bindings)):
        body = App(Lam(name, body), rhs)
    return body


def is_static_value(t: Term, bound: frozenset[str]) -> bool:
    if isinstance(t, (Int, Str, Bool, Null, Lam)):
        return True
    if isinstance(t, Var):
        return t.name in bound
    if isinstance(t, Cons):
        return is_static_value(t.head, bound) and is_static_value(t.tail, bound)
    return False


class _Annotator:
    def __init__(self):
        self._ids = itertools.count()

    def fresh(self) -> str:
        # brackets cannot occur in reader atoms, so no clash with user names
        return f"[v{next(self._ids)}]"

    def operands(self, parts: list[tuple[Term, Optional[Term]]], bound) -> tuple[list, list[str], bool]:
        """Bind each operand in order; ``parts`` pairs an operand with its mark
        (marks may mention earlier operand names via ``{0}``-style Vars)."""
        binds, names, computed = [], [], False
        for operand, mark in parts:
            name = self.fresh()
            if is_static_value(operand, bound):
                binds.append((name, self.ann(operand, bound)))
            else:
                computed = True
                binds.append((name, Wcm(mark(names) if callable(mark) else mark, self.ann(operand, bound))))
            names.append(name)
        return binds, names, computed

    def ann(self, t: Term, bound: frozenset[str]) -> Term:
        if isinstance(t, (Int, Str, Bool, Null)):
            return t
        if isinstance(t, Var):
            if t.name in bound:
                return t
            v = self.fresh()
            return let_star([(self.fresh(), out(t)), (v, t), (self.fresh(), out(Var(v)))], Var(v))
        if isinstance(t, Lam):
            inner = bound | {t.param}
            body = let_star([(self.fresh(), out(t.body))], self.ann(t.body, inner))
            return Lam(t.param, body, span=t.span, orig=t.body)
        if isinstance(t, Cons):
            if is_static_value(t, bound):
                return Cons(self.ann(t.head, bound), self.ann(t.tail, bound))
            binds, (a, b), _ = self.operands(
                [(t.head, Tagged("consL", (t.tail,))), (t.tail, lambda ns: Tagged("consR", (Var(ns[0]),)))], bound
            )
            return let_star(binds, Cons(Var(a), Var(b)))
        if isinstance(t, Prim2):
            binds, (a, b), computed = self.operands(
                [
                    (t.lhs, Tagged("prim2-1", (t.op, t.rhs))),
                    (t.rhs, lambda ns: Tagged("prim2-2", (t.op, Var(ns[0])))),
                ],
                bound,
            )
            return self.redex(binds, computed, Prim2(t.op, Var(a), Var(b)))
        if isinstance(t, Prim1):
            binds, (a,), computed = self.operands([(t.arg, Tagged("prim1", (t.op,)))], bound)
            return self.redex(binds, computed, Prim1(t.op, Var(a)))
        if isinstance(t, App):
            binds, (f, a), computed = self.operands(
                [(t.fn, Tagged("appL", (t.arg,))), (t.arg, lambda ns: Tagged("appR", (Var(ns[0]),)))], bound
            )
            if not computed:
                binds.append((self.fresh(), out(App(Var(f), Var(a)))))
            return let_star(binds, App(Var(f), Var(a)))
        if isinstance(t, If):
            binds, (c,), computed = self.operands([(t.test, Tagged("if", (t.then, t.orelse)))], bound)
            if not computed:
                binds.append((self.fresh(), out(If(Var(c), t.then, t.orelse))))
            branch = lambda e: let_star([(self.fresh(), out(e))], self.ann(e, bound))  # noqa: E731
            return let_star(binds, If(Var(c), branch(t.then), branch(t.orelse)))
        if isinstance(t, Delay):
            loc = self.fresh()
            return let_star(
                [
                    (self.fresh(), out(t)),
                    (loc, Alloc()),
                    (self.fresh(), Output(Cons(Tagged("loc", (Var(loc), t.body)), Ccm()))),
                ],
                Delay(self.ann(t.body, bound)),
            )
        if isinstance(t, Force):
            v0, v1 = self.fresh(), self.fresh()
            loop = force_loop()
            return let_star(
                [
                    (v0, Wcm(FORCE_MARK, self.ann(t.body, bound))),
                    (v1, App(App(loop, loop), Var(v0))),
                    (self.fresh(), out(Var(v1))),
                ],
                Var(v1),
            )
        raise AnnotationError(f"cannot annotate {type(t).__name__}; expected expander output")

    def redex(self, binds: list, computed: bool, redex: Term) -> Term:
        if not computed:
            binds.append((self.fresh(), out(redex)))
        r = self.fresh()
        binds += [(r, redex), (self.fresh(), out(Var(r)))]
        return let_star(binds, Var(r))


_LOOP: Optional[Term] = None


def force_loop() -> Term:
    """Self-applicable loop forcing one thunk level per iteration.

    Each iteration evaluates the thunk under two marks on separate frames (a
    plain force frame outside a force-loc frame), reports the memoized value
    with the force-loc mark dropped, then retries on the result in case it is
    another location.
    """
    global _LOOP
    if _LOOP is None:
        self_, v, r, rr, v2, t = "[self]", "[v]", "[r]", "[rr]", "[v2]", "[t]"
        report = Output(Cons(Tagged("val", (Var(v), Var(v2))), Prim1("cdr", Ccm())))
        inner = let_star([(v2, Force1(Var(v))), (t, report)], Var(v2))
        step = Wcm(FORCE_MARK, App(Lam(rr, Var(rr)), Wcm(Tagged("force", (Var(v),)), inner)))
        again = App(App(Var(self_), Var(self_)), Var(r))
        _LOOP = Lam(self_, Lam(v, If(LocP(Var(v)), let_star([(r, step)], again), Var(v))))
    return _LOOP


def annotate(m: Term) -> Term:
    """Instrument one expanded term (definition body or main expression)."""
    return _Annotator().ann(m, frozenset())


def annotate_program(expanded):
    """Annotate every definition body and the main term of an ``Expanded``."""
    from .expander import Expanded

    a = _Annotator()
    return Expanded(tuple((n, a.ann(b, frozenset())) for n, b in expanded.defs), a.ann(expanded.main, frozenset()))
