"""Term trees shared by every layer of the stepper.

One family of immutable nodes covers the surface language, the labeled
rewriting terms, the delay/force core and the annotated tier.  Each module
documents which subset it accepts.  Source spans never take part in
equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Iterator, Optional, Union

Span = Optional[tuple[int, int]]

PRIM2_OPS = ("+", "-", "*", "/", "=", "<")
PRIM1_OPS = ("car", "cdr", "null?")


class Term:
    """Base class; concrete nodes are frozen dataclasses below."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        from .syntax import render_text

        return f"<{type(self).__name__} {render_text(self)}>"


def _node(cls):
    return dataclass(frozen=True, repr=False)(cls)


def _span():
    return field(default=None, compare=False, hash=False)


@_node
class Int(Term):
    value: int
    span: Span = _span()


@_node
class Str(Term):
    value: str
    span: Span = _span()


@_node
class Bool(Term):
    value: bool
    span: Span = _span()


@_node
class Var(Term):
    name: str
    span: Span = _span()


@_node
class Lam(Term):
    param: str
    body: Term
    span: Span = _span()
    # Unannotated body carried alongside an annotated one so runtime quoting
    # of closures reproduces source code; substitution keeps both in step.
    orig: Optional[Term] = field(default=None, compare=False, hash=False)


@_node
class App(Term):
    fn: Term
    arg: Term
    span: Span = _span()


@_node
class Prim2(Term):
    op: str
    lhs: Term
    rhs: Term
    span: Span = _span()


@_node
class Cons(Term):
    head: Term
    tail: Term
    span: Span = _span()


@_node
class Null(Term):
    span: Span = _span()


@_node
class Prim1(Term):
    op: str
    arg: Term
    span: Span = _span()


@_node
class If(Term):
    test: Term
    then: Term
    orelse: Term
    span: Span = _span()


# -- labeled rewriting tier ---------------------------------------------------


@_node
class Labeled(Term):
    label: int
    body: Term
    span: Span = _span()


@_node
class DefRef(Term):
    """A definition's shared label; the body lives in the definition table."""

    name: str
    span: Span = _span()


@_node
class Ref(Term):
    """A reference to a shared labeled body kept in a rewriting heap."""

    label: int
    span: Span = _span()


# -- delay/force core ---------------------------------------------------------


@_node
class Delay(Term):
    body: Term
    span: Span = _span()


@_node
class Force(Term):
    body: Term
    span: Span = _span()


@_node
class Loc(Term):
    index: int
    span: Span = _span()


@_node
class ForceLoc(Term):
    loc: int
    body: Term
    span: Span = _span()


# -- annotated tier -----------------------------------------------------------


@_node
class Wcm(Term):
    mark: Term
    body: Term
    span: Span = _span()


@_node
class Ccm(Term):
    span: Span = _span()


@_node
class Output(Term):
    body: Term
    span: Span = _span()


@_node
class LocP(Term):
    body: Term
    span: Span = _span()


@_node
class Alloc(Term):
    span: Span = _span()


@_node
class Force1(Term):
    """Force exactly one thunk level; the result may itself be a location."""

    body: Term
    span: Span = _span()


@_node
class Quote(Term):
    """Evaluates to the quoted encoding of its (unevaluated) template."""

    template: Term
    span: Span = _span()


@_node
class Tagged(Term):
    """Evaluates to the datum (tag, *parts); str parts stay literal, terms are quoted."""

    tag: str
    parts: tuple[Union[str, Term], ...]
    span: Span = _span()


@_node
class Datum(Term):
    """A quoted value living in the machine (tuples, ints, strs, bools, Loc)."""

    value: Any
    span: Span = _span()


@_node
class Hi(Term):
    """Highlight wrapper; transparent to everything except rendering."""

    body: Term
    span: Span = _span()


# -- generic traversal ----------------------------------------------------------

CHILDREN: dict[type, tuple[str, ...]] = {
    Lam: ("body",),
    App: ("fn", "arg"),
    Prim2: ("lhs", "rhs"),
    Cons: ("head", "tail"),
    Prim1: ("arg",),
    If: ("test", "then", "orelse"),
    Labeled: ("body",),
    Delay: ("body",),
    Force: ("body",),
    ForceLoc: ("body",),
    Wcm: ("mark", "body"),
    Output: ("body",),
    LocP: ("body",),
    Force1: ("body",),
    Quote: ("template",),
    Hi: ("body",),
}

LEAVES = (Int, Str, Bool, Var, Null, DefRef, Ref, Loc, Ccm, Alloc, Datum)


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Tagged):
        return tuple(p for p in t.parts if isinstance(p, Term))
    return tuple(getattr(t, name) for name in CHILDREN.get(type(t), ()))


def with_children(t: Term, kids: tuple[Term, ...]) -> Term:
    if isinstance(t, Tagged):
        it = iter(kids)
        return replace(t, parts=tuple(next(it) if isinstance(p, Term) else p for p in t.parts))
    names = CHILDREN.get(type(t), ())
    if not names:
        return t
    return replace(t, **dict(zip(names, kids)))


def map_children(t: Term, fn: Callable[[Term], Term]) -> Term:
    kids = children(t)
    if not kids:
        return t
    new = tuple(fn(k) for k in kids)
    if all(a is b for a, b in zip(kids, new)):
        return t
    return with_children(t, new)


def walk(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def size(t: Term) -> int:
    return sum(1 for _ in walk(t))


def depth(t: Term) -> int:
    kids = children(t)
    return 1 + max((depth(k) for k in kids), default=0)


def get_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    kids = list(children(t))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(t, tuple(kids))


def strip_spans(t: Term) -> Term:
    """Spans are excluded from equality already; this just drops them."""
    t = map_children(t, strip_spans)
    if any(f.name == "span" for f in fields(t)) and t.span is not None:
        return replace(t, span=None)
    return t


def free_vars(t: Term) -> frozenset[str]:
    """Free variable names, memoized on the (immutable) node."""
    cached = t.__dict__.get("_fv")
    if cached is not None:
        return cached
    if isinstance(t, Var):
        out = frozenset([t.name])
    elif isinstance(t, Lam):
        inner = free_vars(t.body)
        if t.orig is not None:
            inner |= free_vars(t.orig)
        out = inner - {t.param}
    else:
        out = frozenset()
        for k in children(t):
            out |= free_vars(k)
    object.__setattr__(t, "_fv", out)
    return out


def subst(t: Term, name: str, value: Term) -> Term:
    """Replace free occurrences of ``name``.

    Callers guarantee ``value`` has no free variable that a binder in ``t``
    could capture (values are closed up to top-level definition names, and
    binders never reuse those names).
    """
    if name not in free_vars(t):
        return t
    if isinstance(t, Var):
        return value
    if isinstance(t, Lam):
        body = subst(t.body, name, value)
        orig = subst(t.orig, name, value) if t.orig is not None else None
        return replace(t, body=body, orig=orig)
    return map_children(t, lambda k: subst(k, name, value))


def unlabel(t: Term) -> Term:
    """Drop every label node (definition references become their names)."""
    if isinstance(t, Labeled):
        return unlabel(t.body)
    if isinstance(t, DefRef):
        return Var(t.name)
    return map_children(t, unlabel)


def strip_hi(t: Term) -> Term:
    if isinstance(t, Hi):
        return strip_hi(t.body)
    return map_children(t, strip_hi)


SURFACE_KINDS = (Int, Str, Bool, Var, Lam, App, Prim2, Cons, Null, Prim1, If)
MARK_KINDS = (Wcm, Ccm, Output, LocP, Alloc, Force1, Quote, Tagged, Datum)


def is_surface(t: Term) -> bool:
    return all(isinstance(n, SURFACE_KINDS) for n in walk(t))
