"""Labeled parallel rewriting for the lazy language.

Two representations of labeled terms are supported:

* the tree form, where ``Labeled(ℓ, body)`` nodes are copied into every
  position that shares them (the form the calculus is stated in), and
* the heap form used by the evaluator, where a label is a ``Ref(ℓ)`` leaf and
  its one body lives in ``heap[ℓ]``.  Top-level definitions are heap entries
  keyed by name and referenced by ``DefRef(name)``.

Updating ``heap[ℓ]`` rewrites every occurrence of ``ℓ`` at once, which is the
parallel update of the tree form.  The heap form also stays finite when a
recursive definition makes a label reachable from its own body.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .prims import delta
from .syntax import Program
from .terms import (
    App,
    Bool,
    Cons,
    DefRef,
    Hi,
    If,
    Int,
    Labeled,
    Lam,
    Null,
    Prim1,
    Prim2,
    Ref,
    Str,
    Term,
    Var,
    children,
    map_children,
    replace_at,
    subst,
    unlabel,
)

Path = tuple[int, ...]
Key = Union[int, str]  # heap key: a label or a definition name
Root = Optional[Key]
Heap = dict[Key, Term]

DEFAULT_BUDGET = 100_000
CYCLE = Var("…")  # display of a shared node met again inside itself


class LabelSource:
    """Monotone fresh-label counter owned by one rewriting session."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def fresh(self) -> int:
        return next(self._counter)


def _key(t: Term) -> Optional[Key]:
    if isinstance(t, Ref):
        return t.label
    if isinstance(t, DefRef):
        return t.name
    return None


# -- values ---------------------------------------------------------------------


def is_label(t: Term) -> bool:
    while isinstance(t, Hi):
        t = t.body
    return isinstance(t, (Labeled, DefRef, Ref))


def is_value(t: Term, heap: Optional[Heap] = None, _seen: frozenset = frozenset()) -> bool:
    while isinstance(t, Hi):
        t = t.body
    if isinstance(t, (Int, Str, Bool, Lam, Null)):
        return True
    if isinstance(t, Cons):
        return is_label(t.head) and is_label(t.tail)
    if isinstance(t, Labeled):
        return is_value(t.body, heap, _seen)
    k = _key(t)
    if k is not None:
        if heap is None or k in _seen or k not in heap:
            return False
        return is_value(heap[k], heap, _seen | {k})
    return False


def strip_labels(t: Term, heap: Optional[Heap] = None) -> Term:
    """Remove a label vector from the front of ``t``."""
    seen: set[Key] = set()
    while True:
        if isinstance(t, (Hi, Labeled)):
            t = t.body
            continue
        k = _key(t)
        if k is None or heap is None or k in seen or k not in heap:
            return t
        seen.add(k)
        t = heap[k]


# -- tree form ------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    label: int
    first: Path
    second: Path


def _labeled_nodes(t: Term, path: Path = ()):
    if isinstance(t, Labeled):
        yield t, path
    for i, k in enumerate(children(t)):
        yield from _labeled_nodes(k, path + (i,))


def check_consistent_labeling(t: Term) -> Optional[Violation]:
    """None when equal labels tag structurally equal bodies."""
    seen: dict[int, tuple[Term, Path]] = {}
    for node, where in _labeled_nodes(t):
        if node.label in seen:
            body, first = seen[node.label]
            if body != node.body:
                return Violation(node.label, first, where)
        else:
            seen[node.label] = (node.body, where)
    return None


def update_label(t: Term, label: int, replacement: Term) -> Term:
    """Replace the body of every ``label``-tagged subterm (no descent below a match)."""
    if isinstance(t, Labeled):
        if t.label == label:
            return Labeled(label, replacement, span=t.span)
        inner = update_label(t.body, label, replacement)
        return t if inner is t.body else Labeled(t.label, inner, span=t.span)
    return map_children(t, lambda k: update_label(k, label, replacement))


def label_paths(t: Term, label: int, path: Path = ()) -> list[Path]:
    """Paths of the outermost ``label`` occurrences in a tree."""
    if isinstance(t, Labeled) and t.label == label:
        return [path]
    out: list[Path] = []
    for i, k in enumerate(children(t)):
        out.extend(label_paths(k, label, path + (i,)))
    return out


def to_heap(t: Term, heap: Optional[Heap] = None) -> tuple[Term, Heap]:
    """Tree form to heap form (assumes consistent labeling)."""
    heap = dict(heap or {})

    def go(node: Term) -> Term:
        if isinstance(node, Labeled):
            if node.label not in heap:
                heap[node.label] = go(node.body)
            return Ref(node.label, span=node.span)
        return map_children(node, go)

    return go(t), heap


def from_heap(t: Term, heap: Heap, _path: frozenset = frozenset()) -> Term:
    """Heap form to tree form; a label met inside itself stays a ``Ref``."""
    if isinstance(t, Ref) and t.label in heap and t.label not in _path:
        return Labeled(t.label, from_heap(heap[t.label], heap, _path | {t.label}), span=t.span)
    return map_children(t, lambda k: from_heap(k, heap, _path))


# -- decomposition --------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """A label crossed on the way to the redex, with its position."""

    label: Key
    root: Root  # heap node holding the labeled position (None for main)
    path: Path


@dataclass(frozen=True)
class Redex:
    kind: str
    root: Root
    path: Path
    term: Term
    labels: tuple[Frame, ...]

    @property
    def nearest(self) -> Optional[Frame]:
        return self.labels[-1] if self.labels else None


@dataclass(frozen=True)
class IsValue:
    pass


@dataclass(frozen=True)
class Stuck:
    root: Root
    path: Path
    reason: str


Decomposition = Union[Redex, IsValue, Stuck]


def decompose(t: Term, heap: Optional[Heap] = None) -> Decomposition:
    """Split ``t`` into its unique evaluation context and redex."""
    heap = heap if heap is not None else {}
    if is_value(t, heap):
        return IsValue()
    return _find(t, heap, None, (), ())


def _find(t: Term, heap: Heap, root: Root, path: Path, labels: tuple[Frame, ...]) -> Decomposition:
    while isinstance(t, Hi):
        t, path = t.body, path + (0,)
    if isinstance(t, Labeled):
        return _find(t.body, heap, root, path + (0,), labels + (Frame(t.label, root, path),))
    k = _key(t)
    if k is not None:
        if any(f.label == k for f in labels):
            return Stuck(root, path, f"{k!r} demands itself")
        if k not in heap:
            return Stuck(root, path, f"dangling reference {k!r}")
        return _find(heap[k], heap, k, (), labels + (Frame(k, root, path),))

    def here(kind: str) -> Redex:
        return Redex(kind, root, path, t, labels)

    def into(i: int, sub: Term) -> Decomposition:
        return _find(sub, heap, root, path + (i,), labels)

    if isinstance(t, App):
        if not is_value(t.fn, heap):
            return into(0, t.fn)
        if isinstance(strip_labels(t.fn, heap), Lam):
            return here("beta")
        return Stuck(root, path, "application of a non-function")
    if isinstance(t, Prim2):
        if not is_value(t.lhs, heap):
            return into(0, t.lhs)
        if not is_value(t.rhs, heap):
            return into(1, t.rhs)
        return here("prim")
    if isinstance(t, Cons):
        return here("cons")
    if isinstance(t, Prim1):
        if not is_value(t.arg, heap):
            return into(0, t.arg)
        return here(t.op)
    if isinstance(t, If):
        if not is_value(t.test, heap):
            return into(0, t.test)
        return here("if")
    if isinstance(t, Var):
        if t.name in heap:
            return here("defref")
        return Stuck(root, path, f"free variable {t.name!r}")
    return Stuck(root, path, f"no rule for {type(t).__name__}")


def plug(t: Term, path: Path, redex: Term) -> Term:
    return replace_at(t, path, redex)


# -- one step -------------------------------------------------------------------


@dataclass
class RewriteStep:
    rule: str
    root: Root
    path: Path
    redex: Term
    contractum: Term
    fresh: list[int] = field(default_factory=list)
    nearest: Optional[Key] = None
    # tree-form positions of the other copies updated alongside the redex
    parallel: list[Path] = field(default_factory=list)


def contract(redex: Redex, heap: Heap, labels: LabelSource) -> Union[tuple[str, Term, Heap, list[int]], str]:
    """Apply the matching rule; returns new heap entries, or a stuck reason."""
    t = redex.term
    kind = redex.kind
    if kind == "beta":
        lam = strip_labels(t.fn, heap)
        lab = labels.fresh()
        return "beta", subst(lam.body, lam.param, Ref(lab)), {lab: t.arg}, [lab]
    if kind == "prim":
        out = delta(t.op, strip_labels(t.lhs, heap), strip_labels(t.rhs, heap))
        if out is None:
            return f"primitive {t.op} undefined on these operands"
        return "prim", out, {}, []
    if kind == "cons":
        l1, l2 = labels.fresh(), labels.fresh()
        return "cons", Cons(Ref(l1), Ref(l2), span=t.span), {l1: t.head, l2: t.tail}, [l1, l2]
    if kind in ("car", "cdr"):
        cell = strip_labels(t.arg, heap)
        if not isinstance(cell, Cons):
            return f"{kind} of a non-pair"
        return kind, cell.head if kind == "car" else cell.tail, {}, []
    if kind == "null?":
        return "null?", Bool(isinstance(strip_labels(t.arg, heap), Null)), {}, []
    if kind == "if":
        test = strip_labels(t.test, heap)
        if not isinstance(test, Bool):
            return "if on a non-boolean"
        return ("if-true", t.then, {}, []) if test.value else ("if-false", t.orelse, {}, [])
    if kind == "defref":
        return "defref", resolve_define(t.name, heap), {}, []
    raise AssertionError(kind)  # pragma: no cover


def resolve_define(name: str, heap: Heap) -> Term:
    """The defref contractum: the definition's session-stable label."""
    if name not in heap:
        raise KeyError(f"unbound definition {name!r}")
    return DefRef(name)


@dataclass
class LRState:
    main: Term
    heap: Heap

    def copy(self) -> "LRState":
        return LRState(self.main, dict(self.heap))

    def at(self, root: Root) -> Term:
        return self.main if root is None else self.heap[root]

    def put(self, root: Root, t: Term) -> None:
        if root is None:
            self.main = t
        else:
            self.heap[root] = t


def step_lr(state: LRState, labels: LabelSource) -> Union[RewriteStep, IsValue, Stuck]:
    """Rewrite ``state`` in place by one step."""
    d = decompose(state.main, state.heap)
    if not isinstance(d, Redex):
        return d
    result = contract(d, state.heap, labels)
    if isinstance(result, str):
        return Stuck(d.root, d.path, result)
    rule, contractum, entries, fresh = result
    state.heap.update(entries)
    state.put(d.root, replace_at(state.at(d.root), d.path, contractum))
    near = d.nearest
    return RewriteStep(rule, d.root, d.path, d.term, contractum, fresh, near.label if near else None)


def step_tree(t: Term, labels: LabelSource, defs: Optional[Heap] = None) -> Union[tuple[Term, RewriteStep], IsValue, Stuck]:
    """One step on a tree-form term, reporting tree positions.

    ``RewriteStep.path`` is the redex position in ``t`` when the redex is
    outside definition bodies; ``parallel`` lists the other copies of the
    nearest label updated by the same step.
    """
    d = decompose(t, defs or {})
    if not isinstance(d, Redex):
        return d
    main, heap = to_heap(t, defs)
    state = LRState(main, heap)
    step = step_lr(state, labels)
    if not isinstance(step, RewriteStep):
        return step
    new = from_heap(state.main, state.heap)
    near = d.nearest
    step.root, step.path, step.nearest = d.root, d.path, near.label if near else None
    if near is not None and near.root is None and isinstance(near.label, int):
        inner = d.path[len(near.path) + 1 :]
        step.parallel = [p + (0,) + inner for p in label_paths(t, near.label) if p != near.path]
    return new, step


# -- evaluator ------------------------------------------------------------------


@dataclass
class LRResult:
    kind: str  # "answer" | "error" | "timeout"
    final: LRState
    steps: list[RewriteStep]
    reason: str = ""

    @property
    def value(self) -> Term:
        return display(self.final.main, self.final.heap)


def initial_state(p: Program) -> LRState:
    return LRState(p.main, dict(p.defs))


def eval_lr(
    p: Program,
    budget: int = DEFAULT_BUDGET,
    labels: Optional[LabelSource] = None,
    observe: Optional[Callable[[LRState, RewriteStep], None]] = None,
) -> LRResult:
    """Iterate ``step_lr`` to an answer, a stuck error or budget exhaustion.

    ``observe`` sees the state after every step (the state is mutated in
    place, so observers copy what they keep).
    """
    labels = labels or LabelSource()
    state = initial_state(p)
    steps: list[RewriteStep] = []
    while True:
        if len(steps) >= budget:
            d = decompose(state.main, state.heap)
            if isinstance(d, IsValue):
                return LRResult("answer", state, steps)
            if isinstance(d, Stuck):
                return LRResult("error", state, steps, d.reason)
            return LRResult("timeout", state, steps)
        out = step_lr(state, labels)
        if isinstance(out, IsValue):
            return LRResult("answer", state, steps)
        if isinstance(out, Stuck):
            return LRResult("error", state, steps, out.reason)
        steps.append(out)
        if observe is not None:
            observe(state, out)


# -- display --------------------------------------------------------------------


def display(t: Term, heap: Heap, names: frozenset[str] = frozenset(), refs: frozenset[int] = frozenset()) -> Term:
    """Label-free surface view of a heap-form term.

    Shared bodies print in place.  A definition prints as its name while its
    body is not yet a value, or when met again inside its own unfolding; a
    plain label met again inside itself prints as ``…``; labels that merely
    forward to another label are transparent for that check.
    """
    if isinstance(t, Hi):
        return Hi(display(t.body, heap, names, refs))
    if isinstance(t, Labeled):
        return display(t.body, heap, names, refs)
    if isinstance(t, Ref):
        hops: set[int] = set()
        while isinstance(heap[t.label], Ref):  # pure indirection is not a node of its own
            if t.label in refs or t.label in hops:
                return CYCLE
            hops.add(t.label)
            t = heap[t.label]
        if t.label in refs:
            return CYCLE
        body = heap[t.label]
        if isinstance(body, DefRef):
            return display(body, heap, names, refs)
        return display(body, heap, names, refs | {t.label})
    if isinstance(t, DefRef):
        if t.name in names or not is_value(t, heap):
            return Var(t.name)
        return display(heap[t.name], heap, names | {t.name}, refs)
    return map_children(t, lambda k: display(k, heap, names, refs))


DisplayState = tuple[Term, tuple[tuple[str, Term], ...]]


def display_state(state: LRState, def_names: tuple[str, ...]) -> DisplayState:
    main = display(state.main, state.heap)
    defs = tuple((n, display(state.heap[n], state.heap, frozenset([n]))) for n in def_names)
    return main, defs


def answer_term(result: LRResult) -> Term:
    """The final value with labels removed (definitions shown by value)."""
    return unlabel(result.value)
