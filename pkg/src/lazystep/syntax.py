"""Surface reader, renderer and the quote/unquote value encoding."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import ParseError, QuoteError
from .terms import (
    PRIM1_OPS,
    PRIM2_OPS,
    Alloc,
    App,
    Bool,
    Ccm,
    Cons,
    Datum,
    DefRef,
    Ref,
    Delay,
    Force,
    Force1,
    ForceLoc,
    Hi,
    If,
    Int,
    Labeled,
    Lam,
    Loc,
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
    children,
    free_vars,
    walk,
)

# -- reader ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>[(\[])
  | (?P<close>[)\]])
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<badstring>")
  | (?P<atom>[^\s()\[\]";]+)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass
class Atom:
    text: str
    span: tuple[int, int]
    is_string: bool = False


@dataclass
class SList:
    items: list
    span: tuple[int, int]


SExpr = Union[Atom, SList]


def _unescape(body: str, offset: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError("lexical", f"unknown escape \\{nxt}", offset + i)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def read_sexprs(source: str) -> list[SExpr]:
    stack: list[tuple[int, list]] = []
    top: list[SExpr] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:  # pragma: no cover - the atom class is a catch-all
            raise ParseError("lexical", "bad token", pos)
        kind = m.lastgroup
        start, end = m.span()
        pos = end
        if kind == "ws":
            continue
        if kind == "badstring":
            raise ParseError("lexical", "unterminated string", start)
        if kind == "open":
            stack.append((start, []))
            continue
        if kind == "close":
            if not stack:
                raise ParseError("lexical", "unbalanced ')'", start)
            begin, items = stack.pop()
            node: SExpr = SList(items, (begin, end))
        elif kind == "string":
            node = Atom(_unescape(m.group()[1:-1], start + 1), (start, end), True)
        else:
            node = Atom(m.group(), (start, end))
        (stack[-1][1] if stack else top).append(node)
    if stack:
        raise ParseError("lexical", "unbalanced '('", stack[-1][0])
    return top


# -- term builder ---------------------------------------------------------------

_INT = re.compile(r"[+-]?\d+\Z")
_KEYWORDS = {"lambda", "define", "if", "cons", "list", "null", "delay", "force"}
_PRIM1_ALIASES = {"first": "car", "rest": "cdr"}

PRELUDE_SOURCE = """
(define (second l) (car (cdr l)))
(define (third l) (car (cdr (cdr l))))
(define (map f l)
  (if (null? l) null (cons (f (car l)) (map f (cdr l)))))
"""


@dataclass(frozen=True)
class Program:
    defs: tuple[tuple[str, Term], ...]
    main: Term
    source: str = field(default="", compare=False)

    @property
    def def_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.defs)

    def def_table(self) -> dict[str, Term]:
        return dict(self.defs)


def _arity(node: SList, n: int, what: str) -> None:
    if len(node.items) != n:
        raise ParseError("arity", f"{what} expects {n - 1} operand(s), got {len(node.items) - 1}", node.span[0])


def _params(node: SExpr) -> list[str]:
    if not isinstance(node, SList) or not node.items:
        raise ParseError("syntax", "lambda needs a non-empty parameter list", node.span[0])
    names = []
    for p in node.items:
        if not isinstance(p, Atom) or p.is_string or _INT.match(p.text):
            raise ParseError("syntax", "parameters must be identifiers", p.span[0])
        names.append(p.text)
    return names


def _curry(params: list[str], body: Term, span) -> Term:
    for name in reversed(params):
        body = Lam(name, body, span=span)
    return body


def build_term(node: SExpr) -> Term:
    if isinstance(node, Atom):
        text = node.text
        if node.is_string:
            return Str(text, span=node.span)
        if _INT.match(text):
            return Int(int(text), span=node.span)
        if text in ("#t", "true"):
            return Bool(True, span=node.span)
        if text in ("#f", "false"):
            return Bool(False, span=node.span)
        if text in ("null", "empty"):
            return Null(span=node.span)
        if text.startswith("#"):
            raise ParseError("lexical", f"bad token {text!r}", node.span[0])
        return Var(text, span=node.span)
    if not node.items:
        raise ParseError("syntax", "empty application", node.span[0])
    head = node.items[0]
    span = node.span
    if isinstance(head, Atom) and not head.is_string:
        h = head.text
        if h == "lambda":
            _arity(node, 3, "lambda")
            return _curry(_params(node.items[1]), build_term(node.items[2]), span)
        if h == "if":
            _arity(node, 4, "if")
            a, b, c = (build_term(x) for x in node.items[1:])
            return If(a, b, c, span=span)
        if h == "cons":
            _arity(node, 3, "cons")
            return Cons(build_term(node.items[1]), build_term(node.items[2]), span=span)
        if h in PRIM2_OPS:
            _arity(node, 3, h)
            return Prim2(h, build_term(node.items[1]), build_term(node.items[2]), span=span)
        if h in PRIM1_OPS or h in _PRIM1_ALIASES:
            _arity(node, 2, h)
            return Prim1(_PRIM1_ALIASES.get(h, h), build_term(node.items[1]), span=span)
        if h == "list":
            out: Term = Null(span=(span[1] - 1, span[1]))
            for item in reversed(node.items[1:]):
                out = Cons(build_term(item), out, span=(item.span[0], span[1]))
            return out
        if h == "define":
            raise ParseError("syntax", "define is only allowed at top level", span[0])
        if h in ("delay", "force"):
            raise ParseError("syntax", f"{h} is not part of the surface language", span[0])
    fn = build_term(head)
    if len(node.items) == 1:
        raise ParseError("arity", "application needs at least one argument", span[0])
    for arg in node.items[1:]:
        fn = App(fn, build_term(arg), span=(span[0], arg.span[1]) if arg is not node.items[-1] else span)
    return fn


def _build_define(node: SList) -> tuple[str, Term]:
    _arity(node, 3, "define")
    target = node.items[1]
    if isinstance(target, SList):
        names = _params(target)
        if len(names) < 2:
            raise ParseError("syntax", "function definition needs a parameter", target.span[0])
        return names[0], _curry(names[1:], build_term(node.items[2]), node.span)
    if not isinstance(target, Atom) or target.is_string or _INT.match(target.text):
        raise ParseError("syntax", "define needs a name", node.span[0])
    return target.text, build_term(node.items[2])


def _is_define(node: SExpr) -> bool:
    return (
        isinstance(node, SList)
        and bool(node.items)
        and isinstance(node.items[0], Atom)
        and node.items[0].text == "define"
    )


def _binders(t: Term) -> Iterable[tuple[str, Term]]:
    for n in walk(t):
        if isinstance(n, Lam):
            yield n.param, n


def _read_defs(source: str) -> list[tuple[str, Term]]:
    return [_build_define(n) for n in read_sexprs(source)]


_PRELUDE: Optional[dict[str, Term]] = None


def prelude() -> dict[str, Term]:
    global _PRELUDE
    if _PRELUDE is None:
        _PRELUDE = dict(_read_defs(PRELUDE_SOURCE))
    return _PRELUDE


def _unbound(t: Term, known: set[str]) -> Optional[Var]:
    def go(node: Term, bound: frozenset[str]) -> Optional[Var]:
        if isinstance(node, Var):
            return None if node.name in bound or node.name in known else node
        if isinstance(node, Lam):
            return go(node.body, bound | {node.param})
        for k in children(node):
            hit = go(k, bound)
            if hit is not None:
                return hit
        return None

    return go(t, frozenset())


def parse(source: str) -> Program:
    """Read a program: zero or more defines followed by one expression."""
    nodes = read_sexprs(source)
    if not nodes:
        raise ParseError("syntax", "empty program", 0)
    *def_nodes, main_node = nodes
    if _is_define(main_node):
        raise ParseError("syntax", "program must end with an expression", main_node.span[0])
    defs: list[tuple[str, Term]] = []
    seen: set[str] = set()
    for n in def_nodes:
        if not _is_define(n):
            raise ParseError("syntax", "only the last top-level form may be an expression", n.span[0])
        name, body = _build_define(n)
        if name in seen:
            raise ParseError("duplicate", f"duplicate definition {name!r}", n.span[0])
        if name in _KEYWORDS or name in PRIM2_OPS or name in PRIM1_OPS:
            raise ParseError("syntax", f"cannot redefine {name!r}", n.span[0])
        seen.add(name)
        defs.append((name, body))
    main = build_term(main_node)

    # Pull in library definitions that the program refers to.
    lib = prelude()
    pending = [t for _, t in defs] + [main]
    while pending:
        t = pending.pop()
        for name in sorted(free_vars(t)):
            if name not in seen and name in lib:
                seen.add(name)
                defs.append((name, lib[name]))
                pending.append(lib[name])

    names = {n for n, _ in defs}
    for name, body in defs + [("", main)]:
        hit = _unbound(body, names)
        if hit is not None:
            raise ParseError("unbound", f"unbound variable {hit.name!r}", hit.span[0] if hit.span else None)
        for param, lam in _binders(body):
            if param in names:
                raise ParseError(
                    "syntax", f"parameter {param!r} shadows a definition", lam.span[0] if lam.span else None
                )
    return Program(tuple(defs), main, source)


def parse_term(source: str) -> Term:
    """Parse a single closed-or-open expression without definitions."""
    nodes = read_sexprs(source)
    if len(nodes) != 1:
        raise ParseError("syntax", "expected exactly one expression", 0)
    return build_term(nodes[0])


# -- rendering ------------------------------------------------------------------


@dataclass
class Rendered:
    text: str
    spans: dict[tuple[int, ...], tuple[int, int]]
    highlights: list[tuple[int, int]]


def _escape(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_datum(v) -> str:
    if isinstance(v, bool):
        return "#t" if v else "#f"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return _escape(v)
    if isinstance(v, Loc):
        return f"loc@{v.index}"
    if isinstance(v, tuple):
        return "(" + " ".join(format_datum(x) for x in v) + ")"
    return repr(v)


class _Writer:
    def __init__(self, opaque: frozenset[int]):
        self.parts: list[str] = []
        self.pos = 0
        self.spans: dict[tuple[int, ...], tuple[int, int]] = {}
        self.highlights: list[tuple[int, int]] = []
        self.opaque = opaque
        self.thunks: dict[int, int] = {}

    def emit(self, s: str) -> None:
        self.parts.append(s)
        self.pos += len(s)

    def form(self, head: str, items: list[tuple[Term, tuple[int, ...]]]) -> None:
        self.emit("(" + head)
        for t, p in items:
            self.emit(" ")
            self.write(t, p)
        self.emit(")")

    def write(self, t: Term, path: tuple[int, ...]) -> None:
        start = self.pos
        if isinstance(t, Hi):
            self.write(t.body, path + (0,))
            self.highlights.append((start, self.pos))
        elif isinstance(t, Labeled):
            if t.label in self.opaque:
                n = self.thunks.setdefault(t.label, len(self.thunks) + 1)
                self.emit(f"⟨thunk_{n}⟩")
            else:
                self.write(t.body, path + (0,))
        elif isinstance(t, Int):
            self.emit(str(t.value))
        elif isinstance(t, Str):
            self.emit(_escape(t.value))
        elif isinstance(t, Bool):
            self.emit("#t" if t.value else "#f")
        elif isinstance(t, Var):
            self.emit(t.name)
        elif isinstance(t, DefRef):
            self.emit(t.name)
        elif isinstance(t, Ref):
            self.emit(f"⟨ℓ{t.label}⟩")
        elif isinstance(t, Null):
            self.emit("null")
        elif isinstance(t, Lam):
            self.emit(f"(lambda ({t.param}) ")
            self.write(t.body, path + (0,))
            self.emit(")")
        elif isinstance(t, App):
            self.emit("(")
            self.write(t.fn, path + (0,))
            self.emit(" ")
            self.write(t.arg, path + (1,))
            self.emit(")")
        elif isinstance(t, Prim2):
            self.form(t.op, [(t.lhs, path + (0,)), (t.rhs, path + (1,))])
        elif isinstance(t, Cons):
            self.form("cons", [(t.head, path + (0,)), (t.tail, path + (1,))])
        elif isinstance(t, Prim1):
            self.form(t.op, [(t.arg, path + (0,))])
        elif isinstance(t, If):
            self.form("if", [(t.test, path + (0,)), (t.then, path + (1,)), (t.orelse, path + (2,))])
        elif isinstance(t, Delay):
            self.form("delay", [(t.body, path + (0,))])
        elif isinstance(t, Force):
            self.form("force", [(t.body, path + (0,))])
        elif isinstance(t, Force1):
            self.form("force1", [(t.body, path + (0,))])
        elif isinstance(t, Loc):
            self.emit(f"loc@{t.index}")
        elif isinstance(t, ForceLoc):
            self.emit(f"(force-loc {t.loc} ")
            self.write(t.body, path + (0,))
            self.emit(")")
        elif isinstance(t, Wcm):
            self.form("wcm", [(t.mark, path + (0,)), (t.body, path + (1,))])
        elif isinstance(t, Ccm):
            self.emit("(ccm)")
        elif isinstance(t, Alloc):
            self.emit("(alloc)")
        elif isinstance(t, Output):
            self.form("output", [(t.body, path + (0,))])
        elif isinstance(t, LocP):
            self.form("loc?", [(t.body, path + (0,))])
        elif isinstance(t, Quote):
            self.form("quote", [(t.template, path + (0,))])
        elif isinstance(t, Tagged):
            self.emit("(tagged " + _escape(t.tag))
            i = 0
            for p in t.parts:
                self.emit(" ")
                if isinstance(p, Term):
                    self.write(p, path + (i,))
                    i += 1
                else:
                    self.emit(_escape(p))
            self.emit(")")
        elif isinstance(t, Datum):
            self.emit("'" + format_datum(t.value))
        else:  # pragma: no cover
            raise TypeError(f"cannot render {type(t).__name__}")
        self.spans.setdefault(path, (start, self.pos))


def render(term: Term, opaque: Iterable[int] = ()) -> Rendered:
    """Render any term family.

    Labels are invisible, except labels listed in ``opaque`` which print as
    numbered thunks in first-occurrence order.  ``spans`` maps child-index
    paths of the input tree to output intervals; ``highlights`` lists the
    intervals of ``Hi`` wrappers.
    """
    w = _Writer(frozenset(opaque))
    w.write(term, ())
    return Rendered("".join(w.parts), w.spans, w.highlights)


def render_text(term: Term) -> str:
    return render(term).text


def render_program(p: Program) -> str:
    lines = [f"(define {name} {render_text(body)})" for name, body in p.defs]
    lines.append(render_text(p.main))
    return "\n".join(lines)


# -- quoting --------------------------------------------------------------------

_QUOTE_TAGS = {
    App: "app",
    Cons: "cons",
    Delay: "delay",
    Force: "force",
    If: "if",
}


def quote(t: Term):
    """Encode a term as a datum: tagged tuples, self-quoting ints/bools/locations."""
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Bool):
        return t.value
    if isinstance(t, Str):
        return ("str", t.value)
    if isinstance(t, Var):
        return ("var", t.name)
    if isinstance(t, Null):
        return ("null",)
    if isinstance(t, Loc):
        return Loc(t.index)
    if isinstance(t, Lam):
        return ("lam", t.param, quote(t.orig if t.orig is not None else t.body))
    if isinstance(t, Prim2):
        return (t.op, quote(t.lhs), quote(t.rhs))
    if isinstance(t, Prim1):
        return (t.op, quote(t.arg))
    if isinstance(t, ForceLoc):
        return ("force-loc", t.loc, quote(t.body))
    tag = _QUOTE_TAGS.get(type(t))
    if tag is None:
        raise QuoteError(f"cannot quote {type(t).__name__}")
    return (tag,) + tuple(quote(k) for k in children(t))


_UNQUOTE_ARITY = {"app": 2, "cons": 2, "delay": 1, "force": 1, "if": 3, "null": 0, "lam": 2, "var": 1, "str": 1}


def unquote(v) -> Term:
    if isinstance(v, bool):
        return Bool(v)
    if isinstance(v, int):
        return Int(v)
    if isinstance(v, Loc):
        return Loc(v.index)
    if not isinstance(v, tuple) or not v or not isinstance(v[0], str):
        raise QuoteError(f"malformed quoted value {v!r}")
    tag, args = v[0], v[1:]
    if tag in PRIM2_OPS:
        if len(args) != 2:
            raise QuoteError(f"{tag} expects 2 operands")
        return Prim2(tag, unquote(args[0]), unquote(args[1]))
    if tag in PRIM1_OPS:
        if len(args) != 1:
            raise QuoteError(f"{tag} expects 1 operand")
        return Prim1(tag, unquote(args[0]))
    if tag == "force-loc":
        if len(args) != 2 or not isinstance(args[0], int):
            raise QuoteError("malformed force-loc")
        return ForceLoc(args[0], unquote(args[1]))
    if tag not in _UNQUOTE_ARITY:
        raise QuoteError(f"unknown tag {tag!r}")
    if len(args) != _UNQUOTE_ARITY[tag]:
        raise QuoteError(f"{tag} expects {_UNQUOTE_ARITY[tag]} field(s)")
    if tag == "str":
        if not isinstance(args[0], str):
            raise QuoteError("str payload must be a string")
        return Str(args[0])
    if tag == "var":
        if not isinstance(args[0], str):
            raise QuoteError("var payload must be a string")
        return Var(args[0])
    if tag == "null":
        return Null()
    if tag == "lam":
        if not isinstance(args[0], str):
            raise QuoteError("lam parameter must be a string")
        return Lam(args[0], unquote(args[1]))
    kids = [unquote(a) for a in args]
    if tag == "app":
        return App(*kids)
    if tag == "cons":
        return Cons(*kids)
    if tag == "delay":
        return Delay(*kids)
    if tag == "force":
        return Force(*kids)
    return If(*kids)


def datum_to_json(v):
    if isinstance(v, Loc):
        return {"loc": v.index}
    if isinstance(v, tuple):
        return [datum_to_json(x) for x in v]
    return v


def datum_from_json(v):
    if isinstance(v, dict):
        return Loc(v["loc"])
    if isinstance(v, list):
        return tuple(datum_from_json(x) for x in v)
    return v


__all__ = [
    "Program",
    "Rendered",
    "parse",
    "parse_term",
    "prelude",
    "quote",
    "unquote",
    "render",
    "render_text",
    "render_program",
    "read_sexprs",
    "format_datum",
    "datum_to_json",
    "datum_from_json",
]
