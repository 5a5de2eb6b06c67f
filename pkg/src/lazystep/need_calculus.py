"""A small laboratory for the pure call-by-need calculus.

Terms are ordinary named lambda terms.  Two axiom sets are supported: the
classic one built around ``deref`` and the variant that replaces ``deref`` by
``beta-need`` (plain substitution once the argument is a value).  Besides the
standard-reduction driver, the module enumerates closed terms and searches
their full reduction graphs for diverging normal forms.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

Path = tuple[int, ...]


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PLam:
    param: str
    body: "PureTerm"

    def __str__(self) -> str:
        return f"λ{self.param}.{self.body}"


@dataclass(frozen=True)
class PApp:
    fn: "PureTerm"
    arg: "PureTerm"

    def __str__(self) -> str:
        f = f"({self.fn})" if isinstance(self.fn, PLam) else str(self.fn)
        a = str(self.arg) if isinstance(self.arg, PVar) else f"({self.arg})"
        return f"{f} {a}"


PureTerm = Union[PVar, PLam, PApp]

AXIOMS = ("deref", "lift", "assoc", "beta-need")
NEED_SET = frozenset({"beta-need", "lift", "assoc"})
DEREF_SET = frozenset({"deref", "lift", "assoc"})


class NoMatch(ValueError):
    """The subterm at the given path is not an instance of the axiom."""


# --------------------------------------------------------------- parsing


def parse_pure(src: str) -> PureTerm:
    """Read ``λx.e`` / ``\\x.e`` notation with left-associative application."""
    toks = [t for t in _tokens(src)]
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"expected {expected or 'a term'} at token {pos} in {src!r}")
        pos += 1
        return tok

    def term():
        if peek() == "λ":
            take()
            params = []
            while peek() not in (".", None):
                params.append(take())
            take(".")
            body = term()
            for p in reversed(params):
                body = PLam(p, body)
            return body
        head = atom()
        while peek() not in (None, ")"):
            head = PApp(head, term() if peek() == "λ" else atom())
        return head

    def atom():
        tok = take()
        if tok == "(":
            t = term()
            take(")")
            return t
        if tok in (")", ".", "λ"):
            raise ValueError(f"unexpected {tok!r} in {src!r}")
        return PVar(tok)

    t = term()
    if pos != len(toks):
        raise ValueError(f"trailing input in {src!r}")
    return t


def _tokens(src: str) -> Iterator[str]:
    name = ""
    for ch in src:
        if ch not in "λ\\" and (ch.isalnum() or ch in "_'"):
            name += ch
            continue
        if name:
            yield name
            name = ""
        if ch in "λ\\":
            yield "λ"
        elif ch in "().":
            yield ch
        elif not ch.isspace():
            raise ValueError(f"bad character {ch!r}")
    if name:
        yield name


# ------------------------------------------------------- basic operations


def free_vars(t: PureTerm) -> frozenset[str]:
    if isinstance(t, PVar):
        return frozenset([t.name])
    if isinstance(t, PLam):
        return free_vars(t.body) - {t.param}
    return free_vars(t.fn) | free_vars(t.arg)


def all_names(t: PureTerm) -> set[str]:
    if isinstance(t, PVar):
        return {t.name}
    if isinstance(t, PLam):
        return {t.param} | all_names(t.body)
    return all_names(t.fn) | all_names(t.arg)


def fresh_name(base: str, avoid: set[str] | frozenset[str]) -> str:
    stem = base.rstrip("'0123456789") or "v"
    for i in itertools.count(1):
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def size(t: PureTerm) -> int:
    if isinstance(t, PVar):
        return 1
    if isinstance(t, PLam):
        return 1 + size(t.body)
    return 1 + size(t.fn) + size(t.arg)


def subst(t: PureTerm, x: str, v: PureTerm) -> PureTerm:
    """Capture-avoiding ``t{x:=v}``."""
    if isinstance(t, PVar):
        return v if t.name == x else t
    if isinstance(t, PApp):
        return PApp(subst(t.fn, x, v), subst(t.arg, x, v))
    if t.param == x:
        return t
    if t.param in free_vars(v) and x in free_vars(t.body):
        new = fresh_name(t.param, all_names(t.body) | all_names(v) | {x})
        return PLam(new, subst(subst(t.body, t.param, PVar(new)), x, v))
    return PLam(t.param, subst(t.body, x, v))


def at(t: PureTerm, path: Path) -> PureTerm:
    for i in path:
        if isinstance(t, PLam) and i == 0:
            t = t.body
        elif isinstance(t, PApp) and i in (0, 1):
            t = t.fn if i == 0 else t.arg
        else:
            raise NoMatch(f"path {path} leaves the term")
    return t


def replace_at(t: PureTerm, path: Path, new: PureTerm) -> PureTerm:
    """Put ``new`` at ``path``.

    Binders on the way are renamed only when they would capture a variable
    that is free in ``new`` but was not free in the subterm it replaces.
    """
    return _replace(t, path, new, free_vars(new) - free_vars(at(t, path)))


def _replace(t: PureTerm, path: Path, new: PureTerm, foreign: frozenset[str]) -> PureTerm:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(t, PLam) and i == 0:
        if t.param in foreign:
            fresh = fresh_name(t.param, all_names(t.body) | all_names(new))
            t = PLam(fresh, subst(t.body, t.param, PVar(fresh)))
        return PLam(t.param, _replace(t.body, rest, new, foreign))
    if isinstance(t, PApp) and i == 0:
        return PApp(_replace(t.fn, rest, new, foreign), t.arg)
    if isinstance(t, PApp) and i == 1:
        return PApp(t.fn, _replace(t.arg, rest, new, foreign))
    raise NoMatch(f"path {path} leaves the term")


# -------------------------------------------------------- de Bruijn form

DB = Union[int, tuple]  # int index | ("lam", body) | ("app", f, a)


def to_debruijn(t: PureTerm, env: tuple[str, ...] = ()) -> DB:
    """Nameless form; free variables become ``("free", name)``."""
    if isinstance(t, PVar):
        for i, n in enumerate(reversed(env)):
            if n == t.name:
                return i
        return ("free", t.name)
    if isinstance(t, PLam):
        return ("lam", to_debruijn(t.body, env + (t.param,)))
    return ("app", to_debruijn(t.fn, env), to_debruijn(t.arg, env))


def from_debruijn(d: DB, depth: int = 0) -> PureTerm:
    if isinstance(d, int):
        return PVar(f"x{depth - 1 - d}")
    if d[0] == "free":
        return PVar(d[1])
    if d[0] == "lam":
        return PLam(f"x{depth}", from_debruijn(d[1], depth + 1))
    return PApp(from_debruijn(d[1], depth), from_debruijn(d[2], depth))


def alpha_eq(a: PureTerm, b: PureTerm) -> bool:
    return to_debruijn(a) == to_debruijn(b)


# ------------------------------------------------- answers and contexts


def is_value(t: PureTerm) -> bool:
    return isinstance(t, PLam)


def is_answer(t: PureTerm) -> bool:
    """``A ::= λx.e | (λx.A) e``"""
    while isinstance(t, PApp) and isinstance(t.fn, PLam):
        t = t.fn.body
    return isinstance(t, PLam)


@dataclass(frozen=True)
class Decomp:
    """Outcome of searching for the standard redex."""

    kind: str  # "answer" | "redex" | "demand"
    path: Path = ()
    axiom: str = ""  # for redexes: "deref" (value argument), "lift" or "assoc"
    var: str = ""  # for demands: the free variable in the hole


def decompose(t: PureTerm) -> Decomp:
    """Split ``t`` by the evaluation-context grammar.

    A ``demand`` result means the hole holds a free variable; the caller that
    binds it decides what happens next.
    """
    if isinstance(t, PVar):
        return Decomp("demand", (), var=t.name)
    if isinstance(t, PLam):
        return Decomp("answer")
    fn = decompose(t.fn)
    if fn.kind == "redex":
        return Decomp("redex", (0,) + fn.path, fn.axiom)
    if fn.kind == "demand":
        return Decomp("demand", (0,) + fn.path, var=fn.var)
    if not isinstance(t.fn, PLam):
        return Decomp("redex", (), "lift")  # ((λx.A) e) e′
    lam = t.fn
    body = decompose(lam.body)
    if body.kind == "answer":
        return Decomp("answer")
    if body.kind == "redex":
        return Decomp("redex", (0, 0) + body.path, body.axiom)
    if body.var != lam.param:
        return Decomp("demand", (0, 0) + body.path, var=body.var)
    # the body needs the argument
    if is_value(t.arg):
        return Decomp("redex", (), "deref")
    arg = decompose(t.arg)
    if arg.kind == "answer":
        return Decomp("redex", (), "assoc")
    if arg.kind == "redex":
        return Decomp("redex", (1,) + arg.path, arg.axiom)
    return Decomp("demand", (1,) + arg.path, var=arg.var)


def demand_path(body: PureTerm, x: str) -> Optional[Path]:
    """Path of the hole when ``body`` is ``E[x]`` with that ``x`` free, else None."""
    d = decompose(body)
    if d.kind == "demand" and d.var == x:
        return d.path
    return None


# ----------------------------------------------------------------- axioms


def contract(axiom: str, s: PureTerm) -> PureTerm:
    """Rewrite one axiom instance at the root of ``s``."""
    if axiom in ("deref", "beta-need"):
        if not (isinstance(s, PApp) and isinstance(s.fn, PLam) and is_value(s.arg)):
            raise NoMatch(f"{axiom}: expected (λx.E[x]) V")
        x, body = s.fn.param, s.fn.body
        hole = demand_path(body, x)
        if hole is None:
            raise NoMatch(f"{axiom}: body does not demand {x}")
        if axiom == "beta-need":
            return subst(body, x, s.arg)
        if x in free_vars(s.arg):  # the binder would capture the copied value
            x = fresh_name(x, all_names(body) | all_names(s.arg))
            body = subst(body, s.fn.param, PVar(x))
        return PApp(PLam(x, replace_at(body, hole, s.arg)), s.arg)
    if axiom == "lift":
        if not (isinstance(s, PApp) and isinstance(s.fn, PApp) and isinstance(s.fn.fn, PLam) and is_answer(s.fn.fn.body)):
            raise NoMatch("lift: expected ((λx.A) e) e′")
        lam, e, e2 = s.fn.fn, s.fn.arg, s.arg
        x, a = lam.param, lam.body
        if x in free_vars(e2):
            new = fresh_name(x, all_names(a) | all_names(e2))
            x, a = new, subst(a, lam.param, PVar(new))
        return PApp(PLam(x, PApp(a, e2)), e)
    if axiom == "assoc":
        if not (isinstance(s, PApp) and isinstance(s.fn, PLam) and isinstance(s.arg, PApp) and isinstance(s.arg.fn, PLam)):
            raise NoMatch("assoc: expected (λx.E[x]) ((λy.A) e)")
        outer, inner, e = s.fn, s.arg.fn, s.arg.arg
        if not is_answer(inner.body) or demand_path(outer.body, outer.param) is None:
            raise NoMatch("assoc: demand or answer condition fails")
        y, a = inner.param, inner.body
        if y in free_vars(outer):
            new = fresh_name(y, all_names(a) | all_names(outer))
            y, a = new, subst(a, inner.param, PVar(new))
        return PApp(PLam(y, PApp(outer, a)), e)
    raise ValueError(f"unknown axiom {axiom!r}")


def apply_axiom(axiom: str, t: PureTerm, path: Path = ()) -> PureTerm:
    return replace_at(t, path, contract(axiom, at(t, path)))


def standard_step(t: PureTerm, axioms: frozenset[str] = NEED_SET) -> Union[PureTerm, str]:
    """One standard-reduction step, or ``"answer"`` / ``"stuck"``."""
    d = decompose(t)
    if d.kind == "answer":
        return "answer"
    if d.kind == "demand":
        return "stuck"
    axiom = d.axiom
    if axiom == "deref":
        axiom = "beta-need" if "beta-need" in axioms else "deref"
    return apply_axiom(axiom, t, d.path)


def standard_reduce(t: PureTerm, axioms: frozenset[str] = NEED_SET, limit: int = 1000) -> tuple[str, PureTerm, int]:
    """Drive to an answer; returns (``answer``|``stuck``|``timeout``, term, steps)."""
    for n in range(limit):
        nxt = standard_step(t, axioms)
        if isinstance(nxt, str):
            return nxt, t, n
        t = nxt
    return ("answer" if is_answer(t) else "timeout"), t, limit


def unwind(a: PureTerm, limit: int = 100) -> PureTerm:
    """Substitute pending ``(λx.A) e`` bindings of an answer away."""
    for _ in range(limit):
        if not (isinstance(a, PApp) and isinstance(a.fn, PLam)):
            return a
        a = subst(a.fn.body, a.fn.param, a.arg)
    return a


# ------------------------------------------------ full reduction relation


def redexes(t: PureTerm, axioms: frozenset[str], path: Path = ()) -> Iterator[tuple[str, Path]]:
    """Every (axiom, path) instance anywhere in ``t``."""
    for ax in sorted(axioms):
        try:
            contract(ax, t)
        except NoMatch:
            continue
        yield ax, path
    if isinstance(t, PLam):
        yield from redexes(t.body, axioms, path + (0,))
    elif isinstance(t, PApp):
        yield from redexes(t.fn, axioms, path + (0,))
        yield from redexes(t.arg, axioms, path + (1,))


def successors(t: PureTerm, axioms: frozenset[str] = NEED_SET) -> list[PureTerm]:
    return [apply_axiom(ax, t, p) for ax, p in redexes(t, axioms)]


# ------------------------------------------------------------ enumeration


def enumerate_db(max_size: int) -> Iterator[DB]:
    """Closed de Bruijn terms with at most ``max_size`` nodes."""
    memo: dict[tuple[int, int], list[DB]] = {}

    def exact(n: int, depth: int) -> list[DB]:
        key = (n, depth)
        if key in memo:
            return memo[key]
        out: list[DB] = []
        if n == 1:
            out.extend(range(depth))
        elif n >= 2:
            out.extend(("lam", b) for b in exact(n - 1, depth + 1))
            for k in range(1, n - 1):
                for f in exact(k, depth):
                    out.extend(("app", f, a) for a in exact(n - 1 - k, depth))
        memo[key] = out
        return out

    for n in range(1, max_size + 1):
        yield from exact(n, 0)


def enumerate_terms(max_size: int) -> Iterator[PureTerm]:
    for d in enumerate_db(max_size):
        yield from_debruijn(d)


# ----------------------------------------------------------- confluence


@dataclass
class GraphResult:
    nodes: int
    normal_forms: list[PureTerm]
    truncated: bool
    cyclic: bool


def reduction_graph(t: PureTerm, max_depth: int, axioms: frozenset[str] = NEED_SET) -> GraphResult:
    """Breadth-first exploration of everything reachable within ``max_depth``."""
    seen = {to_debruijn(t): 0}
    frontier = deque([(t, 0)])
    normal: dict[DB, PureTerm] = {}
    truncated = cyclic = False
    while frontier:
        u, d = frontier.popleft()
        nxt = successors(u, axioms)
        if not nxt:
            normal.setdefault(to_debruijn(u), u)
            continue
        if d == max_depth:
            truncated = True
            continue
        for v in nxt:
            key = to_debruijn(v)
            if key in seen:
                cyclic = cyclic or seen[key] <= d
                continue
            seen[key] = d + 1
            frontier.append((v, d + 1))
    return GraphResult(len(seen), list(normal.values()), truncated, cyclic)


@dataclass
class ConfluenceReport:
    max_size: int
    max_depth: int
    terms: int = 0
    truncated: int = 0
    cyclic: int = 0
    counterexamples: list[tuple[PureTerm, list[PureTerm]]] = field(default_factory=list)
    answers_compared: int = 0
    answer_mismatches: list[tuple[PureTerm, PureTerm, PureTerm]] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.counterexamples and not self.answer_mismatches

    def summary(self) -> str:
        lines = [
            f"closed terms up to {self.max_size} nodes, depth {self.max_depth}: {self.terms}",
            f"graphs cut at the depth bound: {self.truncated}; graphs with cycles: {self.cyclic}",
            f"normal-form counterexamples: {len(self.counterexamples)}",
            f"answer pairs compared (need vs deref): {self.answers_compared}; mismatches: {len(self.answer_mismatches)}",
        ]
        for t, nfs in self.counterexamples[:5]:
            lines.append(f"  {t}  ->  " + " | ".join(map(str, nfs)))
        for t, a, b in self.answer_mismatches[:5]:
            lines.append(f"  {t}: need {a}  deref {b}")
        return "\n".join(lines)


def check_term(t: PureTerm, max_depth: int, report: ConfluenceReport) -> None:
    g = reduction_graph(t, max_depth)
    report.terms += 1
    report.truncated += g.truncated
    report.cyclic += g.cyclic
    if len(g.normal_forms) > 1:
        report.counterexamples.append((t, g.normal_forms))
    need = standard_reduce(t, NEED_SET, max_depth * 4)
    deref = standard_reduce(t, DEREF_SET, max_depth * 4)
    if need[0] == "answer" and deref[0] == "answer":
        report.answers_compared += 1
        a, b = unwind(need[1]), unwind(deref[1])
        if not alpha_eq(a, b):
            report.answer_mismatches.append((t, a, b))


def check_confluence(max_size: int, max_depth: int) -> ConfluenceReport:
    report = ConfluenceReport(max_size, max_depth)
    for t in enumerate_terms(max_size):
        check_term(t, max_depth, report)
    return report
