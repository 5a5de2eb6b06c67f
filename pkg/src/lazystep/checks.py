"""Property campaigns shared by the test-suite and ``lazystep check``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import fuzz
from .annotator import annotate_program
from .cs_machine import run_cs
from .cskm_machine import run_cskm
from .expander import expand, expand_program
from .lazy_core import LabelSource, LRState, RewriteStep, check_consistent_labeling, eval_lr, from_heap, is_value
from .pipeline import check_bisimulation
from .reconstructor import reconstruct
from .syntax import Program, parse, render_text
from .synthesizer import unmacro
from .terms import App, Bool, Cons, If, Int, Lam, Null, Prim1, Prim2, Term, Var


@dataclass
class Failure:
    prop: str
    seed: int
    index: int
    source: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.prop}] seed {self.seed} program #{self.index}: {self.detail}\n    {self.source}"


@dataclass
class Report:
    programs: int = 0
    checks: dict[str, int] = field(default_factory=dict)
    failures: list[Failure] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def tick(self, prop: str) -> None:
        self.checks[prop] = self.checks.get(prop, 0) + 1

    def summary(self) -> str:
        lines = [f"programs: {self.programs}  time: {self.seconds:.2f}s"]
        for prop, n in self.checks.items():
            bad = sum(1 for f in self.failures if f.prop == prop)
            lines.append(f"  {prop:<14} {n - bad}/{n} passed")
        lines += [str(f) for f in self.failures[:20]]
        lines.append("failures: %d" % len(self.failures))
        return "\n".join(lines)


# -- single-program properties -------------------------------------------------------


def labeling_violations(p: Program, budget: int) -> list[str]:
    """Consistent labeling after every step, read back in tree form."""
    bad: list[str] = []

    def observe(state: LRState, step: RewriteStep) -> None:
        v = check_consistent_labeling(from_heap(state.main, state.heap))
        if v is not None and len(bad) < 3:
            bad.append(f"after {step.rule}: label {v.label} at {v.first} and {v.second}")

    eval_lr(p, budget, observe=observe)
    return bad


def reevaluations(p: Program, budget: int) -> list[str]:
    """Shared work happens at most once: a label holding a value is never reduced again."""
    done: set = set()
    bad: list[str] = []

    def observe(state: LRState, step: RewriteStep) -> None:
        root = step.root
        if root is None:
            return
        if root in done:
            bad.append(f"{step.rule} inside already evaluated {root!r}")
        elif is_value(state.heap[root], state.heap):
            done.add(root)

    eval_lr(p, budget, observe=observe)
    return bad


def nondeterminism(p: Program, budget: int) -> Optional[str]:
    a = eval_lr(p, budget, LabelSource())
    b = eval_lr(p, budget, LabelSource())
    if a.kind != b.kind or a.final.main != b.final.main or a.final.heap != b.final.heap:
        return "two runs from equal label sources differ"
    return None


def reconstruction_mismatches(p: Program, budget: int) -> list[str]:
    """Every reconstructed state occurs, in order, in the direct CS run."""
    ex = expand_program(p)
    direct = run_cs(ex, budget * 20)
    run = run_cskm(annotate_program(ex), budget * 200)
    if run.verdict == "timeout" or direct.verdict == "timeout":
        return []
    base = {i: b for i, (_, b) in enumerate(ex.defs)}
    states = reconstruct(run.trace, base)
    pos = 0
    for k, s in enumerate(states):
        while pos < len(direct.states):
            d = direct.states[pos]
            if d.control == s.control and all(d.store.get(l) == v for l, v in s.store.items()):
                break
            pos += 1
        else:
            return [f"reconstructed state {k} not found: {render_text(s.control)}"]
    return []


# -- campaigns -------------------------------------------------------------------------

PROPERTIES = ("bisimulation", "labeling", "determinism", "at-most-once", "reconstruction")


def campaign(
    n: int,
    seed: int = 0,
    max_size: int = 30,
    budget: int = 10_000,
    props: Iterable[str] = PROPERTIES,
    progress: Optional[Callable[[int], None]] = None,
) -> Report:
    props = tuple(props)
    report = Report()
    t0 = time.perf_counter()
    for i, p in enumerate(fuzz.corpus(n, seed, max_size)):
        report.programs += 1

        def fail(prop: str, detail: str) -> None:
            report.failures.append(Failure(prop, seed, i, p.source, detail))

        if "bisimulation" in props:
            report.tick("bisimulation")
            try:
                r = check_bisimulation(p, budget)
                if not r:
                    fail("bisimulation", str(r))
            except Exception as e:  # any crash is a finding
                fail("bisimulation", f"{type(e).__name__}: {e}")
        if "labeling" in props:
            report.tick("labeling")
            for d in labeling_violations(p, budget):
                fail("labeling", d)
        if "determinism" in props:
            report.tick("determinism")
            d = nondeterminism(p, budget)
            if d:
                fail("determinism", d)
        if "at-most-once" in props:
            report.tick("at-most-once")
            for d in reevaluations(p, budget)[:3]:
                fail("at-most-once", d)
        if "reconstruction" in props:
            report.tick("reconstruction")
            for d in reconstruction_mismatches(p, budget):
                fail("reconstruction", d)
        if progress:
            progress(i)
    report.seconds = time.perf_counter() - t0
    return report


# -- synthesis round trip over small surface terms -----------------------------------------


def surface_terms(depth: int, names: tuple[str, ...] = ("x",)) -> Iterable[Term]:
    """Every surface term up to ``depth`` from a small grammar slice.

    Leaves are one integer, ``null`` and the variables in scope; inner nodes
    cover every construct the expander rewrites.
    """
    leaves: list[Term] = [Int(1), Null()] + [Var(n) for n in names]
    if depth <= 1:
        yield from leaves
        return
    yield from leaves
    smaller = list(surface_terms(depth - 1, names))
    inner = list(surface_terms(depth - 1, names + (f"y{depth}",)))
    for a in smaller:
        yield Prim1("car", a)
    for a in smaller[:8]:
        for b in smaller[:8]:
            yield App(a, b)
            yield Prim2("+", a, b)
            yield Cons(a, b)
    for a in smaller[:4]:
        yield If(Bool(True), a, smaller[0])
    for b in inner[:12]:
        yield Lam(f"y{depth}", b)


def unmacro_roundtrip(depth: int = 5, limit: Optional[int] = None) -> tuple[int, list[str]]:
    checked, bad = 0, []
    for t in surface_terms(depth):
        if unmacro(expand(t)) != t:
            bad.append(render_text(t))
        checked += 1
        if limit is not None and checked >= limit:
            break
    return checked, bad


# -- benchmark ------------------------------------------------------------------------------

FIB = "(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2))))) (fib {n})"


@dataclass
class Bench:
    program: str
    plain_steps: int
    annotated_steps: int
    plain_seconds: float
    annotated_seconds: float

    @property
    def step_ratio(self) -> float:
        return self.annotated_steps / max(self.plain_steps, 1)

    @property
    def time_ratio(self) -> float:
        return self.annotated_seconds / max(self.plain_seconds, 1e-9)

    def line(self) -> str:
        return (
            f"{self.program}: steps {self.plain_steps} -> {self.annotated_steps} "
            f"(x{self.step_ratio:.1f}), time {self.plain_seconds * 1000:.1f}ms -> "
            f"{self.annotated_seconds * 1000:.1f}ms (x{self.time_ratio:.1f})"
        )


def bench(source: str, label: Optional[str] = None, budget: int = 50_000_000) -> Bench:
    """Same marks machine, with and without the annotation."""
    ex = expand_program(parse(source))
    t0 = time.perf_counter()
    plain = run_cskm(ex, budget)
    t1 = time.perf_counter()
    annotated = run_cskm(annotate_program(ex), budget)
    t2 = time.perf_counter()
    if plain.verdict != "halt" or annotated.verdict != "halt":
        raise RuntimeError(f"benchmark did not finish: {plain.verdict}/{annotated.verdict}")
    return Bench(label or source, plain.steps, annotated.steps, t1 - t0, t2 - t1)


def fib_bench(ns: Iterable[int] = (5, 8, 10)) -> list[Bench]:
    return [bench(FIB.format(n=n), f"fib {n}") for n in ns]
