"""Both stepper paths end to end, turned into comparable step lists.

The reference path rewrites the lazy program directly; the instrumented path
expands, annotates, runs the marks machine, rebuilds machine states from its
output and synthesizes lazy terms back.  Both produce the same kind of
display states (main term plus every definition body), which are deduplicated
into visible steps and compared.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .annotator import annotate_program
from .cs_machine import Definitions
from .cskm_machine import run_cskm
from .errors import LazystepError, StageError
from .expander import expand_program
from .lazy_core import DEFAULT_BUDGET, DisplayState, LRState, RewriteStep, display_state, eval_lr, initial_state
from .reconstructor import iter_states
from .syntax import Program, parse, render
from .synthesizer import synthesize_state
from .terms import App, Bool, Hi, If, Int, Prim1, Prim2, Term, Var, children, get_at, replace_at, with_children

# the machine needs many transitions per visible step (marks, outputs, loops)
MACHINE_FACTOR = 200


@dataclass(frozen=True)
class Side:
    text: str
    spans: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {"text": self.text, "spans": [list(s) for s in self.spans]}

    @staticmethod
    def from_json(d: dict) -> "Side":
        return Side(d["text"], tuple((int(a), int(b)) for a, b in d["spans"]))


@dataclass(frozen=True)
class Step:
    index: int
    rule: str
    before: Side
    after: Side
    changed_defs: tuple[str, ...] = ()
    # display terms, kept for comparison; not serialized
    states: Optional[tuple[DisplayState, DisplayState]] = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "rule": self.rule,
            "before": self.before.to_json(),
            "after": self.after.to_json(),
            "changedDefs": list(self.changed_defs),
        }

    @staticmethod
    def from_json(d: dict) -> "Step":
        return Step(
            int(d["index"]),
            str(d["rule"]),
            Side.from_json(d["before"]),
            Side.from_json(d["after"]),
            tuple(d.get("changedDefs", ())),
        )


@dataclass
class Trace:
    source: str
    steps: list[Step]
    verdict: str  # "value" | "error" | "timeout"
    meta: dict = field(default_factory=dict)

    @property
    def final_text(self) -> str:
        return self.steps[-1].after.text if self.steps else ""

    def to_json(self) -> dict:
        return {"source": self.source, "verdict": self.verdict, "steps": [s.to_json() for s in self.steps], "meta": self.meta}

    @staticmethod
    def from_json(d: dict) -> "Trace":
        return Trace(str(d["source"]), [Step.from_json(s) for s in d["steps"]], str(d["verdict"]), dict(d.get("meta", {})))

    def __eq__(self, other) -> bool:
        return isinstance(other, Trace) and self.to_json() == other.to_json()


# -- highlight spans ---------------------------------------------------------------


def _same_node(a: Term, b: Term) -> bool:
    ka, kb = children(a), children(b)
    return type(a) is type(b) and len(ka) == len(kb) and with_children(a, kb) == b


def diff_paths(a: Term, b: Term, path: tuple[int, ...] = ()) -> list[tuple[int, ...]]:
    """Smallest subtrees, in document order, whose replacement turns ``a`` into ``b``."""
    if a == b:
        return []
    if not _same_node(a, b) or not children(a):
        return [path]
    out: list[tuple[int, ...]] = []
    for i, (x, y) in enumerate(zip(children(a), children(b))):
        out += diff_paths(x, y, path + (i,))
    return out


def highlight(t: Term, paths: list[tuple[int, ...]]) -> Term:
    for p in paths:
        t = replace_at(t, p, Hi(get_at(t, p)))
    return t


def _render_state(state: DisplayState, shown: tuple[str, ...], paths: dict[str, list]) -> Side:
    main, defs = state
    pieces = [(f"(define {n} ", d, n) for n, d in defs if n in shown] + [("", main, "")]
    text, spans = "", []
    for prefix, term, key in pieces:
        r = render(highlight(term, paths.get(key, [])))
        base = len(text) + len(prefix)
        spans += [(base + s, base + e) for s, e in r.highlights]
        text += prefix + r.text + (")\n" if prefix else "")
    return Side(text, tuple(spans))


def changed_defs(a: DisplayState, b: DisplayState) -> tuple[str, ...]:
    return tuple(n for (n, x), (_, y) in zip(a[1], b[1]) if x != y)


def guess_rule(before: Term, paths: list) -> str:
    """Rule tag from the shape of the first changed subterm."""
    if not paths:
        return "none"
    r = get_at(before, paths[0])
    if isinstance(r, App):
        return "beta"
    if isinstance(r, Prim2):
        return "prim"
    if isinstance(r, Prim1):
        return r.op if r.op in ("car", "cdr") else "prim"
    if isinstance(r, If):
        return "if-true" if r.test == Bool(True) else "if-false"
    if isinstance(r, Var):
        return "defref"
    return "step"


def make_step(index: int, a: DisplayState, b: DisplayState, rule: Optional[str] = None) -> Step:
    shown = changed_defs(a, b)
    paths = {"": diff_paths(a[0], b[0])}
    for (n, x), (_, y) in zip(a[1], b[1]):
        if n in shown:
            paths[n] = diff_paths(x, y)
    if rule is None:
        first = next((k for k in [""] + list(shown) if paths[k]), "")
        src = a[0] if first == "" else dict(a[1])[first]
        rule = guess_rule(src, paths[first])
    return Step(index, rule, _render_state(a, shown, paths), _render_state(b, shown, paths), shown, (a, b))


def steps_from_states(states: list[DisplayState], rules: Optional[list[str]] = None, verdict: str = "value") -> list[Step]:
    """Visible steps between consecutive distinct display states."""
    if len(states) == 1:
        # nothing happens: one step showing the program as its own outcome
        return [make_step(0, states[0], states[0], verdict)]
    return [make_step(i, a, b, rules[i] if rules else None) for i, (a, b) in enumerate(zip(states, states[1:]))]


def _dedup(states: list) -> list:
    out: list = []
    for s in states:
        if not out or out[-1] != s:
            out.append(s)
    return out


# -- the two paths -------------------------------------------------------------


def _program(p: Union[Program, str]) -> tuple[Program, str]:
    if isinstance(p, str):
        return parse(p), p
    return p, getattr(p, "source", "") or ""


def run_reference(
    p: Union[Program, str], budget: int = DEFAULT_BUDGET, on_step: Optional[Callable[[Step], None]] = None
) -> Trace:
    """Rewrite directly; ``on_step`` sees each visible step as soon as it exists."""
    prog, source = _program(p)
    names = tuple(n for n, _ in prog.defs)
    current = display_state(initial_state(prog), names)
    steps: list[Step] = []

    def observe(state: LRState, step: RewriteStep) -> None:
        nonlocal current
        shown = display_state(state, names)
        if shown == current:
            return  # a label-only rewrite
        steps.append(make_step(len(steps), current, shown, step.rule))
        current = shown
        if on_step is not None:
            on_step(steps[-1])

    result = eval_lr(prog, budget, observe=observe)
    verdict = {"answer": "value", "error": "error", "timeout": "timeout"}[result.kind]
    if not steps:
        steps = steps_from_states([current], verdict=verdict)
        if on_step is not None:
            on_step(steps[0])
    meta = {
        "mode": "reference",
        "budget": budget,
        "rewrites": len(result.steps),
        "rules": dict(Counter(s.rule for s in result.steps)),
    }
    if result.reason:
        meta["reason"] = result.reason
    return Trace(source, steps, verdict, meta)


@dataclass
class Instrumented:
    """The intermediate artifacts of one instrumented run."""

    expanded: object
    annotated: object
    machine: object
    displays: list[DisplayState]


def _stage(name: str, fn: Callable, *args, **kw):
    try:
        return fn(*args, **kw)
    except (LazystepError, RecursionError) as e:
        raise StageError(name, e) from e


def instrumented_run(p: Union[Program, str], budget: int = DEFAULT_BUDGET) -> Instrumented:
    prog, _ = _program(p)
    ex = _stage("expand", expand_program, prog)
    defs = Definitions(tuple(n for n, _ in ex.defs))
    ann = _stage("annotate", annotate_program, ex)
    machine = _stage("run", run_cskm, ann, budget * MACHINE_FACTOR)
    base = {i: b for i, (_, b) in enumerate(ex.defs)}
    displays = [_stage("synthesize", synthesize_state, ex.main, base, defs)]
    states = iter_states(machine.trace, base, keep_locations=True)
    while True:
        try:
            control, store = _stage("reconstruct", next, states)
        except StopIteration:
            break
        shown = _stage("synthesize", synthesize_state, control, store, defs)
        if shown != displays[-1]:
            displays.append(shown)
    return Instrumented(ex, ann, machine, displays)


def run_instrumented(p: Union[Program, str], budget: int = DEFAULT_BUDGET) -> Trace:
    prog, source = _program(p)
    run = instrumented_run(prog, budget)
    shown = _dedup(run.displays)
    verdict = {"halt": "value", "stuck": "error", "timeout": "timeout"}[run.machine.verdict]
    meta = {
        "mode": "instrumented",
        "budget": budget,
        "machine_steps": run.machine.steps,
        "events": len(run.machine.trace),
    }
    if run.machine.reason:
        meta["reason"] = run.machine.reason
    return Trace(source, steps_from_states(shown, verdict=verdict), verdict, meta)


# -- comparison -----------------------------------------------------------------


@dataclass
class Divergence:
    index: int
    reference: Optional[Step]
    instrumented: Optional[Step]
    detail: str = ""

    def __str__(self) -> str:
        ref = self.reference.before.text + "  ->  " + self.reference.after.text if self.reference else "(none)"
        ins = self.instrumented.before.text + "  ->  " + self.instrumented.after.text if self.instrumented else "(none)"
        return f"divergence at step {self.index} ({self.detail})\n  reference:    {ref}\n  instrumented: {ins}"


@dataclass
class Equal:
    steps: int

    def __bool__(self) -> bool:
        return True


def _same(a: Step, b: Step) -> bool:
    shown = lambda s: (s.before, s.after, s.changed_defs)  # noqa: E731
    if shown(a) != shown(b):
        return False
    # the rendered text is what users see; terms, when both are at hand, are stricter
    return not (a.states and b.states) or a.states == b.states


def compare_traces(ref: Trace, ins: Trace) -> Union[Equal, Divergence]:
    """Stepwise comparison; a timed-out side only has to agree on its prefix."""
    n = min(len(ref.steps), len(ins.steps))
    for i in range(n):
        if not _same(ref.steps[i], ins.steps[i]):
            return Divergence(i, ref.steps[i], ins.steps[i], "different terms")
    partial = "timeout" in (ref.verdict, ins.verdict)
    if not partial:
        if len(ref.steps) != len(ins.steps):
            extra = max(len(ref.steps), len(ins.steps)) - 1
            r = ref.steps[n] if n < len(ref.steps) else None
            s = ins.steps[n] if n < len(ins.steps) else None
            return Divergence(min(n, extra), r, s, "different lengths")
        if ref.verdict != ins.verdict:
            return Divergence(n - 1, ref.steps[-1], ins.steps[-1], f"verdicts {ref.verdict} / {ins.verdict}")
    else:
        longer, shorter = (ref, ins) if len(ref.steps) > len(ins.steps) else (ins, ref)
        if shorter.verdict != "timeout" and len(longer.steps) != len(shorter.steps):
            r = ref.steps[n] if n < len(ref.steps) else None
            s = ins.steps[n] if n < len(ins.steps) else None
            return Divergence(n, r, s, "one side finished early")
    return Equal(n)


def check_bisimulation(p: Union[Program, str], budget: int = DEFAULT_BUDGET) -> Union[Equal, Divergence]:
    prog, _ = _program(p)
    return compare_traces(run_reference(prog, budget), run_instrumented(prog, budget))


def int_value(trace: Trace) -> Optional[int]:
    """The final value when it is an integer (handy for tests and reports)."""
    if trace.verdict != "value" or not trace.steps:
        return None
    last = trace.steps[-1]
    if last.states:
        final = last.states[1][0]
        return final.value if isinstance(final, Int) else None
    try:
        return int(last.after.text.rsplit("\n", 1)[-1])
    except ValueError:
        return None
