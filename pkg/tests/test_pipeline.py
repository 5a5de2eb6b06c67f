import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from lazystep import fuzz, traceio
from lazystep.errors import AnnotationError, StageError
from lazystep.pipeline import (
    Divergence, Equal, Side, check_bisimulation, compare_traces, diff_paths, instrumented_run, int_value,
    run_instrumented, run_reference,
)
from lazystep.syntax import parse_term


def texts(trace):
    return [(s.before.text, s.after.text) for s in trace.steps]


def test_doubling_example_narrative(ex1):
    t = run_reference(ex1)
    assert [s.rule for s in t.steps] == ["defref", "beta", "prim", "prim", "prim"]
    assert texts(t)[1:] == [
        ("((lambda (x) (+ x x)) (+ 1 (+ 2 3)))", "(+ (+ 1 (+ 2 3)) (+ 1 (+ 2 3)))"),
        ("(+ (+ 1 (+ 2 3)) (+ 1 (+ 2 3)))", "(+ (+ 1 5) (+ 1 5))"),
        ("(+ (+ 1 5) (+ 1 5))", "(+ 6 6)"),
        ("(+ 6 6)", "12"),
    ]
    assert t.steps[2].before.spans == ((8, 15), (22, 29))
    assert t.steps[2].after.spans == ((8, 9), (16, 17))
    assert t.meta["rules"] == {"defref": 1, "beta": 1, "prim": 3}


def test_literal_program_is_one_step():
    for run in (run_reference, run_instrumented):
        t = run("7")
        assert t.verdict == "value" and len(t.steps) == 1
        assert texts(t) == [("7", "7")] and int_value(t) == 7


def test_nested_sum_both_paths():
    want = [("(+ (+ 1 2) 5)", "(+ 3 5)"), ("(+ 3 5)", "8")]
    assert texts(run_reference("(+ (+ 1 2) 5)")) == want
    assert texts(run_instrumented("(+ (+ 1 2) 5)")) == want


def test_stuck_and_timeout_verdicts():
    assert run_reference("(/ 1 0)").verdict == "error"
    assert run_instrumented("(/ 1 0)").verdict == "error"
    loop = "(define (w x) (w x)) (w 1)"
    assert run_reference(loop, 10).verdict == "timeout"
    assert run_instrumented(loop, 10).verdict == "timeout"
    assert check_bisimulation(loop, 10)


def test_golden_examples_agree(ex1, ex2, ex3):
    for src in (ex1, ex2, ex3):
        r = check_bisimulation(src)
        assert isinstance(r, Equal), str(r)


def test_nats_definition_updates(ex3):
    t = run_reference(ex3)
    updated = [s for s in t.steps if "nats" in s.changed_defs]
    assert updated
    assert all(s.before.text.startswith("(define nats ") for s in updated)
    assert int_value(t) == 5


def test_divergence_is_reported():
    a, b = run_reference("(+ (+ 1 2) 5)"), run_instrumented("(+ (+ 1 2) 5)")
    b.steps[1] = dataclasses.replace(b.steps[1], after=Side("9", ((0, 1),)), states=())
    d = compare_traces(a, b)
    assert isinstance(d, Divergence) and d.index == 1
    assert "divergence at step 1" in str(d)


def test_length_mismatch_is_a_divergence():
    a, b = run_reference("(+ (+ 1 2) 5)"), run_reference("(+ 1 2)")
    assert isinstance(compare_traces(a, b), Divergence)


def test_comparison_survives_serialization(ex1):
    a = run_reference(ex1)
    b = traceio.loads(traceio.dumps(run_instrumented(ex1)))
    assert compare_traces(a, b)
    assert int_value(b) == 12


def test_stage_errors_name_their_stage(monkeypatch):
    import lazystep.pipeline as pl

    def broken(_):
        raise AnnotationError("bad input")

    monkeypatch.setattr(pl, "annotate_program", broken)
    with pytest.raises(StageError) as info:
        instrumented_run("(+ 1 2)")
    assert info.value.stage == "annotate"
    assert isinstance(info.value.cause, AnnotationError)


def test_diff_paths():
    a, b = parse_term("(+ (+ 1 2) 5)"), parse_term("(+ 3 5)")
    assert diff_paths(a, b) == [(0,)]
    assert diff_paths(a, a) == []


def _check_spans(trace):
    for s in trace.steps:
        for side in (s.before, s.after):
            for a, b in side.spans:
                assert 0 <= a < b <= len(side.text)
        if len(s.before.spans) > 1:
            assert len(s.before.spans) == len(s.after.spans)
        if trace.verdict == "value" or s.index < len(trace.steps) - 1:
            assert s.before.text != s.after.text or len(trace.steps) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_random_programs(seed):
    p = fuzz.generate(random.Random(seed), max_size=30)
    ref, ins = run_reference(p, 5_000), run_instrumented(p, 5_000)
    assert compare_traces(ref, ins), str(compare_traces(ref, ins))
    _check_spans(ref)
    assert [s.index for s in ref.steps] == list(range(len(ref.steps)))
