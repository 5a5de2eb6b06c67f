import random

import pytest
from hypothesis import given, settings, strategies as st

from lazystep import fuzz
from lazystep.annotator import annotate, annotate_program
from lazystep.cs_machine import run_cs
from lazystep.cskm_machine import run_cskm
from lazystep.errors import AnnotationError
from lazystep.expander import expand_program
from lazystep.reconstructor import recon_context, split_event
from lazystep.syntax import parse_term
from lazystep.terms import Ccm, Delay, Force, Int, Loc, Prim2, Wcm, walk


def events(term):
    r = run_cskm(annotate(term), 10_000)
    assert r.verdict == "halt"
    return r, [split_event(e) for e in r.trace]


def test_prim_redex_brackets_its_step():
    _, evs = events(parse_term("(+ 1 2)"))
    assert evs == [(("+", 1, 2), []), (3, [])]


def test_operand_evaluated_under_a_frame_mark():
    t = annotate(parse_term("(+ (+ 1 2) 5)"))
    marks = [n.mark for n in walk(t) if isinstance(n, Wcm)]
    assert any("prim2-1" in repr(m) for m in marks)
    _, evs = events(parse_term("(+ (+ 1 2) 5)"))
    assert evs[0][1] == [("prim2-1", "+", 5)]


def test_delay_announces_the_location_and_its_body():
    r, evs = events(Delay(Int(5)))
    assert r.value == Loc(0)
    assert evs == [(("delay", 5), []), (("loc", Loc(0), 5), [])]


def test_force_of_a_thunk_reports_the_memoized_value():
    r, evs = events(Force(Delay(Prim2("+", Int(1), Int(2)))))
    assert r.value == Int(3)
    heads = [h for h, _ in evs]
    assert ("val", Loc(0), 3) in heads
    val_marks = dict((h, m) for h, m in evs if isinstance(h, tuple) and h[0] == "val")
    # the mark for the location being forced is dropped from the val event
    assert val_marks[("val", Loc(0), 3)] == [("force",)]
    inner = [m for h, m in evs if h == ("+", 1, 2)][0]
    assert inner == [("force", Loc(0)), ("force",)]


@pytest.mark.parametrize("bad", [Loc(1), Ccm(), Wcm(Int(1), Int(2))])
def test_rejects_non_expander_input(bad):
    with pytest.raises(AnnotationError):
        annotate(bad)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_annotation_preserves_results(seed):
    ex = expand_program(fuzz.generate(random.Random(seed), max_size=30))
    plain = run_cs(ex, 100_000)
    annotated = run_cskm(annotate_program(ex), 5_000_000)
    if plain.verdict == "timeout" or annotated.verdict == "timeout":
        return
    assert plain.verdict == annotated.verdict
    if plain.verdict == "halt":
        assert plain.value == annotated.value
    for ev in annotated.trace:
        _, marks = split_event(ev)
        recon_context(marks)  # every mark list decodes
