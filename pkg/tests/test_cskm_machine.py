import random

from hypothesis import given, settings, strategies as st

from lazystep import fuzz
from lazystep.annotator import annotate_program
from lazystep.cs_machine import run_cs
from lazystep.cskm_machine import EMPTY, OUTPUT_RESULT, Frame, collect_marks, list_items, run_cskm
from lazystep.expander import expand_program
from lazystep.reconstructor import split_event
from lazystep.syntax import parse, quote, parse_term
from lazystep.terms import Ccm, Cons, Delay, Int, Loc, LocP, Null, Output, Wcm


def test_wcm_then_ccm():
    r = run_cskm(Wcm(Int(7), Ccm()), 100)
    assert r.verdict == "halt" and r.value == Cons(Int(7), Null())


def test_output_emits_and_returns_a_dummy():
    r = run_cskm(Output(Int(9)), 100)
    assert r.steps == 2
    assert [e.value for e in r.trace] == [Int(9)]
    assert r.value == OUTPUT_RESULT


def test_loc_predicate():
    assert run_cskm(LocP(Loc(3)), 100).value.value is True
    assert run_cskm(LocP(Int(3)), 100).value.value is False
    assert run_cskm(LocP(Delay(Int(3))), 100).value.value is True


def test_collect_marks():
    assert collect_marks([], EMPTY) == Null()
    assert collect_marks([], Int(1)) == Cons(Int(1), Null())
    kont = [Frame("outer", (), Int(3)), Frame("mid", (), EMPTY), Frame("inner", (), Int(2))]
    assert list_items(collect_marks(kont, Int(1))) == [Int(1), Int(2), Int(3)]


def test_traces_of_small_programs():
    r = run_cskm(annotate_program(expand_program(parse("(+ 1 2)"))), 10_000)
    assert r.verdict == "halt" and r.value == Int(3)
    heads = [split_event(e)[0] for e in r.trace]
    assert heads[-1] == 3
    r = run_cskm(annotate_program(expand_program(parse("5"))), 10_000)
    assert len(r.trace) >= 1 and split_event(r.trace[-1])[0] == 5


def test_first_event_of_nested_sum():
    from lazystep.annotator import annotate

    r = run_cskm(annotate(parse_term("(+ (+ 1 2) 5)")), 10_000)
    assert split_event(r.trace[0]) == (quote(parse_term("(+ 1 2)")), [("prim2-1", "+", 5)])


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_agrees_with_cs_machine_on_unannotated_terms(seed):
    ex = expand_program(fuzz.generate(random.Random(seed), max_size=30))
    cs = run_cs(ex, 100_000)
    km = run_cskm(ex, 100_000)
    assert cs.verdict == km.verdict
    if cs.verdict == "halt":
        assert cs.value == km.value
        assert cs.final.store == km.store
    assert km.trace == []


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_mark_register_resets_and_runs_repeat(seed):
    prog = annotate_program(expand_program(fuzz.generate(random.Random(seed), max_size=30)))
    depth = [0]

    def check(state, _out):
        if len(state.kont) > depth[0]:
            assert state.mark is EMPTY
        depth[0] = len(state.kont)
        for f in state.kont:
            assert isinstance(f, Frame)

    a = run_cskm(prog, 200_000, check=check)
    b = run_cskm(prog, 200_000)
    assert [e.value for e in a.trace] == [e.value for e in b.trace]
    for ev in a.trace:
        _, marks = split_event(ev)
        assert None not in marks
