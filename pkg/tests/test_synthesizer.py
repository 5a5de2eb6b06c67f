import pytest

from lazystep.checks import surface_terms, unmacro_roundtrip
from lazystep.cs_machine import Definitions
from lazystep.errors import SynthesisError
from lazystep.expander import expand
from lazystep.lazy_core import CYCLE
from lazystep.synthesizer import effective_store, synthesize_state, unmacro
from lazystep.syntax import parse_term, render_text
from lazystep.terms import App, Bool, Cons, Delay, Force, ForceLoc, If, Int, Lam, Loc, Prim1, Prim2, Var


def S(src):
    return parse_term(src)


def test_left_inverse_of_expansion_examples():
    assert unmacro(expand(S("(+ 1 2)")), {}) == S("(+ 1 2)")
    assert unmacro(Lam("x", Force(Var("x")))) == Lam("x", Var("x"))


def test_location_synthesizes_its_content():
    assert unmacro(Loc(0), {0: S("(+ 1 2)")}) == S("(+ 1 2)")


def test_force_loc_body_wins_everywhere():
    t = Prim2("+", ForceLoc(0, S("(+ 1 2)")), Loc(0))
    assert render_text(unmacro(t, {0: S("(+ 1 5)")})) == "(+ (+ 1 2) (+ 1 2))"
    assert effective_store(t, {0: S("(+ 1 5)")}) == {0: S("(+ 1 2)")}


def test_structural_clauses():
    assert unmacro(App(Force(Var("f")), Delay(Loc(1))), {1: Int(5)}) == App(Var("f"), Int(5))
    assert unmacro(If(Force(Loc(0)), Var("a"), Var("b")), {0: Bool(True)}) == If(Bool(True), Var("a"), Var("b"))


def test_unbound_location():
    with pytest.raises(SynthesisError):
        unmacro(Loc(9), {})


def test_self_referencing_location_is_cut():
    assert unmacro(Loc(0), {0: Loc(0)}) == CYCLE


def test_recursive_definition_prints_by_name():
    defs = Definitions(("ones",))
    store = {0: Cons(Loc(1), Loc(0)), 1: Int(1)}
    main, shown = synthesize_state(Prim1("car", Force(Loc(0))), store, defs)
    assert render_text(main) == "(car (cons 1 ones))"
    assert [(n, render_text(b)) for n, b in shown] == [("ones", "(cons 1 ones)")]


def test_unsettled_definition_stays_a_name():
    defs = Definitions(("ones",))
    main, shown = synthesize_state(Loc(0), {0: Cons(Delay(Int(1)), Delay(Var("ones")))}, defs)
    assert main == Var("ones")
    assert render_text(shown[0][1]) == "(cons 1 ones)"


def test_shared_location_synthesizes_identically():
    store = {0: S("(+ 1 2)"), 1: Cons(Loc(0), Loc(0))}
    out = unmacro(Prim2("+", Loc(0), Prim1("car", Loc(1))), store)
    assert render_text(out) == "(+ (+ 1 2) (car (cons (+ 1 2) (+ 1 2))))"


def test_roundtrip_to_depth_four():
    checked, bad = unmacro_roundtrip(depth=4)
    assert checked == len(list(surface_terms(4)))
    assert bad == []
