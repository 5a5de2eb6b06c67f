import random

from hypothesis import given, settings, strategies as st

from lazystep import fuzz
from lazystep.checks import surface_terms
from lazystep.expander import expand, expand_program, well_formed_expansion
from lazystep.syntax import parse, parse_term, render_text
from lazystep.terms import App, Cons, Delay, Force, Int, Lam, Loc, Prim2, Var, Wcm, size, strip_spans, walk


def E(src):
    return strip_spans(expand(parse_term(src)))


def test_application_forces_operator_and_delays_argument():
    t = expand(App(Var("f"), Var("x")))
    assert t == App(Force(Var("f")), Delay(Var("x")))


def test_cons_delays_both_components():
    assert E("(cons 1 2)") == Cons(Delay(Int(1)), Delay(Int(2)))
    assert E("42") == Int(42)


def test_prim1_forces_its_operand():
    assert render_text(E("(car (cons 1 2))")) == "(car (force (cons (delay 1) (delay 2))))"


def test_expand_program_doubling_example():
    ex = expand_program(parse("(define (f x) (+ x x)) (f (+ 1 (+ 2 3)))"), force_main=False)
    assert ex.defs[0][0] == "f"
    assert strip_spans(ex.defs[0][1]) == Lam("x", Prim2("+", Force(Var("x")), Force(Var("x"))))
    assert render_text(ex.main) == "((force f) (delay (+ (force 1) (force (+ (force 2) (force 3))))))"


def test_expand_program_trivial():
    ex = expand_program(parse("5"), force_main=False)
    assert ex.defs == () and ex.main == Int(5)
    # the driver forces the main term so a delayed result is still evaluated
    assert expand_program(parse("5")).main == Force(Int(5))


def test_expansion_is_size_linear_and_well_formed():
    for t in surface_terms(4):
        m = expand(t)
        assert size(m) <= 3 * size(t)
        assert well_formed_expansion(m)
        assert not any(isinstance(n, (Loc, Wcm)) for n in walk(m))


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_expansion_of_random_programs(seed):
    p = fuzz.generate(random.Random(seed), max_size=30)
    ex = expand_program(p)
    assert [n for n, _ in ex.defs] == list(p.def_names)
    assert all(well_formed_expansion(b) for _, b in ex.defs)
