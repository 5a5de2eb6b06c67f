import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from lazystep import fuzz
from lazystep.errors import ParseError, QuoteError
from lazystep.syntax import parse, parse_term, quote, render, render_program, render_text, unquote
from lazystep.terms import (
    App, Bool, Cons, Delay, children, Force, If, Int, Lam, Labeled, Loc, Null, Prim1, Prim2, Str, Var, strip_spans, walk,
)


def test_parse_smallest_composite():
    p = parse("(+ 1 2)")
    assert p.defs == ()
    assert strip_spans(p.main) == Prim2("+", Int(1), Int(2))


def test_define_sugar_desugars_to_lambda():
    p = parse("(define (f x) (+ x x)) (f (+ 1 (+ 2 3)))")
    assert p.def_names == ("f",)
    assert strip_spans(p.defs[0][1]) == Lam("x", Prim2("+", Var("x"), Var("x")))
    assert strip_spans(p.main) == App(Var("f"), Prim2("+", Int(1), Prim2("+", Int(2), Int(3))))


def test_multi_parameter_define_curries():
    p = parse("(define (g x y) (+ x y)) (g 1 2)")
    assert render_program(p) == "(define g (lambda (x) (lambda (y) (+ x y))))\n((g 1) 2)"


@pytest.mark.parametrize(
    "src,kind",
    [
        ("(car)", "arity"),
        ("(if 1 2)", "arity"),
        ("(+ 1", "lexical"),
        ('"abc', "lexical"),
        ("x", "unbound"),
        ("(lambda (x) y)", "unbound"),
        ("(define a 1) (define a 2) a", "duplicate"),
    ],
)
def test_parse_errors(src, kind):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.kind == kind


def test_comments_and_strings():
    assert render_text(parse("; heading\n(+ 1 2) ; trailing").main) == "(+ 1 2)"
    assert strip_spans(parse_term('"a\\"b"')) == Str('a"b')


def test_child_spans_nest_in_parent():
    src = "(define (f x) (if (< x 1) (cons x null) (car (cons 2 null)))) (f 3)"
    p = parse(src)
    for _, body in p.defs + (("main", p.main),):
        for node in walk(body):
            a, b = node.span
            assert 0 <= a < b <= len(src)
            for kid in children(node):
                assert a <= kid.span[0] and kid.span[1] <= b


def test_render_hides_labels():
    assert render(Labeled(1, Prim2("+", Int(1), Int(2)))).text == "(+ 1 2)"


def test_render_opaque_thunks_numbered_left_to_right():
    t = Cons(Labeled(7, Int(1)), Labeled(3, Prim2("+", Int(1), Int(2))))
    assert render(t, opaque=[3, 7]).text == "(cons ⟨thunk_1⟩ ⟨thunk_2⟩)"
    assert render(Int(42)).text == "42"


def test_render_span_map_is_laminar():
    r = render(parse_term("(if (null? null) ((lambda (z) (+ z 1)) 2) (car (cons 1 null)))"))
    spans = list(r.spans.values())
    for (a, b), (c, d) in itertools.combinations(spans, 2):
        assert b <= c or d <= a or (a <= c and d <= b) or (c <= a and b <= d)
    assert r.spans[()] == (0, len(r.text))


def test_quote_examples():
    assert quote(parse_term("(+ 1 2)")) == ("+", 1, 2)
    assert quote(Var("x")) == ("var", "x")
    assert unquote(("var", "x")) == Var("x")
    q = quote(Force(Delay(Int(5))))
    assert q == ("force", ("delay", 5))
    assert unquote(q) == Force(Delay(Int(5)))


def test_quote_keeps_locations():
    assert quote(Loc(4)) == Loc(4)
    assert unquote(quote(Cons(Loc(1), Null()))) == Cons(Loc(1), Null())


def test_unquote_rejects_garbage():
    with pytest.raises(QuoteError):
        unquote(("zzz", 1))
    with pytest.raises(QuoteError):
        unquote(("+", 1))


def _mterms(depth):
    leaves = [Int(0), Bool(True), Null(), Var("x"), Str("s")]
    if depth <= 1:
        return leaves
    sub = _mterms(depth - 1)[:7]
    out = list(leaves)
    for a in sub:
        out += [Delay(a), Force(a), Prim1("car", a), Lam("x", a)]
        for b in sub[:4]:
            out += [App(a, b), Prim2("-", a, b), Cons(a, b), If(a, b, Int(1))]
    return out


def test_quote_roundtrip_enumerated():
    terms = _mterms(4)
    assert len(terms) > 100
    for t in terms:
        assert unquote(quote(t)) == t


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_render_then_parse_is_a_fixpoint(seed):
    p = fuzz.generate(random.Random(seed), max_size=30)
    text = render_program(p)
    again = parse(text)
    assert again == p
    assert render_program(again) == text
