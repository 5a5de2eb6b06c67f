import pytest

from lazystep.need_calculus import (
    DEREF_SET, NEED_SET, NoMatch, PApp, PLam, PVar, alpha_eq, apply_axiom, check_confluence, enumerate_terms,
    free_vars, is_answer, parse_pure, reduction_graph, redexes, standard_reduce, standard_step, to_debruijn, unwind,
)

P = parse_pure
OMEGA = "(λx.x x) (λx.x x)"


def test_parser_accepts_both_lambda_spellings():
    assert P("λx.x") == P("\\x.x") == PLam("x", PVar("x"))
    assert P("f a b") == PApp(PApp(PVar("f"), PVar("a")), PVar("b"))


@pytest.mark.parametrize("src,want", [("λx.x", True), (f"(λx.λy.y) ({OMEGA})", True), ("x", False), (OMEGA, False)])
def test_is_answer(src, want):
    assert is_answer(P(src)) is want


def test_axioms():
    assert alpha_eq(apply_axiom("beta-need", P("(λx.x) (λy.y)")), P("λy.y"))
    assert apply_axiom("deref", P("(λx.x) (λy.y)")) == P("(λx.λy.y) (λy.y)")
    assert apply_axiom("lift", P("((λx.λz.z) w) u")) == P("(λx.(λz.z) u) w")
    out = apply_axiom("assoc", P("(λx.x) ((λy.λz.z) w)"))
    assert out == P("(λy.(λx.x) (λz.z)) w")


def test_axiom_mismatch():
    with pytest.raises(NoMatch):
        apply_axiom("deref", P("(λx.λz.z) (λy.y)"))  # body never demands x
    with pytest.raises(NoMatch):
        apply_axiom("lift", P("(λx.x) u"))


def test_lift_avoids_capture():
    out = apply_axiom("lift", P("((λx.λz.z) w) x"))
    assert isinstance(out, PApp) and out.arg == PVar("w")
    assert "x" in free_vars(out)  # the outer argument still refers to the free x


def test_standard_reduction():
    assert standard_reduce(P("(λx.x) (λy.y)"), NEED_SET)[:2] == ("answer", P("λy.y"))
    assert standard_reduce(P("(λx.x) (λy.y)"), NEED_SET)[2] == 1
    for axioms in (NEED_SET, DEREF_SET):
        status, ans, _ = standard_reduce(P("(λx.x x) (λy.y)"), axioms)
        assert status == "answer"
        assert alpha_eq(unwind(ans), P("λy.y"))
    assert standard_step(P("y (λx.x)")) == "stuck"
    assert standard_reduce(P(OMEGA), NEED_SET, limit=50)[0] == "timeout"


def test_omega_graph_is_a_cycle():
    g = reduction_graph(P(OMEGA), 8)
    assert g.cyclic and not g.normal_forms
    assert g.nodes == 1


def test_enumeration_is_closed_and_distinct():
    terms = list(enumerate_terms(6))
    assert all(not free_vars(t) for t in terms)
    assert len({to_debruijn(t) for t in terms}) == len(terms)


def test_axiom_steps_preserve_closedness():
    for t in enumerate_terms(7):
        for axiom, path in redexes(t, NEED_SET | DEREF_SET):
            assert not free_vars(apply_axiom(axiom, t, path))


def test_confluence_small():
    r = check_confluence(5, 6)
    assert r.ok() and r.terms > 0
    assert r.counterexamples == [] and r.answer_mismatches == []


def test_deref_renames_a_capturing_binder():
    # the copied value mentions a free x0 that the binder must not capture
    t = P("λx0.(λx0.x0) (λx1.x0)")
    out = apply_axiom("deref", t, (0,))
    assert not free_vars(out)
    assert alpha_eq(out, P("λx0.(λz.λx1.x0) (λx1.x0)"))


def test_redex_under_binder_keeps_its_variable_bound():
    t = P("λx0.(λx1.x1) (λx1.x0)")
    assert apply_axiom("beta-need", t, (0,)) == P("λx0.λx1.x0")


def test_drivers_agree_on_shadowing_terms():
    t = P("(λx0.x0 (λx1.x0)) (λx0.x0)")
    need = standard_reduce(t, NEED_SET)
    deref = standard_reduce(t, DEREF_SET)
    assert need[0] == deref[0] == "answer"
    assert alpha_eq(unwind(need[1]), unwind(deref[1]))
    assert alpha_eq(unwind(need[1]), P("λx1.λx0.x0"))


def test_confluence_nine_nodes():
    r = check_confluence(9, 8)
    assert r.ok(), r.summary()
    assert r.terms > 2000
