from lazystep import checks, fuzz
from lazystep.syntax import parse
from lazystep.terms import size


def test_corpus_is_seeded_and_bounded():
    a = [p.source for p in fuzz.corpus(50, seed=3)]
    b = [p.source for p in fuzz.corpus(50, seed=3)]
    assert a == b
    assert a != [p.source for p in fuzz.corpus(50, seed=4)]
    for p in fuzz.corpus(100, seed=5, max_size=30):
        assert size(p.main) + sum(size(d) for _, d in p.defs) <= 30
        assert parse(p.source) == p  # closed and well formed


def test_campaign_report():
    r = checks.campaign(25, seed=11)
    assert r.ok and r.programs == 25
    assert set(r.checks) == set(checks.PROPERTIES)
    assert "failures: 0" in r.summary()


def test_campaign_reports_crashes(monkeypatch):
    def broken(p, budget):
        raise RuntimeError("boom")

    monkeypatch.setattr(checks, "check_bisimulation", broken)
    r = checks.campaign(3, seed=1, props=("bisimulation",))
    assert not r.ok and len(r.failures) == 3
    assert "RuntimeError: boom" in str(r.failures[0]) and "seed 1" in str(r.failures[0])


def test_bench_reports_a_slowdown():
    (b,) = checks.fib_bench([6])
    assert b.plain_steps > 0 and b.step_ratio > 1
    assert b.line().startswith("fib 6: steps")
