import io

from lazystep.pipeline import Side, run_reference
from lazystep.viewer import GREEN, PURPLE, RESET, Navigator, format_step, paint, side_by_side, view, visible_len


def nav_for(src):
    return Navigator(list(run_reference(src).steps))


def test_paint_plain_and_color():
    side = Side("(+ (+ 1 5) (+ 1 5))", ((3, 10), (11, 18)))
    assert paint(side, "before", False) == "(+ «(+ 1 5)» «(+ 1 5)»)"
    assert paint(side, "after", False) == "(+ ‹(+ 1 5)› ‹(+ 1 5)›)"
    colored = paint(side, "before", True)
    assert colored.count(GREEN) == 2 and colored.count(RESET) == 2
    assert PURPLE in paint(side, "after", True)
    assert visible_len(colored) == len(side.text)


def test_side_by_side_aligns_columns():
    out = side_by_side("ab\nc", "x")
    assert out.split("\n") == ["ab  │  x", "c   │  "]


def test_forward_to_the_value(ex1):
    nav = nav_for(ex1)
    for _ in range(4):
        nav.command("n")
    assert nav.index == 4
    assert nav.current.after.text == "12"
    assert "12" in nav.screen()
    nav.command("n")
    assert nav.index == 4 and nav.status == "at last step"


def test_back_at_the_start(ex1):
    nav = nav_for(ex1)
    nav.command("p")
    assert nav.index == 0 and nav.status == "at first step"
    assert "at first step" in nav.screen()


def test_jump_clamps(ex1):
    nav = nav_for(ex1)
    nav.command("/999")
    assert nav.index == 4 and nav.status == "clamped to step 5"
    nav.command("/2")
    assert nav.index == 1 and nav.status == ""
    nav.command("/x")
    assert "not a step number" in nav.status


def test_first_last_and_arrows(ex1):
    nav = nav_for(ex1)
    nav.command("G")
    assert nav.index == 4
    nav.command("\x1b[D")
    assert nav.index == 3
    nav.command("g")
    assert nav.index == 0
    nav.command("\x1b[C")
    assert nav.index == 1
    assert nav.command("q") is False


def test_live_navigation_waits_for_more(ex1):
    steps = run_reference(ex1).steps
    feed = [(steps[1:2], False), ([], False), (steps[2:], True)]
    nav = Navigator([steps[0]], finished=False, refresh=lambda: feed.pop(0))
    nav.command("n")
    assert nav.index == 1
    nav.command("n")
    assert nav.index == 1 and nav.status == "waiting for more steps"
    assert "step 2  [" in nav.screen()  # total unknown while running
    nav.command("G")
    assert nav.finished and nav.index == 4


def test_view_loop_reads_commands(ex1):
    trace = run_reference(ex1)
    out = io.StringIO()
    nav = view(trace, io.StringIO("n\nn\nn\nn\nq\nn\n"), out)
    assert nav.index == 4
    assert out.getvalue().rstrip().endswith("→ ‹12›")


def test_format_step_lists_changed_definitions(ex3):
    trace = run_reference(ex3)
    step = next(s for s in trace.steps if s.changed_defs)
    assert "updates nats" in format_step(step, len(trace.steps), False)
