"""Read-only terminal navigation over a recorded trace."""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import IO, Callable, Optional

from .pipeline import Side, Step, Trace

GREEN = "\x1b[30;42m"
PURPLE = "\x1b[30;45m"
RESET = "\x1b[0m"
PLAIN_MARKERS = {"before": ("«", "»"), "after": ("‹", "›")}
_ANSI = re.compile(r"\x1b\[[0-9;]*m")


def paint(side: Side, kind: str, color: bool) -> str:
    """Insert highlight markers (ANSI colors or plain brackets) around the spans."""
    if color:
        opener, closer = (GREEN if kind == "before" else PURPLE), RESET
    else:
        opener, closer = PLAIN_MARKERS[kind]
    out, pos = [], 0
    for a, b in sorted(side.spans):
        if a < pos:  # overlapping spans cannot be drawn; skip the inner one
            continue
        out += [side.text[pos:a], opener, side.text[a:b], closer]
        pos = b
    out.append(side.text[pos:])
    return "".join(out)


def visible_len(s: str) -> int:
    return len(_ANSI.sub("", s))


def side_by_side(left: str, right: str, gap: str = "  │  ") -> str:
    ll, rl = left.split("\n"), right.split("\n")
    width = max(visible_len(x) for x in ll)
    rows = []
    for i in range(max(len(ll), len(rl))):
        a = ll[i] if i < len(ll) else ""
        b = rl[i] if i < len(rl) else ""
        rows.append(a + " " * (width - visible_len(a)) + gap + b)
    return "\n".join(rows)


def format_step(step: Step, total: Optional[int], color: bool, layout: str = "stacked") -> str:
    count = f"/{total}" if total is not None else ""
    head = f"step {step.index + 1}{count}  [{step.rule}]"
    if step.changed_defs:
        head += "  updates " + ", ".join(step.changed_defs)
    before, after = paint(step.before, "before", color), paint(step.after, "after", color)
    if layout == "side":
        return head + "\n" + side_by_side(before, after)
    return f"{head}\n  {before.replace(chr(10), chr(10) + '  ')}\n→ {after.replace(chr(10), chr(10) + '  ')}"


@dataclass
class Navigator:
    """Cursor over a step list that may keep growing (live traces)."""

    steps: list[Step]
    finished: bool = True
    index: int = 0
    status: str = ""
    # live traces: returns (new steps, whether the writer has finished)
    refresh: Optional[Callable[[], tuple[list[Step], bool]]] = field(default=None, repr=False)

    def _poll(self) -> None:
        if self.refresh is not None and not self.finished:
            fresh, self.finished = self.refresh()
            self.steps.extend(fresh)

    @property
    def current(self) -> Optional[Step]:
        return self.steps[self.index] if self.steps else None

    def _clamp(self, i: int) -> None:
        last = max(len(self.steps) - 1, 0)
        self.index = min(max(i, 0), last)

    def next(self) -> None:
        self._poll()
        if self.index >= len(self.steps) - 1:
            self.status = "at last step" if self.finished else "waiting for more steps"
        else:
            self.index += 1
            self.status = ""

    def prev(self) -> None:
        if self.index == 0:
            self.status = "at first step"
        else:
            self.index -= 1
            self.status = ""

    def first(self) -> None:
        self.index, self.status = 0, ""

    def last(self) -> None:
        self._poll()
        self._clamp(len(self.steps) - 1)
        self.status = ""

    def jump(self, number: int) -> None:
        """Go to a 1-based step number, clamping to the available range."""
        self._poll()
        self._clamp(number - 1)
        self.status = "" if 1 <= number <= len(self.steps) else f"clamped to step {self.index + 1}"

    def command(self, key: str) -> bool:
        """Apply one key or command line; False means quit."""
        key = key.strip()
        if key in ("q", "quit"):
            return False
        if key in ("n", "", "\x1b[C", "l"):
            self.next()
        elif key in ("p", "\x1b[D", "h"):
            self.prev()
        elif key == "g":
            self.first()
        elif key == "G":
            self.last()
        elif key.startswith("/"):
            try:
                self.jump(int(key[1:]))
            except ValueError:
                self.status = f"not a step number: {key[1:]!r}"
        else:
            self.status = f"unknown key {key!r} (n p g G /N q)"
        return True

    def screen(self, color: bool = False, layout: str = "stacked") -> str:
        step = self.current
        total = len(self.steps) if self.finished else None
        body = format_step(step, total, color, layout) if step else "(no steps yet)"
        return body + (f"\n-- {self.status}" if self.status else "")


def view(
    trace: Trace,
    inp: IO[str] = sys.stdin,
    out: IO[str] = sys.stdout,
    color: bool = False,
    refresh: Optional[Callable[[], tuple[list[Step], bool]]] = None,
    finished: bool = True,
    layout: str = "stacked",
) -> Navigator:
    """Line-driven pager loop: one command per input line until ``q`` or EOF."""
    nav = Navigator(list(trace.steps), finished=finished, refresh=refresh)
    out.write(nav.screen(color, layout) + "\n")
    for line in inp:
        if not nav.command(line.rstrip("\n")):
            break
        out.write(nav.screen(color, layout) + "\n")
    out.flush()
    return nav
