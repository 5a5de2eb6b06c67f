import sys
from pathlib import Path

import pytest

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def source(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")


@pytest.fixture
def ex1() -> str:
    return source("ex1.lzy")


@pytest.fixture
def ex2() -> str:
    return source("ex2.lzy")


@pytest.fixture
def ex3() -> str:
    return source("ex3.lzy")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
