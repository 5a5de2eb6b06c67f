"""The delta function shared by the rewriting system and both machines."""
from __future__ import annotations

from typing import Optional

from .terms import Bool, Int, Term


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def delta(op: str, lhs: Term, rhs: Term) -> Optional[Term]:
    """Apply a binary primitive to two values; None means undefined (stuck)."""
    if not (isinstance(lhs, Int) and isinstance(rhs, Int)):
        return None
    a, b = lhs.value, rhs.value
    if op == "+":
        return Int(a + b)
    if op == "-":
        return Int(a - b)
    if op == "*":
        return Int(a * b)
    if op == "/":
        return None if b == 0 else Int(_trunc_div(a, b))
    if op == "=":
        return Bool(a == b)
    if op == "<":
        return Bool(a < b)
    return None
