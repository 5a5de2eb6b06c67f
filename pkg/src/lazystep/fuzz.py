"""Seeded random programs for the differential property campaigns.

Programs are generated by type (integers, booleans, integer lists and
int-to-int functions) so most of them run to a value, but partial operations
such as ``/`` and ``car`` are included so error verdicts show up too.  Bound
names are all distinct and definitions only mention earlier ones.
"""
from __future__ import annotations

import random
from typing import Iterator, Optional

from .syntax import Program, render_program
from .terms import App, Bool, Cons, If, Int, Lam, Null, Prim1, Prim2, Term, Var, size

INT, BOOL, LIST, FN = "int", "bool", "list", "fn"


class _Gen:
    def __init__(self, rng: random.Random, defs: list[tuple[str, str]]):
        self.rng = rng
        self.defs = defs
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"x{self.counter}"

    def var(self, ty: str, env: list[tuple[str, str]]) -> Optional[Term]:
        names = [n for n, t in env + self.defs if t == ty]
        return Var(self.rng.choice(names)) if names else None

    def gen(self, ty: str, env: list[tuple[str, str]], fuel: int) -> Term:
        r = self.rng
        if fuel <= 1 or r.random() < 0.2:
            v = self.var(ty, env) if r.random() < 0.6 else None
            return v or self.leaf(ty, env, fuel)
        if ty == INT:
            kind = r.choice(["prim", "prim", "app", "app", "if", "car", "let"])
            if kind == "prim":
                op = r.choice(["+", "+", "-", "*", "/"])
                return Prim2(op, self.gen(INT, env, fuel // 2), self.gen(INT, env, fuel // 2))
            if kind == "app":
                return App(self.gen(FN, env, fuel // 2), self.gen(INT, env, fuel // 2))
            if kind == "if":
                return If(self.gen(BOOL, env, fuel // 3), self.gen(INT, env, fuel // 3), self.gen(INT, env, fuel // 3))
            if kind == "car":
                return Prim1("car", self.gen(LIST, env, fuel - 1))
            # an immediately applied lambda, which shares its argument
            x = self.fresh()
            body = self.gen(INT, env + [(x, INT)], fuel // 2)
            return App(Lam(x, body), self.gen(INT, env, fuel // 2))
        if ty == BOOL:
            kind = r.choice(["cmp", "cmp", "null"])
            if kind == "cmp":
                return Prim2(r.choice(["=", "<"]), self.gen(INT, env, fuel // 2), self.gen(INT, env, fuel // 2))
            return Prim1("null?", self.gen(LIST, env, fuel - 1))
        if ty == LIST:
            kind = r.choice(["cons", "cons", "cdr"])
            if kind == "cons":
                return Cons(self.gen(INT, env, fuel // 2), self.gen(LIST, env, fuel // 2))
            return Prim1("cdr", self.gen(LIST, env, fuel - 1))
        x = self.fresh()
        return Lam(x, self.gen(INT, env + [(x, INT)], fuel - 1))

    def leaf(self, ty: str, env, fuel: int) -> Term:
        r = self.rng
        if ty == INT:
            return Int(r.randint(0, 9))
        if ty == BOOL:
            return Bool(r.random() < 0.5)
        if ty == LIST:
            return Null()
        x = self.fresh()
        return Lam(x, self.var(INT, [(x, INT)] + env) or Int(r.randint(0, 9)))


def generate(rng: random.Random, max_size: int = 30) -> Program:
    """One closed program whose definitions and main term total ≤ ``max_size`` nodes."""
    while True:
        defs: list[tuple[str, str]] = []
        bodies: list[tuple[str, Term]] = []
        g = _Gen(rng, defs)
        for i in range(rng.randint(0, 2)):
            ty = rng.choice([INT, FN, FN, LIST])
            body = g.gen(ty, [], max_size // 3)
            name = f"d{i}"
            bodies.append((name, body))
            defs.append((name, ty))
        main = g.gen(rng.choice([INT, INT, INT, BOOL, LIST]), [], max_size // 2)
        total = size(main) + sum(size(b) for _, b in bodies)
        if total <= max_size:
            prog = Program(tuple(bodies), main)
            return Program(prog.defs, prog.main, source=render_program(prog))


def corpus(n: int, seed: int = 0, max_size: int = 30) -> Iterator[Program]:
    rng = random.Random(seed)
    for _ in range(n):
        yield generate(rng, max_size)
