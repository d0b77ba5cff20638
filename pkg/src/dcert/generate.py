"""Random well-formed programs for property tests and scale runs."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .ir import Binop, Call, Const, Copy, Function, If, Program, Return, Stmt, While
from .policy import DenyPair, PolicySpec

SOURCES = {"readSecret": "sec", "readLocation": "loc", "readId": "id"}
SINKS = {"sendNet": "net", "writeLog": "log"}
UNKNOWN = ("lib.concat", "lib.trim")


def random_policy(rng: random.Random, with_rules: bool = False) -> PolicySpec:
    rules = {}
    if with_rules:
        rules = {"f0": frozenset({DenyPair(rng.choice(list(SINKS.values())), rng.choice(list(SOURCES.values())))})}
    return PolicySpec(sources=dict(SOURCES), sinks=dict(SINKS), rules=rules, default_deny_all=not with_rules)


@dataclass
class _FnGen:
    rng: random.Random
    index: int
    params: tuple[str, ...]
    arities: list[int]
    acyclic: bool
    straight: bool
    max_stmts: int
    budget: int = 0

    def __post_init__(self):
        self.defined: list[str] = list(self.params)
        self.fresh = 0

    def new_var(self) -> str:
        if self.straight or not self.defined or self.rng.random() < 0.5:
            name = f"v{self.fresh}"
            self.fresh += 1
            return name
        return self.rng.choice(self.defined)

    def pick(self) -> Optional[str]:
        return self.rng.choice(self.defined) if self.defined else None

    def assign(self, dst: str) -> None:
        if dst not in self.defined:
            self.defined.append(dst)

    def callee(self) -> Optional[int]:
        n = len(self.arities)
        options = range(self.index + 1, n) if self.acyclic else range(n)
        return self.rng.choice(list(options)) if options else None

    def simple(self) -> Stmt:
        rng = self.rng
        roll = rng.random()
        src = self.pick()
        if src is None or roll < 0.15:
            dst = self.new_var()
            stmt: Stmt = Call(dst, rng.choice(list(SOURCES)), ()) if rng.random() < 0.7 else Const(dst)
            self.assign(dst)
            return stmt
        if roll < 0.3:
            dst = self.new_var()
            stmt = Copy(dst, src)
        elif roll < 0.42:
            dst = self.new_var()
            stmt = Binop(dst, src, self.pick())
        elif roll < 0.55:
            args = tuple(self.pick() for _ in range(rng.randint(1, 2)))
            return Call(None, rng.choice(list(SINKS)), args)
        elif roll < 0.62:
            dst = self.new_var()
            stmt = Call(dst, rng.choice(UNKNOWN), (src,))
        elif roll < 0.7:
            dst = self.new_var()
            stmt = Call(dst, rng.choice(list(SOURCES)), (src,) if rng.random() < 0.3 else ())
        else:
            target = self.callee()
            if target is None:
                dst = self.new_var()
                stmt = Copy(dst, src)
            else:
                args = tuple(self.pick() for _ in range(self.arities[target]))
                if rng.random() < 0.25:
                    return Call(None, f"f{target}", args)
                dst = self.new_var()
                stmt = Call(dst, f"f{target}", args)
        self.assign(dst)
        return stmt

    def block(self, depth: int) -> list[Stmt]:
        out: list[Stmt] = []
        length = self.rng.randint(1, 4) if depth else self.rng.randint(1, self.max_stmts)
        for _ in range(length):
            if self.budget <= 0:
                break
            self.budget -= 1
            roll = self.rng.random()
            cond = self.pick()
            if not self.straight and depth < 2 and cond is not None and roll < 0.12:
                out.append(If(cond, tuple(self.block(depth + 1)),
                              tuple(self.block(depth + 1)) if self.rng.random() < 0.5 else ()))
            elif not self.straight and depth < 2 and cond is not None and roll < 0.22:
                out.append(While(cond, tuple(self.block(depth + 1))))
            elif not self.straight and roll < 0.26 and self.defined:
                out.append(Return(self.pick()))
            else:
                out.append(self.simple())
        return out

    def function(self) -> Function:
        self.budget = self.max_stmts - 1
        body = self.block(0)
        if self.rng.random() < 0.85 and self.defined:
            body.append(Return(self.pick()))
        elif not body:
            body.append(Return(None))
        return Function(f"f{self.index}", self.params, tuple(body))


def random_program(
    rng: random.Random,
    max_functions: int = 8,
    max_stmts: int = 12,
    acyclic: bool = False,
    straight: bool = False,
    n_functions: Optional[int] = None,
) -> Program:
    """A program of ``f0 .. fN``; with ``acyclic`` calls only go from ``fi`` to ``fj`` with ``j > i``.

    ``straight`` additionally forbids branches, loops and early returns and
    assigns every variable at most once, always before it is read.
    """
    n = n_functions if n_functions is not None else rng.randint(1, max_functions)
    if straight:
        acyclic = True
    arities = [rng.randint(0, 2) for _ in range(n)]
    functions = []
    for i in range(n):
        params = tuple(f"p{k}" for k in range(arities[i]))
        gen = _FnGen(rng, i, params, arities, acyclic, straight, max_stmts)
        functions.append(gen.function())
    return Program.of(*functions)


def layered_program(rng: random.Random, n_functions: int, fanout: int = 3, window: int = 50) -> Program:
    """A large acyclic program where each function calls a few nearby later ones."""
    functions = []
    for i in range(n_functions):
        body: list[Stmt] = [Call("a", rng.choice(list(SOURCES)), ()) if rng.random() < 0.1 else Copy("a", "p0")]
        for k in range(rng.randint(0, fanout)):
            j = rng.randint(i + 1, i + window)
            if j >= n_functions:
                break
            body.append(Call(f"r{k}", f"f{j}", ("a",)))
            body.append(Binop("a", "a", f"r{k}"))
        if rng.random() < 0.1:
            body.append(Call(None, rng.choice(list(SINKS)), ("a",)))
        body.append(Return("a"))
        functions.append(Function(f"f{i}", ("p0",), tuple(body)))
    return Program.of(*functions)
