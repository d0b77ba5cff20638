"""Brute-force flow enumeration used as ground truth for the analyzer.

Each function is executed abstractly over *sets of environments*: an
environment maps a variable to the set of origins its current value was
derived from, and assignments overwrite (flow-sensitive). ``if`` explores
both branches, ``while`` explores every iteration count until no new
environment appears, and ``return`` ends the path. Calls to defined
functions are inlined: the callee body runs in a fresh frame seeded with the
argument taints, up to ``depth_limit`` nested inlinings.

This shares no code with :mod:`dcert.analyzer` on purpose.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .certificate import Certificate, FlowNode, FlowPair, param, ret, sink, source
from .ir import Binop, Call, Const, Copy, Function, If, Program, Return, Stmt, While
from .policy import PolicySpec

DEFAULT_DEPTH = 4

State = frozenset  # frozenset[(var, frozenset[FlowNode])]; absent var = untainted
_NOTHING: frozenset[FlowNode] = frozenset()


class Inconclusive(Exception):
    """Inlining hit the depth limit before the call chain bottomed out."""


@dataclass(frozen=True)
class OracleResult:
    flows: dict[str, frozenset[FlowPair]]
    inconclusive: frozenset[str] = frozenset()


def _get(state: dict, var: str) -> frozenset[FlowNode]:
    return state.get(var, _NOTHING)


def _set(state: State, var: Optional[str], taint: frozenset[FlowNode]) -> State:
    if var is None:
        return state
    env = dict(state)
    if taint:
        env[var] = taint
    else:
        env.pop(var, None)
    return frozenset(env.items())


@dataclass
class _Run:
    """Outcome of running one function body from one entry environment."""

    returns: frozenset[frozenset[FlowNode]]
    falls_through: bool
    emitted: frozenset[FlowPair]


@dataclass
class _Enumerator:
    program: Program
    spec: PolicySpec
    depth_limit: int
    memo: dict = field(default_factory=dict)

    def run(self, fn: Function, entry: State, depth: int) -> _Run:
        key = (fn.name, entry)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        emitted: set[FlowPair] = set()
        returns: set[frozenset[FlowNode]] = set()
        falls = self.block(fn.body, {entry}, depth, returns, emitted)
        result = _Run(frozenset(returns), bool(falls), frozenset(emitted))
        # failures propagate as exceptions and are never cached
        self.memo[key] = result
        return result

    def block(self, body: tuple[Stmt, ...], states: set[State], depth: int, returns: set, emitted: set) -> set[State]:
        for stmt in body:
            if not states:
                break
            states = self.stmt(stmt, states, depth, returns, emitted)
        return states

    def stmt(self, s: Stmt, states: set[State], depth: int, returns: set, emitted: set) -> set[State]:
        if isinstance(s, If):
            return (self.block(s.then, set(states), depth, returns, emitted)
                    | self.block(s.orelse, set(states), depth, returns, emitted))
        if isinstance(s, While):
            seen = set(states)
            frontier = set(states)
            while frontier:
                after = self.block(s.body, frontier, depth, returns, emitted)
                frontier = after - seen
                seen |= frontier
            return seen
        if isinstance(s, Return):
            for st in states:
                returns.add(_get(dict(st), s.val) if s.val is not None else _NOTHING)
            return set()

        out: set[State] = set()
        for st in states:
            env = dict(st)
            if isinstance(s, Copy):
                out.add(_set(st, s.dst, _get(env, s.src)))
            elif isinstance(s, Const):
                out.add(_set(st, s.dst, _NOTHING))
            elif isinstance(s, Binop):
                out.add(_set(st, s.dst, _get(env, s.lhs) | _get(env, s.rhs)))
            elif isinstance(s, Call):
                out |= self.call(s, st, env, depth, emitted)
            else:  # pragma: no cover
                raise TypeError(f"not a statement: {s!r}")
        return out

    def call(self, s: Call, st: State, env: dict, depth: int, emitted: set) -> set[State]:
        args = [_get(env, a) for a in s.args]
        joined = frozenset().union(*args)
        callee = self.program.functions.get(s.callee)
        if callee is not None:
            if depth + 1 > self.depth_limit:
                raise Inconclusive(s.callee)
            entry = frozenset((p, t) for p, t in zip(callee.params, args) if t)
            sub = self.run(callee, entry, depth + 1)
            emitted |= sub.emitted
            results = {_set(st, s.dst, rt) for rt in sub.returns}
            if sub.falls_through:
                results.add(_set(st, s.dst, _NOTHING))
            return results
        if s.callee in self.spec.sources:
            return {_set(st, s.dst, joined | {source(self.spec.sources[s.callee])})}
        if s.callee in self.spec.sinks:
            k = sink(self.spec.sinks[s.callee])
            emitted.update(FlowPair(k, o) for o in joined)
        return {_set(st, s.dst, joined)}


def enumerate_flows(p: Program, spec: PolicySpec, depth_limit: int = DEFAULT_DEPTH) -> OracleResult:
    if depth_limit < 1:
        raise ValueError("depth_limit must be positive")
    enum_ = _Enumerator(p, spec, depth_limit)
    flows: dict[str, frozenset[FlowPair]] = {}
    inconclusive: set[str] = set()
    for name, fn in p.functions.items():
        entry = frozenset((x, frozenset({param(x)})) for x in fn.params)
        try:
            run = enum_.run(fn, entry, 0)
        except Inconclusive:
            inconclusive.add(name)
            continue
        pairs = set(run.emitted)
        r = ret()
        for taint in run.returns:
            pairs.update(FlowPair(r, o) for o in taint)
        flows[name] = frozenset(pairs)
    return OracleResult(flows, frozenset(inconclusive))


class Agreement(str, enum.Enum):
    EXACT = "exact"
    SOUND = "sound"
    UNSOUND = "unsound"


@dataclass(frozen=True)
class Comparison:
    agreement: Agreement
    witness: Optional[tuple[str, FlowPair]] = None


def compare(c: Certificate, o: OracleResult) -> Comparison:
    """Judge a certificate against oracle flows; inconclusive functions are skipped."""
    if set(c.entries) != set(o.flows) | set(o.inconclusive):
        raise ValueError("certificate and oracle cover different functions")
    exact = True
    for name in sorted(o.flows):
        claimed, truth = c.entries[name], o.flows[name]
        missing = truth - claimed
        if missing:
            return Comparison(Agreement.UNSOUND, (name, min(missing, key=str)))
        if claimed != truth:
            exact = False
    return Comparison(Agreement.EXACT if exact else Agreement.SOUND)
