"""Interprocedural taint summaries computed to a least fixpoint.

The intraprocedural part is flow-insensitive: every statement of a body
(branches and loop bodies included, conditions ignored) is swept until the
taint environment stops growing. Calls to defined functions are resolved
through the callee's current summary, never by re-analysing the callee.
"""

from __future__ import annotations

import enum
from collections import deque
from typing import Mapping, Optional

from .certificate import EMPTY, PARAM, RET, Certificate, FlowNode, FlowPair, param, ret, sink, source
from .ir import Binop, Call, Const, Copy, Function, If, Program, Return, Stmt, While, callers_map
from .policy import PolicySpec


class Mode(str, enum.Enum):
    WORKLIST = "worklist"
    JACOBI = "jacobi"


def _flatten(body: tuple[Stmt, ...], out: list[Stmt]) -> list[Stmt]:
    for s in body:
        if isinstance(s, If):
            _flatten(s.then, out)
            _flatten(s.orelse, out)
        elif isinstance(s, While):
            _flatten(s.body, out)
        else:
            out.append(s)
    return out


def analyze_function(
    fn: Function,
    spec: PolicySpec,
    summaries: Mapping[str, frozenset[FlowPair]],
    program: Program,
) -> frozenset[FlowPair]:
    """Least summary of ``fn`` given fixed summaries for its callees.

    ``program`` decides which callees are defined functions; their
    summaries are looked up in ``summaries`` (missing entries read as empty).
    """
    env: dict[str, set[FlowNode]] = {p: {param(p)} for p in fn.params}
    emitted: set[FlowPair] = set()
    stmts = _flatten(fn.body, [])
    functions = program.functions
    sources, sinks = spec.sources, spec.sinks

    def taint(var: str) -> set[FlowNode]:
        t = env.get(var)
        if t is None:
            t = env[var] = set()
        return t

    changed = True
    while changed:
        changed = False
        before = len(emitted)
        for s in stmts:
            gained: set[FlowNode] = set()
            dst: Optional[str] = None
            if isinstance(s, Copy):
                dst, gained = s.dst, env.get(s.src, gained)
            elif isinstance(s, Binop):
                dst = s.dst
                gained = env.get(s.lhs, set()) | env.get(s.rhs, set())
            elif isinstance(s, Const):
                continue
            elif isinstance(s, Return):
                if s.val is not None:
                    rt = ret()
                    emitted.update(FlowPair(rt, o) for o in env.get(s.val, ()))
                continue
            elif isinstance(s, Call):
                dst = s.dst
                args = [env.get(a, set()) for a in s.args]
                callee = functions.get(s.callee)
                if callee is not None:
                    summary = summaries.get(s.callee, EMPTY)
                    if summary:
                        index = {p: i for i, p in enumerate(callee.params)}
                        for target, origin in summary:
                            if origin.kind == PARAM:
                                i = index.get(origin.name)
                                if i is None:
                                    continue
                                origins = args[i]
                            else:
                                origins = (origin,)
                            if target.kind == RET:
                                gained = gained | set(origins)
                            else:
                                emitted.update(FlowPair(target, o) for o in origins)
                elif s.callee in sources:
                    gained = {source(sources[s.callee])}.union(*args)
                elif s.callee in sinks:
                    k = sink(sinks[s.callee])
                    for a in args:
                        emitted.update(FlowPair(k, o) for o in a)
                    gained = set().union(*args)
                else:
                    gained = set().union(*args)
            if dst is not None and gained:
                t = taint(dst)
                if not gained <= t:
                    t |= gained
                    changed = True
        if len(emitted) != before:
            changed = True
    return frozenset(emitted)


def analyze_program(
    p: Program,
    spec: PolicySpec,
    mode: Mode | str = Mode.WORKLIST,
) -> tuple[Certificate, list[dict[str, frozenset[FlowPair]]]]:
    """Compute the least fixpoint of all summaries, starting from empty ones.

    Returns the certificate and a trace. In jacobi mode the trace holds the
    map after every round, the last round being the one that changed
    nothing. In worklist mode it holds one snapshot per summary update.
    """
    mode = Mode(mode)
    current: dict[str, frozenset[FlowPair]] = {name: EMPTY for name in p.functions}
    trace: list[dict[str, frozenset[FlowPair]]] = []

    if mode is Mode.JACOBI:
        while True:
            nxt = {name: analyze_function(fn, spec, current, p) for name, fn in p.functions.items()}
            trace.append(nxt)
            if nxt == current:
                break
            current = nxt
        return Certificate(dict(current)), trace

    callers = callers_map(p)
    queue = deque(p.functions)
    queued = set(queue)
    while queue:
        name = queue.popleft()
        queued.discard(name)
        new = analyze_function(p.functions[name], spec, current, p)
        if new != current[name]:
            current[name] = new
            trace.append({name: new})
            for caller in callers[name]:
                if caller not in queued:
                    queued.add(caller)
                    queue.append(caller)
    return Certificate(dict(current)), trace


def lattice_height(p: Program, spec: PolicySpec) -> int:
    """Total number of pairs any summary map for ``p`` can hold."""
    s, r = len(spec.sinks), len(spec.sources)
    return sum((s + 1) * (r + len(fn.params)) for fn in p.functions.values())
