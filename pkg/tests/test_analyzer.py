import random

import pytest
from hypothesis import given, settings, strategies as st

from dcert.analyzer import Mode, analyze_function, analyze_program, lattice_height
from dcert.certificate import EMPTY, Certificate, FlowPair, encode, param, ret, sink, source
from dcert.generate import random_policy, random_program
from dcert.ir import Call, Const, Function, If, Program, While, parse_program
from dcert.oracle import enumerate_flows
from dcert.policy import PolicySpec

RET_ID = FlowPair(ret(), source("id"))
RET_NUM = FlowPair(ret(), source("num"))
SMS_ID = FlowPair(sink("sms"), source("id"))
SMS_X = FlowPair(sink("sms"), param("x"))

# Fig. 2, columns 1..3
FIG2_COLUMNS = [
    {"foo": set(), "bar": set(), "getId": {RET_ID}, "getNumber": {RET_NUM}, "Send": {SMS_X}},
    {"foo": set(), "bar": {SMS_ID, RET_NUM}, "getId": {RET_ID}, "getNumber": {RET_NUM}, "Send": {SMS_X}},
    {"foo": {SMS_ID, RET_NUM}, "bar": {SMS_ID, RET_NUM}, "getId": {RET_ID}, "getNumber": {RET_NUM},
     "Send": {SMS_X}},
]

EMPTY_MAP = {name: EMPTY for name in ("foo", "bar", "getId", "getNumber", "Send")}


def test_local_summaries_against_empty_map(run_program, policy):
    assert analyze_function(run_program["getId"], policy, EMPTY_MAP, run_program) == {RET_ID}
    assert analyze_function(run_program["Send"], policy, EMPTY_MAP, run_program) == {SMS_X}
    assert analyze_function(run_program["foo"], policy, EMPTY_MAP, run_program) == set()


def test_bar_from_iteration_one(run_program, policy):
    col1 = {k: frozenset(v) for k, v in FIG2_COLUMNS[0].items()}
    assert analyze_function(run_program["bar"], policy, col1, run_program) == {SMS_ID, RET_NUM}


def test_jacobi_reproduces_table(run_program, policy):
    cert, trace = analyze_program(run_program, policy, Mode.JACOBI)
    assert len(trace) == 4
    for column, snapshot in zip(FIG2_COLUMNS, trace):
        assert {k: set(v) for k, v in snapshot.items()} == column
    assert trace[3] == trace[2]
    assert {k: set(v) for k, v in cert.entries.items()} == FIG2_COLUMNS[2]


def test_modes_agree_on_run_example(run_program, policy):
    assert analyze_program(run_program, policy, "worklist")[0] == analyze_program(run_program, policy, "jacobi")[0]


def test_no_flow_function():
    p = parse_program("fn f() { return; }")
    cert, _ = analyze_program(p, PolicySpec())
    assert cert == Certificate({"f": EMPTY})


def _unrolled(fn: Function, depth: int) -> Program:
    """Replace self-calls by calls to a fresh copy, ``depth`` times; the last copy's self-calls yield nothing."""

    def rewrite(body, i):
        out = []
        for s in body:
            if isinstance(s, Call) and s.callee == fn.name:
                if i < depth:
                    out.append(Call(s.dst, f"{fn.name}_{i + 1}", s.args))
                elif s.dst is not None:
                    out.append(Const(s.dst))
            elif isinstance(s, If):
                out.append(If(s.cond, rewrite(s.then, i), rewrite(s.orelse, i)))
            elif isinstance(s, While):
                out.append(While(s.cond, rewrite(s.body, i)))
            else:
                out.append(s)
        return tuple(out)

    return Program.of(*(Function(f"{fn.name}_{i}", fn.params, rewrite(fn.body, i)) for i in range(depth + 1)))


SRC = PolicySpec(sources={"src": "s"})


@pytest.mark.parametrize("text, spec, expected", [
    ("fn f(a) { x = call f(a); return x; }", PolicySpec(), set()),
    # no base case: f never returns, so nothing reaches ret
    ("fn f(a) { x = call src(); y = call f(x); return y; }", SRC, set()),
    ("fn f(a) { x = call src(); if (a) { y = call f(x); return y; } return x; }",
     SRC, {FlowPair(ret(), source("s"))}),
    ("fn f(a) { if (a) { y = call f(a); return y; } return a; }", SRC, {FlowPair(ret(), param("a"))}),
])
def test_self_recursion(text, spec, expected):
    p = parse_program(text)
    cert, _ = analyze_program(p, spec, Mode.WORKLIST)
    assert cert["f"] == expected
    # inlining oracle: flows stop changing by depth 3 and match the fixpoint
    by_depth = []
    for depth in (1, 2, 3):
        q = _unrolled(p["f"], depth)
        by_depth.append(enumerate_flows(q, spec, depth + 1).flows["f_0"])
    assert by_depth[1] == by_depth[2] == expected


def test_rule_details():
    spec = PolicySpec(sources={"src": "s"}, sinks={"snk": "k"})
    p = parse_program("""
    fn f(a, b) {
      x = call src(a);          # source result also carries its arguments
      y = call snk(b, x);       # sink result carries its arguments
      z = call lib.mix(y);      # unknown API: result from arguments
      w = call g(z, a);
      return w;
    }
    fn g(c, d) { call snk(d); return c; }
    """)
    cert, _ = analyze_program(p, spec)
    K, R = sink("k"), ret()
    assert cert["g"] == {FlowPair(K, param("d")), FlowPair(R, param("c"))}
    assert cert["f"] == {
        FlowPair(K, param("b")), FlowPair(K, param("a")), FlowPair(K, source("s")),
        FlowPair(R, param("a")), FlowPair(R, param("b")), FlowPair(R, source("s")),
    }


def test_conditions_induce_no_flow():
    spec = PolicySpec(sources={"src": "s"}, sinks={"snk": "k"})
    p = parse_program("fn f() { c = call src(); x = const; if (c) { call snk(x); } while (c) { c = const; } }")
    assert analyze_program(p, spec)[0]["f"] == EMPTY


def test_flow_insensitive_accumulation():
    spec = PolicySpec(sources={"src": "s"}, sinks={"snk": "k"})
    p = parse_program("fn f() { x = call src(); x = const; call snk(x); }")
    assert analyze_program(p, spec)[0]["f"] == {FlowPair(sink("k"), source("s"))}


def test_order_does_not_matter_inside_body():
    spec = PolicySpec(sources={"src": "s"})
    p = parse_program("fn f() { return z; z = y; y = x; x = call src(); }")
    assert analyze_program(p, spec)[0]["f"] == {FlowPair(ret(), source("s"))}


def _random_case(seed):
    rng = random.Random(seed)
    return random_program(rng), random_policy(rng, rng.random() < 0.5)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_modes_agree_and_rounds_grow(seed):
    p, spec = _random_case(seed)
    worklist, _ = analyze_program(p, spec, Mode.WORKLIST)
    jacobi, trace = analyze_program(p, spec, Mode.JACOBI)
    assert worklist == jacobi
    previous = {name: EMPTY for name in p.functions}
    for snapshot in trace:
        assert all(previous[n] <= snapshot[n] for n in p.functions)
        previous = snapshot
    assert len(trace) <= 1 + lattice_height(p, spec)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 2**32))
def test_monotone_in_callee_summaries(seed, pad_seed):
    p, spec = _random_case(seed)
    cert, trace = analyze_program(p, spec, Mode.JACOBI)
    rng = random.Random(pad_seed)
    smaller = rng.choice(trace) if trace else cert.entries
    bigger = {}
    for name, fn in p.functions.items():
        extra = [FlowPair(ret(), source(rng.choice(sorted(spec.source_labels))))]
        if fn.params:
            extra.append(FlowPair(sink(rng.choice(sorted(spec.sink_labels))), param(rng.choice(fn.params))))
        bigger[name] = smaller[name] | frozenset(rng.sample(extra, rng.randint(0, len(extra))))
    for fn in p.functions.values():
        assert analyze_function(fn, spec, smaller, p) <= analyze_function(fn, spec, bigger, p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_deterministic_encoding(seed):
    p, spec = _random_case(seed)
    assert encode(analyze_program(p, spec)[0]) == encode(analyze_program(p, spec)[0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_summary_within_lattice_bound(seed):
    p, spec = _random_case(seed)
    cert, _ = analyze_program(p, spec)
    s, r = len(spec.sinks), len(spec.sources)
    for name, fn in p.functions.items():
        assert len(cert[name]) <= (s + 1) * (r + len(fn.params))
