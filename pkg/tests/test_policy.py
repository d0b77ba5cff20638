import itertools
import random

import pytest

from dcert.errors import PolicyError
from dcert.ir import parse_program
from dcert.policy import (
    Callee, CalleeKind, DenyPair, classify_callee, format_policy, parse_policy, rules_for,
)

EXAMPLE = (
    "source getDeviceId as id\n"
    "source getLine1Number as num\n"
    "sink sendTextMessage as sms\n"
    "rule foo: deny sms <- id, deny sms <- num\n"
)


def test_parse_example():
    spec = parse_policy(EXAMPLE)
    assert spec.sources == {"getDeviceId": "id", "getLine1Number": "num"}
    assert spec.sinks == {"sendTextMessage": "sms"}
    assert spec.rules == {"foo": frozenset({DenyPair("sms", "id"), DenyPair("sms", "num")})}
    assert not spec.default_deny_all


def test_no_rule_means_default_deny():
    spec = parse_policy(EXAMPLE.rsplit("rule", 1)[0])
    assert spec.default_deny_all
    assert spec.rules == {}


@pytest.mark.parametrize("text, code", [
    ("rule foo: deny sms <- id", "undeclared-label"),
    ("sink s as k\nrule foo: deny k <- id", "undeclared-label"),
    ("source a as id\nsource b as id", "duplicate-label"),
    ("source a as x\nsink a as y", "duplicate-api"),
    ("source a", "syntax"),
    ("sink s as k\nsource a as x\nrule foo: allow k <- x", "syntax"),
    ("sink s as k\nsource a as x\nrule foo:", "syntax"),
])
def test_rejections(text, code):
    with pytest.raises(PolicyError) as info:
        parse_policy(text)
    assert info.value.code == code


def test_rules_may_precede_declarations_and_accumulate():
    spec = parse_policy("rule f: deny k <- x\nrule f: deny k <- y\nsink s as k\nsource a as x\nsource b as y\n")
    assert spec.rules["f"] == {DenyPair("k", "x"), DenyPair("k", "y")}


def test_comments_and_blank_lines():
    spec = parse_policy("# header\n\nsource a as x   # trailing\n")
    assert spec.sources == {"a": "x"}


def test_declaration_order_is_irrelevant():
    lines = EXAMPLE.strip().split("\n")
    reference = parse_policy(EXAMPLE)
    for seed in range(20):
        shuffled = lines[:]
        random.Random(seed).shuffle(shuffled)
        assert parse_policy("\n".join(shuffled)) == reference


def test_format_roundtrip():
    spec = parse_policy(EXAMPLE)
    assert parse_policy(format_policy(spec)) == spec


def test_classify(run_program):
    spec = parse_policy(EXAMPLE)
    assert classify_callee(spec, run_program, "getDeviceId") == Callee(CalleeKind.SOURCE, "id")
    assert classify_callee(spec, run_program, "sendTextMessage") == Callee(CalleeKind.SINK, "sms")
    assert classify_callee(spec, run_program, "java.lang.concat") == Callee(CalleeKind.EXTERNAL)
    assert classify_callee(spec, run_program, "bar") == Callee(CalleeKind.INTERNAL)


def test_defined_function_shadows_api():
    p = parse_program("fn getDeviceId() { return; }")
    assert classify_callee(parse_policy(EXAMPLE), p, "getDeviceId").kind is CalleeKind.INTERNAL


def test_rules_for_explicit(run_program):
    spec = parse_policy(EXAMPLE)
    assert rules_for(spec, run_program, "foo") == {DenyPair("sms", "id"), DenyPair("sms", "num")}
    assert rules_for(spec, run_program, "bar") == frozenset()


def test_rules_for_default_is_cross_product_on_roots(run_program, default_policy):
    expected = {DenyPair(k, s) for k, s in itertools.product(["sms"], ["id", "num"])}
    assert rules_for(default_policy, run_program, "foo") == expected
    for name in ("bar", "getId", "getNumber", "Send"):
        assert rules_for(default_policy, run_program, name) == frozenset()


def test_rules_for_unknown_function(run_program):
    with pytest.raises(KeyError):
        rules_for(parse_policy(EXAMPLE), run_program, "ghost")


def test_default_cross_product_many_labels():
    text = "".join(f"source s{i} as r{i}\n" for i in range(4)) + "".join(f"sink k{i} as t{i}\n" for i in range(3))
    spec = parse_policy(text)
    p = parse_program("fn main() { return; }")
    brute = {DenyPair(f"t{j}", f"r{i}") for i in range(4) for j in range(3)}
    got = rules_for(spec, p, "main")
    assert got == brute
    assert all(d.sink in spec.sink_labels and d.source in spec.source_labels for d in got)
