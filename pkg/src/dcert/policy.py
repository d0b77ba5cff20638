"""Source/sink declarations and per-function deny rules (``.dcp`` files).

Example::

    source getDeviceId as id
    source getLine1Number as num
    sink sendTextMessage as sms
    rule foo: deny sms <- id, deny sms <- num

A policy without any ``rule`` line denies every sink <- source flow in
every root function of the program.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .errors import PolicyError
from .ir import Program, roots_of

_NAME = r"[A-Za-z_][A-Za-z0-9_.]*"
_DECL_RE = re.compile(rf"(source|sink)\s+({_NAME})\s+as\s+({_NAME})")
_RULE_RE = re.compile(rf"rule\s+({_NAME})\s*:\s*(.*)")
_DENY_RE = re.compile(rf"deny\s+({_NAME})\s*<-\s*({_NAME})")

E_SYNTAX = "syntax"
E_DUPLICATE_LABEL = "duplicate-label"
E_UNDECLARED_LABEL = "undeclared-label"
E_DUPLICATE_API = "duplicate-api"


class DenyPair(NamedTuple):
    sink: str
    source: str

    def __str__(self) -> str:
        return f"{self.sink} <- {self.source}"


@dataclass(frozen=True)
class PolicySpec:
    sources: dict[str, str] = field(default_factory=dict)  # API name -> label
    sinks: dict[str, str] = field(default_factory=dict)
    rules: dict[str, frozenset[DenyPair]] = field(default_factory=dict)
    default_deny_all: bool = True

    @property
    def source_labels(self) -> set[str]:
        return set(self.sources.values())

    @property
    def sink_labels(self) -> set[str]:
        return set(self.sinks.values())

    def api_for_sink(self, label: str) -> str:
        for api, lbl in self.sinks.items():
            if lbl == label:
                return api
        raise KeyError(label)


def parse_policy(text: str) -> PolicySpec:
    sources: dict[str, str] = {}
    sinks: dict[str, str] = {}
    rules: dict[str, set[DenyPair]] = {}
    pending: list[tuple[DenyPair, int]] = []
    saw_rule = False

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DECL_RE.fullmatch(line)
        if m:
            kind, api, label = m.groups()
            if api in sources or api in sinks:
                raise PolicyError(E_DUPLICATE_API, f"API {api!r} declared twice", lineno)
            table = sources if kind == "source" else sinks
            if label in table.values():
                raise PolicyError(E_DUPLICATE_LABEL, f"{kind} label {label!r} declared twice", lineno)
            table[api] = label
            continue
        m = _RULE_RE.fullmatch(line)
        if m:
            saw_rule = True
            fn, rest = m.groups()
            entries = rules.setdefault(fn, set())
            for part in rest.split(","):
                d = _DENY_RE.fullmatch(part.strip())
                if d is None:
                    raise PolicyError(E_SYNTAX, f"malformed deny clause {part.strip()!r}", lineno)
                pair = DenyPair(*d.groups())
                entries.add(pair)
                pending.append((pair, lineno))
            continue
        raise PolicyError(E_SYNTAX, f"unrecognised line {line!r}", lineno)

    # declarations may follow the rules that use them
    sink_labels, source_labels = set(sinks.values()), set(sources.values())
    for pair, lineno in pending:
        if pair.sink not in sink_labels:
            raise PolicyError(E_UNDECLARED_LABEL, f"sink label {pair.sink!r} is not declared", lineno)
        if pair.source not in source_labels:
            raise PolicyError(E_UNDECLARED_LABEL, f"source label {pair.source!r} is not declared", lineno)

    return PolicySpec(
        sources=dict(sorted(sources.items())),
        sinks=dict(sorted(sinks.items())),
        rules={fn: frozenset(pairs) for fn, pairs in sorted(rules.items())},
        default_deny_all=not saw_rule,
    )


def format_policy(spec: PolicySpec) -> str:
    lines = [f"source {api} as {lbl}" for api, lbl in spec.sources.items()]
    lines += [f"sink {api} as {lbl}" for api, lbl in spec.sinks.items()]
    for fn, pairs in spec.rules.items():
        if pairs:
            lines.append(f"rule {fn}: " + ", ".join(f"deny {p.sink} <- {p.source}" for p in sorted(pairs)))
    return "".join(line + "\n" for line in lines)


class CalleeKind(enum.Enum):
    INTERNAL = "internal"
    SOURCE = "source"
    SINK = "sink"
    EXTERNAL = "external"


class Callee(NamedTuple):
    kind: CalleeKind
    label: Optional[str] = None


def classify_callee(spec: PolicySpec, p: Program, name: str) -> Callee:
    # a defined function shadows an API of the same name
    if name in p.functions:
        return Callee(CalleeKind.INTERNAL)
    label = spec.sources.get(name)
    if label is not None:
        return Callee(CalleeKind.SOURCE, label)
    label = spec.sinks.get(name)
    if label is not None:
        return Callee(CalleeKind.SINK, label)
    return Callee(CalleeKind.EXTERNAL)


def all_pairs(spec: PolicySpec) -> frozenset[DenyPair]:
    return frozenset(DenyPair(k, s) for k in spec.sink_labels for s in spec.source_labels)


def rules_for(spec: PolicySpec, p: Program, f: str, roots: Optional[Iterable[str]] = None) -> frozenset[DenyPair]:
    """Deny pairs that apply to ``f``.

    ``roots`` may be passed when calling this in a loop to avoid recomputing
    the program's roots each time.
    """
    if f not in p.functions:
        raise KeyError(f"unknown function {f!r}")
    if spec.default_deny_all:
        root_set = roots_of(p) if roots is None else roots
        return all_pairs(spec) if f in root_set else frozenset()
    return spec.rules.get(f, frozenset())
