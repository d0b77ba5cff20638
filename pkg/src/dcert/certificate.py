"""Summary data model and the canonical ``.dcrt`` certificate encoding.

A summary is a set of ``(target, origin)`` flow pairs: data that enters a
function through ``origin`` (a parameter or a source API) may reach
``target`` (the return slot or a sink API). The certificate maps every
function to its summary.

Encoding is canonical and strictly decoded: two certificates are equal iff
their encodings are byte-identical::

    DCERT-1
    fn Send
      sink:sms <- param:x
    fn bar
      ret <- source:num
      sink:sms <- source:id
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import CertificateError

HEADER = "DCERT-1"

E_BAD_HEADER = "bad-header"
E_NON_CANONICAL = "non-canonical"
E_MALFORMED_NODE = "malformed-node"
E_DUPLICATE_FUNCTION = "duplicate-function"
E_SYNTAX = "syntax"

RET, PARAM, SOURCE, SINK = "ret", "param", "source", "sink"
TARGET_KINDS = frozenset({RET, SINK})
ORIGIN_KINDS = frozenset({PARAM, SOURCE})

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")


class FlowNode(NamedTuple):
    kind: str
    name: str = ""

    def __str__(self) -> str:
        return self.kind if self.kind == RET else f"{self.kind}:{self.name}"


def ret() -> FlowNode:
    return FlowNode(RET)


def param(name: str) -> FlowNode:
    return FlowNode(PARAM, name)


def source(label: str) -> FlowNode:
    return FlowNode(SOURCE, label)


def sink(label: str) -> FlowNode:
    return FlowNode(SINK, label)


class FlowPair(NamedTuple):
    target: FlowNode
    origin: FlowNode

    def __str__(self) -> str:
        return f"{self.target} <- {self.origin}"

    def well_formed(self) -> bool:
        return self.target.kind in TARGET_KINDS and self.origin.kind in ORIGIN_KINDS


Summary = frozenset  # frozenset[FlowPair]
EMPTY: frozenset[FlowPair] = frozenset()


def union(a: Iterable[FlowPair], b: Iterable[FlowPair]) -> frozenset[FlowPair]:
    """Join of two summaries."""
    return frozenset(a) | frozenset(b)


@dataclass(frozen=True)
class Certificate:
    entries: Mapping[str, frozenset[FlowPair]] = field(default_factory=dict)

    def __getitem__(self, name: str) -> frozenset[FlowPair]:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Certificate):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def __hash__(self) -> int:
        return hash(frozenset(self.entries.items()))

    def get(self, name: str, default=EMPTY) -> frozenset[FlowPair]:
        return self.entries.get(name, default)


def _key(text: str) -> bytes:
    return text.encode("utf-8")


def encode(c: Certificate) -> bytes:
    lines = [HEADER]
    for name in sorted(c.entries, key=_key):
        lines.append(f"fn {name}")
        lines.extend(sorted((f"  {p}" for p in c.entries[name]), key=_key))
    return ("\n".join(lines) + "\n").encode("utf-8")


def encode_text(c: Certificate) -> str:
    return encode(c).decode("utf-8")


def parse_node(text: str, roles: frozenset[str], lineno: int) -> FlowNode:
    if text == RET:
        node = FlowNode(RET)
    else:
        kind, sep, name = text.partition(":")
        if not sep or kind not in (PARAM, SOURCE, SINK) or not _NAME_RE.fullmatch(name):
            raise CertificateError(E_MALFORMED_NODE, f"malformed flow node {text!r}", lineno)
        node = FlowNode(kind, name)
    if node.kind not in roles:
        raise CertificateError(E_MALFORMED_NODE, f"{text!r} cannot appear in this position", lineno)
    return node


def decode(data: bytes) -> Certificate:
    """Inverse of :func:`encode`. Anything :func:`encode` would not produce is rejected."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CertificateError(E_SYNTAX, f"not UTF-8: {exc}") from None
    if not text.startswith(HEADER + "\n"):
        first = text.split("\n", 1)[0]
        raise CertificateError(E_BAD_HEADER, f"expected {HEADER!r}, got {first!r}", 1)

    lines = text.split("\n")
    if lines[-1] != "":
        raise CertificateError(E_NON_CANONICAL, "missing final newline", len(lines))
    entries: dict[str, frozenset[FlowPair]] = {}
    current: str | None = None
    pairs: list[FlowPair] = []
    prev_fn: bytes | None = None
    prev_pair: bytes | None = None

    def close() -> None:
        if current is not None:
            entries[current] = frozenset(pairs)

    for lineno, line in enumerate(lines[1:-1], start=2):
        if "\r" in line or line != line.rstrip():
            raise CertificateError(E_NON_CANONICAL, "trailing whitespace or CR", lineno)
        if line.startswith("fn "):
            name = line[3:]
            if not _NAME_RE.fullmatch(name):
                raise CertificateError(E_SYNTAX, f"bad function name {name!r}", lineno)
            key = _key(name)
            if prev_fn is not None and key == prev_fn:
                raise CertificateError(E_DUPLICATE_FUNCTION, f"function {name!r} appears twice", lineno)
            if prev_fn is not None and key < prev_fn:
                raise CertificateError(E_NON_CANONICAL, f"function {name!r} out of order", lineno)
            close()
            current, pairs, prev_fn, prev_pair = name, [], key, None
        elif line.startswith("  "):
            if current is None:
                raise CertificateError(E_SYNTAX, "flow pair outside a function block", lineno)
            body = line[2:]
            parts = body.split(" <- ")
            if len(parts) != 2:
                raise CertificateError(E_SYNTAX, f"malformed pair line {body!r}", lineno)
            pair = FlowPair(parse_node(parts[0], TARGET_KINDS, lineno), parse_node(parts[1], ORIGIN_KINDS, lineno))
            key = _key(line)
            if prev_pair is not None and key <= prev_pair:
                raise CertificateError(E_NON_CANONICAL, f"pair {body!r} duplicated or out of order", lineno)
            prev_pair = key
            pairs.append(pair)
        else:
            raise CertificateError(E_SYNTAX, f"unrecognised line {line!r}", lineno)
    close()
    return Certificate(entries)
