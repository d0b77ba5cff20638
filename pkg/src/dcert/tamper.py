"""Certificate and program mutations modelling an attacker, plus a detection matrix."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Optional

from .analyzer import analyze_function, analyze_program
from .certificate import SINK, SOURCE, Certificate, FlowPair, param, ret, sink, source
from .checker import check
from .errors import MutationError
from .ir import Call, Program, Return, callees_of, local_names, roots_of
from .policy import PolicySpec


class MutationKind(str, enum.Enum):
    DROP_PAIR = "DropPair"
    DROP_PAIR_EVERYWHERE = "DropPairEverywhere"
    DROP_ENTRY = "DropEntry"
    DROP_ALL_ENTRIES = "DropAllEntries"
    ADD_SPURIOUS_PAIR = "AddSpuriousPair"
    ADD_SINK_CALL = "AddSinkCall"


CERTIFICATE_KINDS = frozenset(MutationKind) - {MutationKind.ADD_SINK_CALL}


@dataclass(frozen=True)
class Mutation:
    kind: MutationKind
    functions: tuple[str, ...] = ()
    pair: Optional[FlowPair] = None
    label: Optional[str] = None
    variable: Optional[str] = None
    sink_api: Optional[str] = None
    seed: int = 0

    def describe(self) -> str:
        parts = []
        if self.functions:
            parts.append("at " + ",".join(self.functions))
        if self.pair is not None:
            parts.append(f"pair {self.pair}")
        if self.label is not None:
            parts.append(f"label {self.label}")
        if self.variable is not None:
            parts.append(f"var {self.variable} -> {self.sink_api}")
        return " ".join(parts)


def _require(c: Certificate, names: tuple[str, ...]) -> None:
    for name in names:
        if name not in c.entries:
            raise MutationError("locus", f"no certificate entry for {name!r}")


def mutate_certificate(c: Certificate, m: Mutation) -> Certificate:
    entries = dict(c.entries)
    kind = m.kind
    if kind is MutationKind.DROP_PAIR:
        if m.pair is None or not m.functions:
            raise MutationError("locus", "DropPair needs functions and a pair")
        _require(c, m.functions)
        for name in m.functions:
            if m.pair not in entries[name]:
                raise MutationError("locus", f"{m.pair} not in entry of {name!r}")
            entries[name] = entries[name] - {m.pair}
    elif kind is MutationKind.DROP_PAIR_EVERYWHERE:
        if m.label is None:
            raise MutationError("locus", "DropPairEverywhere needs a label")

        def mentions(pair: FlowPair) -> bool:
            return any(n.kind in (SOURCE, SINK) and n.name == m.label for n in pair)

        if not any(mentions(p) for pairs in entries.values() for p in pairs):
            raise MutationError("locus", f"no pair mentions label {m.label!r}")
        entries = {name: frozenset(p for p in pairs if not mentions(p)) for name, pairs in entries.items()}
    elif kind is MutationKind.DROP_ENTRY:
        _require(c, m.functions)
        for name in m.functions:
            entries[name] = frozenset()
    elif kind is MutationKind.DROP_ALL_ENTRIES:
        entries = {}
    elif kind is MutationKind.ADD_SPURIOUS_PAIR:
        if m.pair is None or len(m.functions) != 1:
            raise MutationError("locus", "AddSpuriousPair needs one function and a pair")
        _require(c, m.functions)
        name = m.functions[0]
        if m.pair in entries[name]:
            raise MutationError("locus", f"{m.pair} already present at {name!r}")
        entries[name] = entries[name] | {m.pair}
    else:
        raise MutationError("kind", f"{kind.value} is not a certificate mutation")
    return Certificate(entries)


def mutate_program(p: Program, m: Mutation) -> Program:
    """Insert a direct sink call on ``m.variable`` just before the function's final return."""
    if m.kind is not MutationKind.ADD_SINK_CALL:
        raise MutationError("kind", f"{m.kind.value} is not a program mutation")
    if len(m.functions) != 1 or m.variable is None or m.sink_api is None:
        raise MutationError("locus", "AddSinkCall needs one function, a variable and a sink API")
    name = m.functions[0]
    fn = p.functions.get(name)
    if fn is None:
        raise MutationError("locus", f"unknown function {name!r}")
    if m.variable not in local_names(fn):
        raise MutationError("locus", f"{m.variable!r} is not a variable of {name!r}")
    last = max((i for i, s in enumerate(fn.body) if isinstance(s, Return)), default=None)
    if last is None:
        raise MutationError("locus", f"{name!r} has no return statement")
    body = fn.body[:last] + (Call(None, m.sink_api, (m.variable,)),) + fn.body[last:]
    functions = dict(p.functions)
    functions[name] = replace(fn, body=body)
    return Program(functions)


# --------------------------------------------------------------------------
# mutation selection for a given (program, certificate)

def _sorted(names):
    return sorted(names, key=lambda n: n.encode("utf-8"))


def pick_drop_pair(p: Program, c: Certificate) -> Optional[Mutation]:
    """Prefer a sink <- source pair held by a root; drop it from every entry holding it."""
    roots = roots_of(p)
    candidates = [
        (name not in roots, pair.origin.kind != SOURCE or pair.target.kind != SINK, str(pair), pair)
        for name in c.entries
        for pair in c.entries[name]
    ]
    if not candidates:
        return None
    pair = min(candidates, key=lambda t: t[:3])[3]
    holders = tuple(_sorted(n for n, pairs in c.entries.items() if pair in pairs))
    return Mutation(MutationKind.DROP_PAIR, functions=holders, pair=pair)


def pick_drop_label(c: Certificate) -> Optional[Mutation]:
    labels = {n.name for pairs in c.entries.values() for pair in pairs for n in pair if n.kind == SOURCE}
    if not labels:
        return None
    return Mutation(MutationKind.DROP_PAIR_EVERYWHERE, label=_sorted(labels)[0])


def pick_drop_entry(c: Certificate) -> Optional[Mutation]:
    for name in _sorted(c.entries):
        if c.entries[name]:
            return Mutation(MutationKind.DROP_ENTRY, functions=(name,))
    return None


def spurious_candidates(p: Program, spec: PolicySpec, c: Certificate, name: str) -> list[FlowPair]:
    fn = p.functions[name]
    targets = [ret()] + [sink(lbl) for lbl in sorted(spec.sinks.values())]
    origins = [param(x) for x in fn.params] + [source(lbl) for lbl in sorted(spec.sources.values())]
    present = c.entries.get(name, frozenset())
    return sorted((FlowPair(t, o) for t in targets for o in origins if FlowPair(t, o) not in present), key=str)


def pick_spurious(p: Program, spec: PolicySpec, c: Certificate, seed: int = 0) -> Optional[Mutation]:
    """Pick an absent well-formed pair, preferably on a root that does not call itself.

    On such a function the padded certificate stays a post-fixpoint (nothing
    reads the entry), so only strict checking can reject it.
    """
    rng = random.Random(seed)
    roots = roots_of(p)
    not_recursive = [n for n in _sorted(p.functions) if n not in callees_of(p, n)]
    for pool in ([n for n in not_recursive if n in roots], not_recursive):
        for name in pool:
            options = spurious_candidates(p, spec, c, name)
            if options:
                return Mutation(MutationKind.ADD_SPURIOUS_PAIR, functions=(name,), pair=rng.choice(options), seed=seed)
    return None


def pick_sink_call(p: Program, spec: PolicySpec, c: Certificate) -> Optional[Mutation]:
    """Find a (function, variable) whose taint would reach a sink pair the certificate lacks."""
    if not spec.sinks:
        return None
    api = _sorted(spec.sinks)[0]
    for name in _sorted(p.functions):
        fn = p.functions[name]
        if not any(isinstance(s, Return) for s in fn.body):
            continue
        for var in _sorted(local_names(fn)):
            m = Mutation(MutationKind.ADD_SINK_CALL, functions=(name,), variable=var, sink_api=api)
            mutated = mutate_program(p, m)
            if analyze_function(mutated.functions[name], spec, c.entries, mutated) - c.entries[name]:
                return m
    return None


# --------------------------------------------------------------------------
# detection matrix

@dataclass(frozen=True)
class SuiteRow:
    kind: MutationKind
    mutation: Optional[Mutation]
    detected_lenient: Optional[bool]
    detected_strict: Optional[bool]

    @property
    def applicable(self) -> bool:
        return self.mutation is not None

    @property
    def ok(self) -> bool:
        if not self.applicable:
            return True
        if self.kind is MutationKind.ADD_SPURIOUS_PAIR:
            return bool(self.detected_strict)
        return bool(self.detected_lenient and self.detected_strict)

    def render(self) -> str:
        if not self.applicable:
            status = "N/A"
        elif self.kind is MutationKind.ADD_SPURIOUS_PAIR:
            lenient = "DETECTED" if self.detected_lenient else "ACCEPTED"
            strict = "DETECTED" if self.detected_strict else "ACCEPTED"
            status = f"{lenient} (non-strict) / {strict} (strict)"
        elif self.ok:
            status = "DETECTED"
        else:
            status = "MISSED"
        where = f" [{self.mutation.describe()}]" if self.mutation is not None else ""
        return f"{self.kind.value:<20} {status}{where}"


def run_suite(p: Program, spec: PolicySpec, seed: int = 0) -> list[SuiteRow]:
    genuine, _ = analyze_program(p, spec)
    chosen = [
        (MutationKind.DROP_PAIR, pick_drop_pair(p, genuine)),
        (MutationKind.DROP_PAIR_EVERYWHERE, pick_drop_label(genuine)),
        (MutationKind.DROP_ENTRY, pick_drop_entry(genuine)),
        (MutationKind.DROP_ALL_ENTRIES,
         Mutation(MutationKind.DROP_ALL_ENTRIES) if p.functions else None),
        (MutationKind.ADD_SPURIOUS_PAIR, pick_spurious(p, spec, genuine, seed)),
        (MutationKind.ADD_SINK_CALL, pick_sink_call(p, spec, genuine)),
    ]
    rows = []
    for kind, m in chosen:
        if m is None:
            rows.append(SuiteRow(kind, None, None, None))
            continue
        if kind is MutationKind.ADD_SINK_CALL:
            subject, cert = mutate_program(p, m), genuine
        else:
            subject, cert = p, mutate_certificate(genuine, m)
        lenient = not check(subject, spec, cert, strict=False).certificate_valid
        strict = not check(subject, spec, cert, strict=True).certificate_valid
        rows.append(SuiteRow(kind, m, lenient, strict))
    return rows


def render_suite(rows: list[SuiteRow]) -> str:
    lines = [row.render() for row in rows]
    verdict = "ALL GUARANTEED ROWS DETECTED" if all(r.ok for r in rows) else "DETECTION FAILURE"
    lines.append(f"SUITE: {verdict}")
    return "".join(line + "\n" for line in lines)
