"""Single-pass certificate validation and policy entailment.

The checker never computes a fixpoint. Each function is re-analysed once,
with the certificate's own entries standing in for its callees' summaries;
the certificate is valid when every entry contains that recomputation
(strict mode: equals it). Policy verdicts are read off the certificate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import analyzer
from .certificate import PARAM, SINK, SOURCE, Certificate, FlowPair, sink, source
from .ir import Program, roots_of
from .policy import DenyPair, PolicySpec, rules_for


class FailureKind(str, enum.Enum):
    MISSING_ENTRY = "MissingEntry"
    MALFORMED_PAIR = "MalformedPair"
    INCONSISTENT = "Inconsistent"
    NOT_TIGHT = "NotTight"


@dataclass(frozen=True, order=True)
class Failure:
    function: str
    kind: FailureKind
    detail: str

    def __str__(self) -> str:
        return f"FAIL {self.kind.value} {self.function}: {self.detail}"


@dataclass
class CheckReport:
    certificate_valid: bool
    policy_holds: bool
    failures: list[Failure] = field(default_factory=list)
    violations: list[tuple[str, DenyPair]] = field(default_factory=list)
    satisfied: list[tuple[str, DenyPair]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if not self.certificate_valid:
            return "VERDICT: INVALID POLICY: SKIPPED"
        return f"VERDICT: VALID POLICY: {'HOLDS' if self.policy_holds else 'VIOLATED'}"

    def render(self) -> str:
        lines = [str(f) for f in sorted(self.failures)]
        lines += sorted(f"VIOLATED {fn}: deny {pair}" for fn, pair in self.violations)
        lines += sorted(f"SATISFIED {fn}: deny {pair}" for fn, pair in self.satisfied)
        lines.append(self.verdict)
        return "".join(line + "\n" for line in lines)


def check_coverage(p: Program, c: Certificate) -> list[Failure]:
    failures = [
        Failure(name, FailureKind.MISSING_ENTRY, "no certificate entry")
        for name in p.functions
        if name not in c.entries
    ]
    failures += [
        Failure(name, FailureKind.MALFORMED_PAIR, "entry for a function not defined in the program")
        for name in c.entries
        if name not in p.functions
    ]
    return sorted(failures)


def _pair_problem(pair: FlowPair, params: tuple[str, ...], sinks: set[str], sources: set[str]) -> str | None:
    if not pair.well_formed():
        return "target must be ret or sink, origin must be param or source"
    target, origin = pair
    if target.kind == SINK and target.name not in sinks:
        return f"undeclared sink label {target.name!r}"
    if origin.kind == SOURCE and origin.name not in sources:
        return f"undeclared source label {origin.name!r}"
    if origin.kind == PARAM and origin.name not in params:
        return f"{origin.name!r} is not a parameter"
    return None


def check_wellformed(p: Program, spec: PolicySpec, c: Certificate) -> list[Failure]:
    failures = []
    sinks, sources = spec.sink_labels, spec.source_labels
    for name, pairs in c.entries.items():
        fn = p.functions.get(name)
        if fn is None:
            continue  # reported by check_coverage
        for pair in pairs:
            problem = _pair_problem(pair, fn.params, sinks, sources)
            if problem is not None:
                failures.append(Failure(name, FailureKind.MALFORMED_PAIR, f"{pair}: {problem}"))
    return sorted(failures)


def check_consistency(p: Program, spec: PolicySpec, c: Certificate, strict: bool = False) -> list[Failure]:
    """One local re-analysis per function against the certificate's callee entries."""
    failures = []
    for name, fn in p.functions.items():
        claimed = c.entries[name]
        local = analyzer.analyze_function(fn, spec, c.entries, p)
        failures += [Failure(name, FailureKind.INCONSISTENT, f"missing {pair}") for pair in local - claimed]
        if strict:
            failures += [Failure(name, FailureKind.NOT_TIGHT, f"unjustified {pair}") for pair in claimed - local]
    return sorted(failures)


def check_policy(p: Program, spec: PolicySpec, c: Certificate) -> list[tuple[str, DenyPair]]:
    return evaluate_policy(p, spec, c)[0]


def evaluate_policy(p: Program, spec: PolicySpec, c: Certificate):
    roots = roots_of(p) if spec.default_deny_all else ()
    violated, satisfied = [], []
    for name in p.functions:
        entry = c.entries.get(name, frozenset())
        for rule in sorted(rules_for(spec, p, name, roots)):
            if FlowPair(sink(rule.sink), source(rule.source)) in entry:
                violated.append((name, rule))
            else:
                satisfied.append((name, rule))
    return sorted(violated), sorted(satisfied)


def check(p: Program, spec: PolicySpec, c: Certificate, strict: bool = False) -> CheckReport:
    failures = check_coverage(p, c) + check_wellformed(p, spec, c)
    if not failures:
        failures = check_consistency(p, spec, c, strict)
    if failures:
        return CheckReport(certificate_valid=False, policy_holds=False, failures=failures)
    violated, satisfied = evaluate_policy(p, spec, c)
    return CheckReport(
        certificate_valid=True,
        policy_holds=not violated,
        violations=violated,
        satisfied=satisfied,
    )
