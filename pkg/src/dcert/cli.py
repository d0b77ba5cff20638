"""``dcert`` command line: analyze, check, oracle, tamper-suite.

Exit codes: 0 valid and policy holds, 1 valid and policy violated,
2 certificate invalid, 3 input or parse error, 4 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analyzer, certificate, checker, oracle, tamper
from .errors import DcertError
from .ir import parse_program
from .policy import parse_policy

EXIT_HOLDS, EXIT_VIOLATED, EXIT_INVALID, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load(program_path: str, policy_path: str):
    try:
        program = parse_program(_read_text(program_path))
    except DcertError as exc:
        raise InputError(f"{program_path}:{exc}") from None
    try:
        spec = parse_policy(_read_text(policy_path))
    except DcertError as exc:
        raise InputError(f"{policy_path}:{exc}") from None
    return program, spec


def _write(text: str) -> None:
    sys.stdout.write(text)


def run_analyze(args: argparse.Namespace) -> int:
    program, spec = _load(args.program, args.policy)
    cert, trace = analyzer.analyze_program(program, spec, args.mode)
    if args.trace:
        for i, snapshot in enumerate(trace, start=1):
            label = "round" if args.mode == analyzer.Mode.JACOBI else "update"
            _write(f"== {label} {i} ==\n")
            _write(certificate.encode_text(certificate.Certificate(snapshot)))
    data = certificate.encode(cert)
    try:
        Path(args.output).write_bytes(data)
    except OSError as exc:
        raise InputError(f"{args.output}: {exc}") from None
    violated, satisfied = checker.evaluate_policy(program, spec, cert)
    for fn, pair in violated:
        _write(f"VIOLATED {fn}: deny {pair}\n")
    for fn, pair in satisfied:
        _write(f"SATISFIED {fn}: deny {pair}\n")
    _write(f"POLICY: {'VIOLATED' if violated else 'HOLDS'}\n")
    return EXIT_VIOLATED if violated else EXIT_HOLDS


def run_check(args: argparse.Namespace) -> int:
    program, spec = _load(args.program, args.policy)
    try:
        raw = Path(args.certificate).read_bytes()
    except OSError as exc:
        raise InputError(f"{args.certificate}: {exc}") from None
    try:
        cert = certificate.decode(raw)
    except DcertError as exc:
        raise InputError(f"{args.certificate}:{exc}") from None
    report = checker.check(program, spec, cert, strict=args.strict)
    _write(report.render())
    if not report.certificate_valid:
        return EXIT_INVALID
    return EXIT_HOLDS if report.policy_holds else EXIT_VIOLATED


def run_oracle(args: argparse.Namespace) -> int:
    program, spec = _load(args.program, args.policy)
    if args.depth < 1:
        raise InputError("--depth must be positive")
    result = oracle.enumerate_flows(program, spec, args.depth)
    _write(certificate.encode_text(certificate.Certificate(result.flows)))
    for name in sorted(result.inconclusive):
        _write(f"INCONCLUSIVE {name}\n")
    if args.certificate:
        try:
            cert = certificate.decode(Path(args.certificate).read_bytes())
        except (OSError, DcertError) as exc:
            raise InputError(f"{args.certificate}: {exc}") from None
        try:
            cmp = oracle.compare(cert, result)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        witness = ""
        if cmp.witness is not None:
            witness = f" {cmp.witness[0]}: {cmp.witness[1]}"
        _write(f"COMPARE: {cmp.agreement.value.upper()}{witness}\n")
    return EXIT_HOLDS


def run_tamper_suite(args: argparse.Namespace) -> int:
    program, spec = _load(args.program, args.policy)
    rows = tamper.run_suite(program, spec, seed=args.seed)
    _write(tamper.render_suite(rows))
    return EXIT_HOLDS if all(r.ok for r in rows) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcert", description="Certifying taint analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute summaries and write a certificate")
    p.add_argument("program")
    p.add_argument("policy")
    p.add_argument("-o", "--output", required=True, help="certificate path (.dcrt)")
    p.add_argument("--mode", choices=[m.value for m in analyzer.Mode], default="worklist")
    p.add_argument("--trace", action="store_true", help="print intermediate summary maps")
    p.set_defaults(func=run_analyze)

    p = sub.add_parser("check", help="validate a certificate and evaluate the policy")
    p.add_argument("program")
    p.add_argument("policy")
    p.add_argument("certificate")
    p.add_argument("--strict", action="store_true", help="require entries to equal their recomputation")
    p.set_defaults(func=run_check)

    p = sub.add_parser("oracle", help="enumerate flows by inlining (debugging aid)")
    p.add_argument("program")
    p.add_argument("policy")
    p.add_argument("--depth", type=int, default=oracle.DEFAULT_DEPTH)
    p.add_argument("--certificate", help="compare the oracle flows against this certificate")
    p.set_defaults(func=run_oracle)

    p = sub.add_parser("tamper-suite", help="mutate a genuine certificate and report detection")
    p.add_argument("program")
    p.add_argument("policy")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_tamper_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_HOLDS
    try:
        return args.func(args)
    except InputError as exc:
        print(f"dcert: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"dcert: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
