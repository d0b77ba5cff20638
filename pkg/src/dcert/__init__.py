"""Certifying taint analysis: summaries, certificates and a one-pass checker."""

from .analyzer import Mode, analyze_function, analyze_program
from .certificate import Certificate, FlowNode, FlowPair, decode, encode
from .checker import CheckReport, Failure, FailureKind, check
from .errors import CertificateError, DcertError, ParseError, PolicyError
from .ir import Program, parse_program, pretty_print
from .policy import DenyPair, PolicySpec, parse_policy

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CertificateError",
    "CheckReport",
    "DcertError",
    "DenyPair",
    "Failure",
    "FailureKind",
    "FlowNode",
    "FlowPair",
    "Mode",
    "ParseError",
    "PolicyError",
    "PolicySpec",
    "Program",
    "analyze_function",
    "analyze_program",
    "check",
    "decode",
    "encode",
    "parse_policy",
    "parse_program",
    "pretty_print",
]
