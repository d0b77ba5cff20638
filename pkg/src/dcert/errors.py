"""Exception types shared by the parsers and the certificate codec."""

from __future__ import annotations


class DcertError(Exception):
    """Base class for input errors. ``code`` is a stable diagnostic identifier."""

    def __init__(self, code: str, message: str, line: int | None = None, column: int | None = None):
        self.code = code
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self) -> str:
        where = ""
        if self.line is not None:
            where = f"{self.line}:{self.column}: " if self.column is not None else f"{self.line}: "
        return f"{where}[{self.code}] {self.message}"


class ParseError(DcertError):
    pass


class PolicyError(DcertError):
    pass


class CertificateError(DcertError):
    pass


class MutationError(DcertError):
    pass
