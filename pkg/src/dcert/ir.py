"""A small first-order procedural IR, its text parser and call-graph queries.

Programs are written in ``.dct`` files::

    fn bar() {
      x = call getId();
      call Send(x);
      y = call getNumber();
      return y;
    }

Values have no structure: a variable simply carries data that came from
somewhere. ``if``/``while`` conditions are parsed but never induce flows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import ParseError

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
KEYWORDS = frozenset({"fn", "call", "return", "if", "else", "while", "const", "op"})

# diagnostic codes
E_SYNTAX = "syntax"
E_DUPLICATE_FUNCTION = "duplicate-function"
E_DUPLICATE_PARAM = "duplicate-parameter"
E_ARITY = "arity-mismatch"
E_UNDECLARED = "undeclared-variable"


@dataclass(frozen=True)
class Copy:
    dst: str
    src: str


@dataclass(frozen=True)
class Const:
    dst: str


@dataclass(frozen=True)
class Binop:
    dst: str
    lhs: str
    rhs: str


@dataclass(frozen=True)
class Call:
    dst: Optional[str]
    callee: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Return:
    val: Optional[str] = None


@dataclass(frozen=True)
class If:
    cond: str
    then: tuple["Stmt", ...] = ()
    orelse: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class While:
    cond: str
    body: tuple["Stmt", ...] = ()


Stmt = Union[Copy, Const, Binop, Call, Return, If, While]


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]


@dataclass(frozen=True, eq=True)
class Program:
    """Functions keyed by name, in source order."""

    functions: dict[str, Function]

    def __hash__(self) -> int:
        return hash(tuple(self.functions.values()))

    def __contains__(self, name: str) -> bool:
        return name in self.functions

    def __getitem__(self, name: str) -> Function:
        return self.functions[name]

    def __len__(self) -> int:
        return len(self.functions)

    @classmethod
    def of(cls, *functions: Function) -> "Program":
        return cls({f.name: f for f in functions})


def walk(body: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Yield every statement of ``body``, descending into branches and loops."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk(stmt.then)
            yield from walk(stmt.orelse)
        elif isinstance(stmt, While):
            yield from walk(stmt.body)


def assigned_var(stmt: Stmt) -> Optional[str]:
    if isinstance(stmt, (Copy, Const, Binop)):
        return stmt.dst
    if isinstance(stmt, Call):
        return stmt.dst
    return None


def read_vars(stmt: Stmt) -> tuple[str, ...]:
    if isinstance(stmt, Copy):
        return (stmt.src,)
    if isinstance(stmt, Binop):
        return (stmt.lhs, stmt.rhs)
    if isinstance(stmt, Call):
        return stmt.args
    if isinstance(stmt, Return):
        return () if stmt.val is None else (stmt.val,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    return ()


def local_names(fn: Function) -> set[str]:
    """Parameters plus every variable assigned anywhere in the body."""
    names = set(fn.params)
    for stmt in walk(fn.body):
        dst = assigned_var(stmt)
        if dst is not None:
            names.add(dst)
    return names


# --------------------------------------------------------------------------
# call graph

def callees_of(p: Program, f: str) -> set[str]:
    if f not in p.functions:
        raise KeyError(f"unknown function {f!r}")
    return {s.callee for s in walk(p.functions[f].body) if isinstance(s, Call)}


def callers_map(p: Program) -> dict[str, set[str]]:
    """Reverse call edges restricted to defined functions."""
    callers: dict[str, set[str]] = {name: set() for name in p.functions}
    for name in p.functions:
        for callee in callees_of(p, name):
            if callee in callers:
                callers[callee].add(name)
    return callers


def roots_of(p: Program) -> set[str]:
    """Functions not called by any *other* defined function.

    A function reached only through a self-call still counts as a root.
    """
    called: set[str] = set()
    for name in p.functions:
        called.update(c for c in callees_of(p, name) if c != name)
    return {name for name in p.functions if name not in called}


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.]*)|(?P<punct>[(){},;=])"
)


@dataclass
class _Tok:
    kind: str  # "name", "kw", "punct", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(E_SYNTAX, f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "name":
            word = m.group()
            toks.append(_Tok("kw" if word in KEYWORDS else "name", word, line, col))
        elif kind == "punct":
            toks.append(_Tok("punct", m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        # per-function bookkeeping for the semantic checks
        self.reads: list[tuple[str, int, int]] = []
        self.calls: list[tuple[str, int, int, int]] = []

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, tok: _Tok, expected: str) -> ParseError:
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(E_SYNTAX, f"expected {expected}, got {got}", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text or tok.kind == "name":
            raise self.fail(tok, repr(text))
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok.kind in ("kw", "punct") and tok.text == text:
            self.i += 1
            return True
        return False

    def name(self) -> _Tok:
        tok = self.next()
        if tok.kind != "name":
            raise self.fail(tok, "a name")
        return tok

    def read(self) -> str:
        tok = self.name()
        self.reads.append((tok.text, tok.line, tok.col))
        return tok.text

    def arglist(self, reading: bool) -> tuple[str, ...]:
        self.expect("(")
        names: list[str] = []
        if not self.accept(")"):
            while True:
                names.append(self.read() if reading else self.name().text)
                if self.accept(")"):
                    break
                self.expect(",")
        return tuple(names)

    def program(self) -> tuple[Program, list]:
        functions: dict[str, Function] = {}
        sites = []
        while self.peek().kind != "eof":
            start = self.peek()
            fn, reads, calls = self.fndef()
            if fn.name in functions:
                raise ParseError(E_DUPLICATE_FUNCTION, f"function {fn.name!r} defined twice",
                                 start.line, start.col)
            functions[fn.name] = fn
            sites.append((fn, reads, calls))
        return Program(functions), sites

    def fndef(self):
        self.expect("fn")
        name = self.name().text
        self.expect("(")
        params: list[str] = []
        if not self.accept(")"):
            while True:
                tok = self.name()
                if tok.text in params:
                    raise ParseError(E_DUPLICATE_PARAM, f"parameter {tok.text!r} repeated in {name!r}",
                                     tok.line, tok.col)
                params.append(tok.text)
                if self.accept(")"):
                    break
                self.expect(",")
        self.reads, self.calls = [], []
        body = self.block()
        return Function(name, tuple(params), body), self.reads, self.calls

    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.accept("}"):
            stmts.append(self.stmt())
        return tuple(stmts)

    def call_expr(self, dst: Optional[str]) -> Call:
        tok = self.name()
        args = self.arglist(reading=True)
        self.calls.append((tok.text, len(args), tok.line, tok.col))
        return Call(dst, tok.text, args)

    def stmt(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "kw":
            self.i += 1
            if tok.text == "call":
                stmt = self.call_expr(None)
                self.expect(";")
                return stmt
            if tok.text == "return":
                val = None if self.peek().kind != "name" else self.read()
                self.expect(";")
                return Return(val)
            if tok.text in ("if", "while"):
                self.expect("(")
                cond = self.read()
                self.expect(")")
                body = self.block()
                if tok.text == "while":
                    return While(cond, body)
                orelse = self.block() if self.accept("else") else ()
                return If(cond, body, orelse)
            raise self.fail(tok, "a statement")
        if tok.kind != "name":
            raise self.fail(tok, "a statement")
        dst = self.next().text
        self.expect("=")
        stmt: Stmt
        if self.accept("const"):
            stmt = Const(dst)
        elif self.accept("call"):
            stmt = self.call_expr(dst)
        else:
            lhs = self.read()
            if self.accept("op"):
                stmt = Binop(dst, lhs, self.read())
            else:
                stmt = Copy(dst, lhs)
        self.expect(";")
        return stmt


def parse_program(text: str) -> Program:
    """Parse ``.dct`` source text; raise :class:`ParseError` on any defect."""
    parser = _Parser(text)
    program, sites = parser.program()
    for fn, reads, calls in sites:
        declared = local_names(fn)
        for name, line, col in reads:
            if name not in declared:
                raise ParseError(E_UNDECLARED, f"variable {name!r} read in {fn.name!r} is never assigned",
                                 line, col)
        for callee, nargs, line, col in calls:
            target = program.functions.get(callee)
            if target is not None and len(target.params) != nargs:
                raise ParseError(
                    E_ARITY,
                    f"{callee!r} takes {len(target.params)} argument(s), {nargs} given",
                    line, col,
                )
    return program


# --------------------------------------------------------------------------
# printing

def _print_block(body: tuple[Stmt, ...], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for s in body:
        if isinstance(s, Copy):
            out.append(f"{pad}{s.dst} = {s.src};")
        elif isinstance(s, Const):
            out.append(f"{pad}{s.dst} = const;")
        elif isinstance(s, Binop):
            out.append(f"{pad}{s.dst} = {s.lhs} op {s.rhs};")
        elif isinstance(s, Call):
            call = f"call {s.callee}({', '.join(s.args)})"
            out.append(f"{pad}{call};" if s.dst is None else f"{pad}{s.dst} = {call};")
        elif isinstance(s, Return):
            out.append(f"{pad}return;" if s.val is None else f"{pad}return {s.val};")
        elif isinstance(s, If):
            out.append(f"{pad}if ({s.cond}) {{")
            _print_block(s.then, indent + 1, out)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                _print_block(s.orelse, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, While):
            out.append(f"{pad}while ({s.cond}) {{")
            _print_block(s.body, indent + 1, out)
            out.append(f"{pad}}}")
        else:  # pragma: no cover
            raise TypeError(f"not a statement: {s!r}")


def pretty_print(p: Program) -> str:
    out: list[str] = []
    for fn in p.functions.values():
        out.append(f"fn {fn.name}({', '.join(fn.params)}) {{")
        _print_block(fn.body, 1, out)
        out.append("}")
    return "\n".join(out) + "\n" if out else ""
