"""Concrete syntax: tokenizer, recursive-descent parser and printer.

Grammar, loosest binding first::

    P ::= S ('|' S)*                      parallel, left associative
    S ::= A (';' A)*                      sequence, left associative
    A ::= 'new' n '.' P                   restriction, body extends right
        | '0' | X | '(' P ')' | '[[' P ']]'
        | l '[' P ']'                     located process
        | a '!' '(' n,... ')'             name output
        | a '!' '{' P '}'                 process output
        | a '?' '(' x,... ')' M A         name input
        | a '?' '{' X '}' M A             process input
        | a '?' '(' X ')' M A             process input, alternative spelling
        | l '?' '[' X ']' M A             passivation input
        | 'up' '!' '(' l ')' '{' P '}'     update provision
        | 'up' '?' '(' l ',' X ')' '#' '{' P '}' '*' A
    M ::= '>' | '*'                       once / replicated

Names are lowercase identifiers with an optional ``@version``; process
variables are capitalized.  ``--`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    NIL,
    Blocked,
    Input,
    Loc,
    LocPat,
    Name,
    NamePat,
    Nil,
    OutName,
    OutProc,
    Par,
    Process,
    ProcessVar,
    ProcPat,
    Restrict,
    Seq,
    TermError,
    UpdProv,
    UpdRecv,
    Var,
)

UPDATE_CHANNEL = "up"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset = frozenset()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{span}: {message}{detail}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<num>[0-9]+)
  | (?P<sym>[!?(){}\[\]|;>*#,.@])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, col, line, col + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        s = m.group()
        end_line, end_col = line, col
        for ch in s:
            if ch == "\n":
                end_line += 1
                end_col = 1
            else:
                end_col += 1
        if kind not in ("ws", "comment"):
            if kind == "sym":
                kind = s
            elif kind == "name" and s == "new":
                kind = "new"
            tokens.append(Token(kind, s, line, col, end_line, end_col))
        pos = m.end()
        line, col = end_line, end_col
    tokens.append(Token("eof", "", line, col, line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, file: str, closed: bool):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self.closed = closed
        self.scope: list[ProcessVar] = []

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def span(self, start: Token, end: Optional[Token] = None) -> SourceSpan:
        end = end or start
        return SourceSpan(self.file, start.line, start.col, end.end_line, end.end_col)

    def fail(self, msg, expected=(), tok=None):
        tok = tok or self.tok
        raise ParseError(msg, self.span(tok), frozenset(expected))

    def expect(self, kind: str) -> Token:
        t = self.tok
        if t.kind != kind:
            self.fail(f"unexpected {t.text or 'end of input'!r}", {kind})
        self.i += 1
        return t

    def accept(self, kind: str) -> Optional[Token]:
        if self.tok.kind == kind:
            t = self.tok
            self.i += 1
            return t
        return None

    def build(self, start, cls, *args):
        try:
            return cls(*args)
        except TermError as e:
            raise ParseError(str(e), self.span(start, self.toks[self.i - 1])) from None

    # grammar

    def parse(self) -> Process:
        p = self.proc()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}", {"|", ";", "eof"})
        return p

    def proc(self) -> Process:
        p = self.seq()
        while self.accept("|"):
            p = Par(p, self.seq())
        return p

    def seq(self) -> Process:
        p = self.atom()
        while self.accept(";"):
            p = Seq(p, self.atom())
        return p

    def name(self) -> Name:
        t = self.expect("name")
        version = None
        if self.accept("@"):
            version = int(self.expect("num").text)
        try:
            return Name(t.text, version)
        except TermError as e:
            raise ParseError(str(e), self.span(t)) from None

    def binder_name(self) -> Name:
        start = self.tok
        n = self.name()
        if n.version is not None:
            raise ParseError("binders carry no version", self.span(start, self.toks[self.i - 1]))
        return n

    def var(self) -> ProcessVar:
        return ProcessVar(self.expect("var").text)

    def mode(self) -> bool:
        if self.accept(">"):
            return False
        if self.accept("*"):
            return True
        self.fail(f"unexpected {self.tok.text or 'end of input'!r}", {">", "*"})

    def bound_body(self, binders: list[ProcessVar]) -> Process:
        self.scope.extend(binders)
        try:
            return self.atom()
        finally:
            del self.scope[len(self.scope) - len(binders):]

    ATOM_START = {"new", "num", "var", "(", "[", "name"}

    def atom(self) -> Process:
        t = self.tok
        if t.kind == "new":
            self.i += 1
            n = self.binder_name()
            self.expect(".")
            return self.build(t, Restrict, n, self.proc())
        if t.kind == "num":
            if t.text != "0":
                self.fail(f"unexpected number {t.text!r}", {"0"})
            self.i += 1
            return NIL
        if t.kind == "var":
            self.i += 1
            v = ProcessVar(t.text)
            if self.closed and v not in self.scope:
                raise ParseError(f"unbound process variable {v}", self.span(t))
            return Var(v)
        if t.kind == "(":
            self.i += 1
            p = self.proc()
            self.expect(")")
            return p
        if t.kind == "[":
            self.i += 1
            self.expect("[")
            p = self.proc()
            self.expect("]")
            self.expect("]")
            return Blocked(p)
        if t.kind == "name":
            return self.prefixed()
        self.fail(f"unexpected {t.text or 'end of input'!r}", self.ATOM_START)

    def prefixed(self) -> Process:
        start = self.tok
        subject = self.name()
        if self.accept("["):
            body = self.proc()
            self.expect("]")
            return Loc(subject, body)
        if self.accept("!"):
            if self.accept("{"):
                payload = self.proc()
                self.expect("}")
                return OutProc(subject, payload)
            self.expect("(")
            names = self.name_list(allow_empty=True)
            self.expect(")")
            if self.tok.kind == "{":
                if subject != Name(UPDATE_CHANNEL) or len(names) != 1:
                    self.fail("only up!(l){P} carries a location and a process", {"|", ";"})
                self.i += 1
                payload = self.proc()
                self.expect("}")
                return UpdProv(names[0], payload)
            return OutName(subject, tuple(names))
        if self.accept("?"):
            if self.accept("{"):
                x = self.var()
                self.expect("}")
                mode = self.mode()
                body = self.bound_body([x])
                return self.build(start, Input, ProcPat(subject, (x,)), mode, body)
            if self.accept("["):
                x = self.var()
                self.expect("]")
                mode = self.mode()
                body = self.bound_body([x])
                return self.build(start, Input, LocPat(subject, x), mode, body)
            self.expect("(")
            if subject == Name(UPDATE_CHANNEL) and self._is_update_reception():
                return self.reception(start)
            if self.tok.kind == "var":
                # a?(X) is accepted as a spelling of a?{X}
                x = self.var()
                self.expect(")")
                mode = self.mode()
                body = self.bound_body([x])
                return self.build(start, Input, ProcPat(subject, (x,)), mode, body)
            binders = []
            while True:
                binders.append(self.binder_name())
                if not self.accept(","):
                    break
            self.expect(")")
            mode = self.mode()
            body = self.atom()
            try:
                pat = NamePat(subject, tuple(binders))
            except TermError as e:
                raise ParseError(str(e), self.span(start, self.toks[self.i - 1])) from None
            return self.build(start, Input, pat, mode, body)
        self.fail(f"unexpected {self.tok.text or 'end of input'!r} after name", {"[", "!", "?"})

    def _is_update_reception(self) -> bool:
        # up?( l [@v] , X ...
        kinds = [t.kind for t in self.toks[self.i : self.i + 5]] + ["eof"] * 5
        if kinds[0] != "name":
            return False
        j = 3 if kinds[1] == "@" else 1
        return kinds[j] == "," and kinds[j + 1] == "var"

    def reception(self, start: Token) -> Process:
        loc = self.name()
        self.expect(",")
        x = self.var()
        self.expect(")")
        self.expect("#")
        self.expect("{")
        self.scope.append(x)
        try:
            log = self.proc()
            self.expect("}")
            self.expect("*")
            body = self.atom()
        finally:
            self.scope.pop()
        return self.build(start, UpdRecv, loc, x, log, body)

    def name_list(self, allow_empty=False) -> list[Name]:
        if allow_empty and self.tok.kind == ")":
            return []
        names = [self.name()]
        while self.accept(","):
            names.append(self.name())
        return names


def parse(text: str, file: str = "<input>", closed: bool = True) -> Process:
    """Parse a process term.

    With ``closed`` set, every process variable must be bound.  Raises
    ParseError, never anything else, on malformed input.
    """
    try:
        return _Parser(text, file, closed).parse()
    except RecursionError:
        raise ParseError("term nested too deeply", SourceSpan(file, 1, 1, 1, 1)) from None


# -- printer ----------------------------------------------------------------

_PAR, _SEQ, _PREFIX = 0, 1, 2


def print_term(p: Process) -> str:
    """Render ``p`` with the fewest parentheses the grammar allows."""
    return _pr(p, _PAR, True)


def _names(ns):
    return ",".join(str(n) for n in ns)


def _pr(p: Process, prec: int, tail: bool) -> str:
    if isinstance(p, Par):
        if prec > _PAR:
            return "(" + _pr(p, _PAR, True) + ")"
        return _pr(p.left, _PAR, False) + " | " + _pr(p.right, _SEQ, tail)
    if isinstance(p, Seq):
        if prec > _SEQ:
            return "(" + _pr(p, _PAR, True) + ")"
        return _pr(p.first, _SEQ, False) + "; " + _pr(p.then, _PREFIX, tail)
    if isinstance(p, Restrict):
        s = f"new {p.binder}. " + _pr(p.body, _PAR, True)
        return s if tail else "(" + s + ")"
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Var):
        return str(p.var)
    if isinstance(p, Loc):
        return f"{p.loc}[{_pr(p.body, _PAR, True)}]"
    if isinstance(p, OutName):
        return f"{p.subject}!({_names(p.payloads)})"
    if isinstance(p, OutProc):
        return f"{p.subject}!{{{_pr(p.payload, _PAR, True)}}}"
    if isinstance(p, UpdProv):
        return f"{UPDATE_CHANNEL}!({p.loc}){{{_pr(p.payload, _PAR, True)}}}"
    if isinstance(p, Blocked):
        return f"[[{_pr(p.body, _PAR, True)}]]"
    if isinstance(p, Input):
        pat = p.pattern
        mode = " * " if p.replicated else " > "
        if isinstance(pat, NamePat):
            head = f"{pat.subject}?({_names(pat.binders)})"
        elif isinstance(pat, ProcPat):
            head = f"{pat.subject}?{{{pat.binder}}}"
        else:
            head = f"{pat.subject}?[{pat.binder}]"
        return head + mode + _pr(p.body, _PREFIX, tail)
    if isinstance(p, UpdRecv):
        return (
            f"{UPDATE_CHANNEL}?({p.loc_pattern}, {p.binder})#{{{_pr(p.log, _PAR, True)}}} * "
            + _pr(p.body, _PREFIX, tail)
        )
    raise TypeError(p)
