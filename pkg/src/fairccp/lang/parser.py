"""Recursive-descent parser for ``.fcc`` program files.

::

    file     := header condef* decl* "init" agent [";"]
    header   := "semiring" NAME ";" "domain" "{" value ("," value)* "}" ";"
                "vars" "{" IDENT ("," IDENT)* "}" ";"
    condef   := "constraint" IDENT "on" "(" IDENT ("," IDENT)* ")" ["default" level]
                "{" [row ("," row)*] "}" ";"
    row      := "(" value* ")" "->" level
    decl     := "proc" IDENT "(" IDENT ("," IDENT)* ")" "=" agent ";"
    agent    := seq ("||" seq)*
    seq      := "success" | "stop" | "fail"
              | "tell" "(" IDENT ")" arrow seq
              | askexp ("+" askexp)*
              | "par" "(" agent ("," agent)* ")"
              | "exists" IDENT "." seq
              | IDENT "(" [IDENT ("," IDENT)*] ")"
              | "(" agent ")"
    askexp   := "ask" "(" IDENT ")" arrow seq
    arrow    := "->" | "->[" level "]" | "->{" IDENT "}"

``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Optional

from ..constraints import ConstraintError, ConstraintSystem, SoftConstraint
from ..semiring import SemiringError, get_semiring
from .ast import (
    Agent, Ask, Call, Choice, ConstraintRef, Cut, Declaration, Exists, Fail,
    FairPar, Level, Par, Program, Success, Tell, Threshold, free_variables,
)

KEYWORDS = frozenset(
    "semiring domain vars constraint on default proc init success stop fail "
    "tell ask par exists".split()
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<larrow>->\[)
  | (?P<carrow>->\{)
  | (?P<arrow>->)
  | (?P<bar>\|\|)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){}\[\],;.+=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tok_kind = m.group() if kind == "punct" else kind
            tokens.append(Token(tok_kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.system: Optional[ConstraintSystem] = None
        self.constraints: dict[str, SoftConstraint] = {}
        self.calls: list[tuple[Call, Token]] = []

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, word: str) -> bool:
        return self.at("ident", word)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        if not self.at(kind):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {what or kind!r}, found {shown!r}")
        return self.next()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {word!r}, found {shown!r}")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        t = self.expect("ident", what)
        if t.text in KEYWORDS:
            raise self.error(f"{t.text!r} is a reserved word", t)
        return t

    def value(self) -> Token:
        if self.at("ident") or self.at("num"):
            return self.next()
        raise self.error(f"expected a domain value, found {self.tok.text!r}")

    def level(self) -> Any:
        t = self.tok
        if not (self.at("ident") or self.at("num")):
            raise self.error(f"expected a level, found {t.text!r}")
        self.next()
        s = self.system.semiring
        try:
            return s.check(s.parse_level(t.text))
        except (SemiringError, ValueError, ZeroDivisionError) as exc:
            raise self.error(f"bad {s.name} level {t.text!r}", t) from exc

    def comma_list(self, item, close: str, allow_empty: bool = True, what: str = "list") -> list:
        out = []
        if self.at(close):
            if not allow_empty:
                raise self.error(f"empty {what}")
            return out
        out.append(item())
        while self.at(","):
            self.next()
            out.append(item())
        return out

    # -- file ----------------------------------------------------------------

    def program(self) -> Program:
        self.expect_kw("semiring")
        name_tok = self.expect("ident", "semiring name")
        try:
            semiring = get_semiring(name_tok.text)
        except SemiringError as exc:
            raise self.error(str(exc), name_tok) from None
        self.expect(";")
        self.expect_kw("domain")
        self.expect("{")
        domain = [t.text for t in self.comma_list(self.value, "}", allow_empty=False, what="domain")]
        self.expect("}")
        self.expect(";")
        self.expect_kw("vars")
        self.expect("{")
        var_toks = self.comma_list(self.ident, "}")
        self.expect("}")
        self.expect(";")
        try:
            self.system = ConstraintSystem(semiring, tuple(domain), tuple(t.text for t in var_toks))
        except ConstraintError as exc:
            raise self.error(str(exc), name_tok) from None

        while self.at_kw("constraint"):
            self.condef()
        decls: dict[str, Declaration] = {}
        while self.at_kw("proc"):
            start = self.tok
            d = self.decl()
            if d.name in decls:
                raise self.error(f"procedure {d.name!r} declared twice", start)
            decls[d.name] = d
        self.expect_kw("init")
        main = self.agent()
        if self.at(";"):
            self.next()
        if not self.at("eof"):
            raise self.error(f"unexpected {self.tok.text!r} after the initial agent")

        for call, tok in self.calls:
            d = decls.get(call.name)
            if d is None:
                raise self.error(f"unknown procedure {call.name!r}", tok)
            if len(d.params) != len(call.args):
                raise self.error(
                    f"{call.name} takes {len(d.params)} argument(s), got {len(call.args)}", tok
                )
        for d in decls.values():
            extra = free_variables(d.body) - set(d.params)
            if extra:
                raise ParseError(
                    f"free variable(s) {sorted(extra)} in body of {d.name!r} are not parameters"
                )
        unknown = free_variables(main) - set(self.system.variables)
        if unknown:
            raise ParseError(f"undeclared variable(s) {sorted(unknown)} in init agent")
        return Program(self.system, dict(self.constraints), decls, main)

    def condef(self) -> None:
        self.expect_kw("constraint")
        name = self.ident("constraint name")
        if name.text in self.constraints:
            raise self.error(f"constraint {name.text!r} declared twice", name)
        self.expect_kw("on")
        self.expect("(")
        scope_toks = self.comma_list(self.ident, ")")
        self.expect(")")
        for t in scope_toks:
            if t.text not in self.system.variables:
                raise self.error(f"undeclared variable {t.text!r}", t)
        default = None
        if self.at_kw("default"):
            self.next()
            default = self.level()
        self.expect("{")
        rows: dict[tuple, Any] = {}

        def row() -> None:
            self.expect("(")
            start = self.tok
            vals = []
            while not self.at(")"):
                v = self.value()
                if v.text not in self.system.domain:
                    raise self.error(f"{v.text!r} is not in the domain", v)
                vals.append(v.text)
            self.expect(")")
            if len(vals) != len(scope_toks):
                raise self.error(
                    f"row has {len(vals)} value(s), scope has {len(scope_toks)}", start
                )
            self.expect("arrow", "->")
            if tuple(vals) in rows:
                raise self.error(f"duplicate row {tuple(vals)}", start)
            rows[tuple(vals)] = self.level()

        self.comma_list(row, "}")
        self.expect("}")
        self.expect(";")
        try:
            c = SoftConstraint.from_rows(
                self.system, [t.text for t in scope_toks], rows, default
            )
        except ConstraintError as exc:
            raise self.error(f"constraint {name.text}: {exc}", name) from None
        self.constraints[name.text] = c

    def decl(self) -> Declaration:
        self.expect_kw("proc")
        name = self.ident("procedure name")
        self.expect("(")
        params = [t.text for t in self.comma_list(self.ident, ")")]
        self.expect(")")
        if len(set(params)) != len(params):
            raise self.error(f"repeated parameter in {name.text}", name)
        self.expect("=")
        body = self.agent()
        self.expect(";")
        return Declaration(name.text, tuple(params), body)

    # -- agents --------------------------------------------------------------

    def agent(self) -> Agent:
        left = self.seq()
        while self.at("bar"):
            self.next()
            left = Par(left, self.seq())
        return left

    def ref(self) -> ConstraintRef:
        t = self.ident("constraint name")
        c = self.constraints.get(t.text)
        if c is None:
            raise self.error(f"unknown constraint {t.text!r}", t)
        return ConstraintRef(t.text, c)

    def arrow(self) -> Threshold:
        if self.at("arrow"):
            self.next()
            return None
        if self.at("larrow"):
            self.next()
            lv = self.level()
            self.expect("]")
            return Level(lv)
        if self.at("carrow"):
            self.next()
            phi = self.ref()
            self.expect("}")
            return Cut(phi)
        raise self.error(f"expected '->', found {self.tok.text!r}")

    def action(self, word: str) -> tuple[ConstraintRef, Threshold, Agent]:
        self.expect_kw(word)
        self.expect("(")
        r = self.ref()
        self.expect(")")
        th = self.arrow()
        return r, th, self.seq()

    def seq(self) -> Agent:
        t = self.tok
        if t.kind == "(":
            self.next()
            a = self.agent()
            self.expect(")")
            return a
        if t.kind != "ident":
            raise self.error(f"expected an agent, found {t.text or 'end of input'!r}")
        word = t.text
        if word in ("success", "stop"):
            self.next()
            return Success()
        if word == "fail":
            self.next()
            return Fail()
        if word == "tell":
            return Tell(*self.action("tell"))
        if word == "ask":
            branches = [Ask(*self.action("ask"))]
            while self.at("+"):
                self.next()
                if not self.at_kw("ask"):
                    raise self.error("expected 'ask' after '+'")
                branches.append(Ask(*self.action("ask")))
            return Choice(tuple(branches))
        if word == "par":
            self.next()
            self.expect("(")
            agents = self.comma_list(self.agent, ")", allow_empty=False, what="par(...)")
            self.expect(")")
            return FairPar(tuple(agents))
        if word == "exists":
            self.next()
            var = self.ident("variable")
            if var.text not in self.system.variables:
                raise self.error(f"undeclared variable {var.text!r}", var)
            self.expect(".")
            return Exists(var.text, self.seq())
        name = self.ident("procedure name")
        self.expect("(")
        args = self.comma_list(self.ident, ")")
        self.expect(")")
        call = Call(name.text, tuple(a.text for a in args))
        self.calls.append((call, name))
        return call


def parse(text: str) -> Program:
    """Parse program source into a fully resolved :class:`Program`."""
    return _Parser(text).program()


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
