"""Recursive-descent parser for operator polynomials.

Grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" INT)?
    atom    := NUMBER | NUMBER "i" | "i" | NAME | "(" expr ")"

Names are the generators ``q p x k px pk`` (``p_x``/``p_k`` also accepted)
or declared real parameters.  Products keep their written order and are
normal-ordered as they are formed.  Juxtaposition is rejected; ``/`` only
accepts scalar divisors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import sympy as sp

from ..errors import ParseError, ResourceError, UnknownSymbolError
from .expr import OperatorExpr, parameter

_TOKEN = re.compile(
    r"""(?P<space>\s+)
      | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>[ijI](?![A-Za-z0-9_]))?
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>[-+*/^()−])
    """,
    re.VERBOSE,
)
_IMAGINARY = {"i", "I", "j"}
_GENERATOR_NAMES = {"q": "q", "p": "p", "x": "x", "k": "k", "px": "p_x", "pk": "p_k",
                    "p_x": "p_x", "p_k": "p_k"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int
    imaginary: bool = False


def tokenize(text: str) -> list[Token]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "space":
            kind = "number" if m.group("number") else m.lastgroup
            if kind == "number":
                tokens.append(Token("number", m.group("number"), pos, m.group("imag") is not None))
            else:
                tok = m.group(kind)
                tokens.append(Token(kind, "-" if tok == "−" else tok, pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


def _exact(literal: str) -> sp.Rational:
    return sp.Rational(Fraction(literal))


class _Parser:
    def __init__(self, text: str, params: Iterable[str], hbar):
        self.tokens = tokenize(text)
        self.i = 0
        self.hbar = hbar
        self.params = {name: parameter(name) for name in params}
        clash = set(self.params) & (set(_GENERATOR_NAMES) | _IMAGINARY)
        if clash:
            raise ValueError(f"parameter names clash with reserved names: {sorted(clash)}")

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, what: str):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"{what}, found {found}", tok.offset)

    def parse(self) -> OperatorExpr:
        out = self.expr()
        if self.tok.kind != "end":
            self.fail("expected an operator or end of input")
        return out

    def expr(self) -> OperatorExpr:
        out = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> OperatorExpr:
        out = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                out = out * rhs
            else:
                if not rhs.is_scalar():
                    raise ParseError("divisor must be a scalar", op.offset)
                if rhs.is_zero():
                    raise ParseError("division by zero", op.offset)
                out = out / rhs.scalar_value()
        return out

    def unary(self) -> OperatorExpr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return -self.unary()
        return self.power()

    def power(self) -> OperatorExpr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            tok = self.tok
            if tok.kind != "number" or tok.imaginary or not tok.text.isdigit():
                self.fail("expected a non-negative integer exponent")
            self.advance()
            try:
                return base ** int(tok.text)
            except ResourceError as exc:
                raise ResourceError(f"{exc} (exponent at offset {tok.offset})") from None
        return base

    def atom(self) -> OperatorExpr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            value = _exact(tok.text)
            return OperatorExpr.scalar(value * sp.I if tok.imaginary else value, self.hbar)
        if tok.kind == "name":
            self.advance()
            if tok.text in _IMAGINARY:
                return OperatorExpr.scalar(sp.I, self.hbar)
            if tok.text in _GENERATOR_NAMES:
                return OperatorExpr.generator(_GENERATOR_NAMES[tok.text], self.hbar)
            if tok.text in self.params:
                return OperatorExpr.scalar(self.params[tok.text], self.hbar)
            raise UnknownSymbolError(f"unknown symbol {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            if not (self.tok.kind == "op" and self.tok.text == ")"):
                self.fail("expected ')'")
            self.advance()
            return inner
        self.fail("expected a number, name or '('")


def parse(text: str, params: Iterable[str] = ("c",), hbar=1) -> OperatorExpr:
    """Parse ``text`` into a normal-ordered expression."""
    return _Parser(text, params, hbar).parse()
