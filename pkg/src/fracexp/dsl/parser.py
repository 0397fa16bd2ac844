"""A small expression language for scalar functions of x.

Grammar (Pratt style, lowest to highest binding)::

    + -        left associative
    * /        left associative
    unary -    prefix
    ^          right associative
    atoms      numbers, x, pi, e, f(expr) for f in FUNCTIONS, ( expr )

Unary minus binds looser than ``^``, so ``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..errors import ExprSyntaxError

FUNCTIONS = ("exp", "log", "sin", "cos", "tanh", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    """Base class of the syntax tree."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Const(Expr):
    name: str

    @property
    def value(self) -> float:
        return CONSTANTS[self.name]


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr


_BINARY = {"+": (10, Add), "-": (10, Sub), "*": (20, Mul), "/": (20, Div), "^": (30, Pow)}
_UNARY_BP = 25
_ATOM_START = ("number", "'x'", "constant", "function", "'('", "'-'")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok.text != text or tok.kind == "end":
            raise ExprSyntaxError(f"unexpected {_describe(tok)}", tok.offset, (repr(text),))
        self.advance()

    def expression(self, rbp: int = 0) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY:
                break
            lbp, node = _BINARY[tok.text]
            if lbp <= rbp:
                break
            self.advance()
            # ^ is right associative: parse its right side with a lower bar.
            right = self.expression(lbp - 1 if tok.text == "^" else lbp)
            left = node(left, right)
        return left

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Num(float(tok.text))
        if tok.kind == "name":
            if tok.text == "x":
                return Var()
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expression()
                self.expect(")")
                return Call(tok.text, arg)
            raise ExprSyntaxError(f"unknown name {tok.text!r}", tok.offset, _ATOM_START)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expression(_UNARY_BP))
        if tok.kind == "op" and tok.text == "+":
            return self.expression(_UNARY_BP)
        raise ExprSyntaxError(f"unexpected {_describe(tok)}", tok.offset, _ATOM_START)


def _describe(tok: _Token) -> str:
    return "end of input" if tok.kind == "end" else repr(tok.text)


def parse(text: str) -> Expr:
    """Parse ``text`` into an :class:`Expr`; raises :class:`ExprSyntaxError`."""
    parser = _Parser(text)
    expr = parser.expression()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {_describe(tok)}", tok.offset,
                              ("operator", "end of input"))
    return expr


def as_expr(e: Expr | str | float) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, float)):
        return Num(float(e))
    return parse(e)


_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}


def to_text(e: Expr) -> str:
    """Fully parenthesised rendering that parses back to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, Call):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)} ^ {to_text(e.exponent)})"
    return f"({to_text(e.left)} {_SYMBOL[type(e)]} {to_text(e.right)})"


def contains_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num, Const)):
        return False
    if isinstance(e, (Neg, Call)):
        return contains_var(e.arg)
    if isinstance(e, Pow):
        return contains_var(e.base) or contains_var(e.exponent)
    return contains_var(e.left) or contains_var(e.right)
