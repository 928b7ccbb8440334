"""A tiny arithmetic language for user-defined two-class scores.

Expressions combine the identifiers ``ptn``, ``pfp``, ``pfn`` and ``ptp``,
numeric literals, ``+ - * / ^``, parentheses and the functions ``sqrt`` and
``log``. ``^`` binds tighter than unary minus and is right-associative, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.

A point is outside the domain of an expression when evaluation divides by
zero, takes the log of a non-positive number, the square root of a negative
one, or otherwise produces a non-finite value.

>>> from perfrank.core import Performance
>>> from perfrank.scores2c import TWO_CLASS
>>> f1 = parse_expression("2*ptp / (2*ptp + pfp + pfn)")
>>> round(f1.score()(Performance(TWO_CLASS, [0.1, 0.2, 0.3, 0.4])), 6)
0.615385
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import Score
from .scores2c import TWO_CLASS

__all__ = ["ExpressionError", "ScoreExpression", "parse_expression", "VARIABLES"]

VARIABLES = {"ptn": 0, "pfp": 1, "pfn": 2, "ptp": 3}
FUNCTIONS = ("sqrt", "log")

# opcodes of the stack program; each instruction is an (opcode, argument) pair
OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_NEG, OP_SQRT, OP_LOG = range(10)
_BINARY = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}


class ExpressionError(ValueError):
    """Syntax error with the 0-based column where it was detected."""

    def __init__(self, message: str, source: str, position: int):
        self.message = message
        self.source = source
        self.position = position
        super().__init__(f"{message} at column {position + 1}\n  {source}\n  {' ' * position}^")


_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op" or "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos == len(source):
            tokens.append(_Token("end", "", pos))
            return tokens
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()


class _Parser:
    """Recursive descent straight to postfix code."""

    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0
        self.code: list[tuple[int, float]] = []

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message: str, token: _Token | None = None):
        token = token or self.tok
        raise ExpressionError(message, self.source, token.pos)

    def expect(self, text: str):
        if self.tok.text != text or self.tok.kind != "op":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            self.fail(f"expected {text!r}, found {found}")
        self.i += 1

    def parse(self) -> list[tuple[int, float]]:
        if self.tok.kind == "end":
            self.fail("empty expression")
        self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")
        return self.code

    def expr(self):
        self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            self.term()
            self.code.append((_BINARY[op], 0.0))

    def term(self):
        self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            self.unary()
            self.code.append((_BINARY[op], 0.0))

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in "+-":
            negate = self.tok.text == "-"
            self.i += 1
            self.unary()
            if negate:
                self.code.append((OP_NEG, 0.0))
            return
        self.power()

    def power(self):
        self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            self.unary()
            self.code.append((OP_POW, 0.0))

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            self.code.append((OP_CONST, float(tok.text)))
        elif tok.kind == "name":
            self.i += 1
            if tok.text in VARIABLES:
                self.code.append((OP_VAR, float(VARIABLES[tok.text])))
            elif tok.text in FUNCTIONS:
                self.expect("(")
                self.expr()
                self.expect(")")
                self.code.append((OP_SQRT if tok.text == "sqrt" else OP_LOG, 0.0))
            else:
                known = ", ".join(list(VARIABLES) + list(FUNCTIONS))
                self.fail(f"unknown identifier {tok.text!r} (known: {known})", tok)
        elif tok.kind == "op" and tok.text == "(":
            self.i += 1
            self.expr()
            self.expect(")")
        elif tok.kind == "end":
            self.fail("unexpected end of input")
        else:
            self.fail(f"unexpected {tok.text!r}")


@njit(cache=True)
def _run_program(p, params):
    n = params.shape[0] // 2
    stack = np.empty(n)
    top = 0
    for t in range(n):
        op = int(params[2 * t])
        arg = params[2 * t + 1]
        if op == OP_CONST:
            stack[top] = arg
            top += 1
        elif op == OP_VAR:
            stack[top] = p[int(arg)]
            top += 1
        elif op == OP_NEG:
            stack[top - 1] = -stack[top - 1]
        elif op == OP_SQRT:
            v = stack[top - 1]
            if v < 0.0:
                return np.nan
            stack[top - 1] = math.sqrt(v)
        elif op == OP_LOG:
            v = stack[top - 1]
            if v <= 0.0:
                return np.nan
            stack[top - 1] = math.log(v)
        else:
            rhs = stack[top - 1]
            lhs = stack[top - 2]
            top -= 1
            if op == OP_ADD:
                v = lhs + rhs
            elif op == OP_SUB:
                v = lhs - rhs
            elif op == OP_MUL:
                v = lhs * rhs
            elif op == OP_DIV:
                if rhs == 0.0:
                    return np.nan
                v = lhs / rhs
            else:
                if lhs == 0.0 and rhs < 0.0:
                    return np.nan
                if lhs < 0.0 and rhs != math.floor(rhs):
                    return np.nan
                v = lhs ** rhs
            stack[top - 1] = v
        if not math.isfinite(stack[top - 1]):
            return np.nan
    return stack[0]


@dataclass(frozen=True)
class ScoreExpression:
    """A parsed expression compiled to a stack program."""

    source: str
    program: tuple[tuple[int, float], ...]

    def score(self, name: str | None = None) -> Score:
        params = np.array([x for instr in self.program for x in instr], dtype=np.float64)
        return Score(name or self.source, TWO_CLASS, _run_program, params)


def parse_expression(source: str) -> ScoreExpression:
    """Parse ``source``; raises :class:`ExpressionError` with the failing column."""
    return ScoreExpression(source, tuple(_Parser(source).parse()))
