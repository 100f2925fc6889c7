"""Recursive-descent parser for family-spec documents.

A document is a ``q=<int>`` line followed by one constraint per line (or per
``;``-separated segment).  Each constraint compares two integer-coefficient
polynomials in ``x1..xq`` and ``y1..yq``.  Polynomials come back as dicts
mapping a combined exponent tuple of length ``2q`` (x exponents first) to an
integer coefficient.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

Poly = dict  # tuple[int, ...] -> int

OPERATORS = (">=", "<=", "==", ">", "<")


class FamilySyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RawConstraint:
    lhs: Poly
    op: str
    rhs: Poly
    line: int


_TOKEN = re.compile(r"\s*(?:(\d+)|([xy])(\d+)|(\*\*|>=|<=|==|[-+*^()<>]))")


def _clean(poly: Poly) -> Poly:
    return {k: v for k, v in poly.items() if v != 0}


def poly_add(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sign * v
    return _clean(out)


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(i + j for i, j in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return _clean(out)


def poly_pow(a: Poly, e: int, nvars: int) -> Poly:
    out: Poly = {(0,) * nvars: 1}
    for _ in range(e):
        out = poly_mul(out, a)
    return out


class _Parser:
    def __init__(self, text: str, q: int, line: int, col0: int):
        self.q = q
        self.nvars = 2 * q
        self.line = line
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise FamilySyntaxError(f"unexpected character {text[bad]!r}", line, col0 + bad + 1)
            start = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(4)
            self.tokens.append((m.groups(), col0 + start + 1))
            pos = m.end()
        self.i = 0
        self.end_col = col0 + len(text) + 1

    def error(self, message: str):
        col = self.tokens[self.i][1] if self.i < len(self.tokens) else self.end_col
        raise FamilySyntaxError(message, self.line, col)

    def peek(self):
        if self.i < len(self.tokens):
            g = self.tokens[self.i][0]
            return g[3] if g[3] else ("num" if g[0] else "var")
        return None

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def constraint(self) -> tuple[Poly, str, Poly]:
        lhs = self.expr()
        op = self.peek()
        if op not in OPERATORS:
            self.error("expected a comparison operator (>=, >, <=, <, ==)")
        self.take()
        rhs = self.expr()
        if self.peek() is not None:
            self.error("unexpected token after right-hand side")
        return lhs, op, rhs

    def expr(self) -> Poly:
        sign = 1
        if self.peek() in ("+", "-"):
            sign = -1 if self.take()[0][3] == "-" else 1
        acc = poly_mul({(0,) * self.nvars: sign}, self.term())
        while self.peek() in ("+", "-"):
            s = -1 if self.take()[0][3] == "-" else 1
            acc = poly_add(acc, self.term(), s)
        return acc

    def term(self) -> Poly:
        acc = self.power()
        while self.peek() == "*":
            self.take()
            acc = poly_mul(acc, self.power())
        return acc

    def power(self) -> Poly:
        base = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            if self.peek() != "num":
                self.error("exponent must be a non-negative integer literal")
            e = int(self.take()[0][0])
            return poly_pow(base, e, self.nvars)
        return base

    def atom(self) -> Poly:
        kind = self.peek()
        if kind == "num":
            return _clean({(0,) * self.nvars: int(self.take()[0][0])})
        if kind == "var":
            (_, letter, idx, _), col = self.take()
            k = int(idx)
            if not 1 <= k <= self.q:
                raise FamilySyntaxError(f"variable {letter}{idx} out of range 1..{self.q}", self.line, col)
            exps = [0] * self.nvars
            exps[(k - 1) if letter == "x" else (self.q + k - 1)] = 1
            return {tuple(exps): 1}
        if kind == "(":
            self.take()
            inner = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.take()
            return inner
        if kind == "-":
            self.take()
            return poly_mul({(0,) * self.nvars: -1}, self.atom())
        self.error("expected a number, variable or '('")


_HEADER = re.compile(r"^\s*q\s*=\s*(\d+)\s*$")


def parse_document(text: str) -> tuple[int, list[RawConstraint]]:
    """Split a document into ``q`` and its raw constraints."""
    segments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        col = 0
        for piece in body.split(";"):
            if piece.strip():
                segments.append((lineno, col, piece))
            col += len(piece) + 1
    if not segments:
        raise FamilySyntaxError("empty family document", 1, 1)
    lineno, col, first = segments[0]
    m = _HEADER.match(first)
    if m is None:
        raise FamilySyntaxError("first statement must be 'q=<int>'", lineno, col + 1)
    q = int(m.group(1))
    if q < 1:
        raise FamilySyntaxError("q must be positive", lineno, col + 1)
    constraints = []
    for lineno, col, piece in segments[1:]:
        lhs, op, rhs = _Parser(piece, q, lineno, col).constraint()
        constraints.append(RawConstraint(lhs, op, rhs, lineno))
    if not constraints:
        raise FamilySyntaxError("no constraints given", lineno, 1)
    return q, constraints
