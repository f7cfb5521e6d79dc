"""Parser for the canonical textual polynomial / hbar-series form.

Grammar (whitespace insensitive):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ('^' signed_int)?
    atom   := integer | 'i' | 'hbar' | variable | '(' expr ')'

Division is only defined by invertible constants.  Negative powers are
only defined for 'hbar' and nonzero constants.
"""

from __future__ import annotations

import re

from .errors import HbarFloorError
from .hbar import HbarSeries
from .multipoly import MultiPoly
from .scalars import GaussianRational


class ParseError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


_TOKEN = re.compile(r"\s*(\d+|[A-Za-z_][A-Za-z_0-9]*|\*\*|[()+\-*/^])")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            break
        tok = m.group(1)
        tokens.append((tok, m.start(1)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text, variables, trunc, allow_hbar):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = tuple(variables)
        self.trunc = trunc
        self.allow_hbar = allow_hbar

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, tok):
        got = self.peek()
        if got != tok:
            where = self.tokens[self.pos][1] if self.pos < len(self.tokens) else None
            raise ParseError(f"expected {tok!r}, got {got!r}", where)
        self.next()

    # values are HbarSeries throughout; demotion happens at the entry points

    def const(self, value):
        return HbarSeries.const(self.variables, value, self.trunc)

    def parse(self):
        value = self.expr()
        if self.pos != len(self.tokens):
            tok, where = self.tokens[self.pos]
            raise ParseError(f"trailing input {tok!r}", where)
        return value

    def expr(self):
        value = self.term()
        while self.peek() in ("+", "-"):
            op, _ = self.next()
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.factor()
        while self.peek() in ("*", "/"):
            op, where = self.next()
            rhs = self.factor()
            if op == "*":
                value = value * rhs
            else:
                value = value * self._invert(rhs, where)
        return value

    def _invert(self, series, where):
        scalar = _as_scalar(series)
        if scalar is None or not scalar:
            raise ParseError("division only by nonzero constants", where)
        return self.const(scalar.inverse())

    def factor(self):
        if self.peek() == "-":
            self.next()
            return -self.factor()
        value = self.atom()
        while self.peek() in ("^", "**"):
            _, where = self.next()
            power = self._signed_int(where)
            value = self._pow(value, power, where)
        return value

    def _signed_int(self, where):
        sign = 1
        if self.peek() == "-":
            self.next()
            sign = -1
        tok = self.peek()
        if tok is None or not tok.isdigit():
            raise ParseError("expected integer exponent", where)
        self.next()
        return sign * int(tok)

    def _pow(self, series, power, where):
        if power >= 0:
            result = self.const(1)
            for _ in range(power):
                result = result * series
            return result
        if list(series.coeffs.keys()) == [1] and series.coeffs[1].is_constant():
            c = series.coeffs[1].constant_term()
            if power < -1:
                raise HbarFloorError("hbar exponent below -1")
            return HbarSeries(
                self.variables,
                {power: MultiPoly.const(self.variables, c.inverse())},
                self.trunc,
            )
        scalar = _as_scalar(series)
        if scalar is None or not scalar:
            raise ParseError("negative powers only for hbar or constants", where)
        return self.const(scalar.inverse() ** (-power))

    def atom(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        if tok == "(":
            self.next()
            value = self.expr()
            self.expect(")")
            return value
        tok, where = self.next()
        if tok.isdigit():
            return self.const(int(tok))
        if tok == "i":
            return self.const(GaussianRational(0, 1))
        if tok == "hbar":
            if not self.allow_hbar:
                raise ParseError("hbar not allowed in a plain polynomial", where)
            return HbarSeries.hbar(self.variables, 1, self.trunc)
        if tok in self.variables:
            return HbarSeries.from_poly(
                MultiPoly.variable(self.variables, tok), self.trunc
            )
        raise ParseError(f"unknown symbol {tok!r}", where)


def _as_scalar(series: HbarSeries):
    keys = list(series.coeffs.keys())
    if not keys:
        return GaussianRational(0)
    if keys == [0] and series.coeffs[0].is_constant():
        return series.coeffs[0].constant_term()
    return None


def parse_series(text: str, variables, trunc=8) -> HbarSeries:
    return _Parser(text, variables, trunc, allow_hbar=True).parse()


def parse_poly(text: str, variables) -> MultiPoly:
    series = _Parser(text, variables, trunc=0, allow_hbar=False).parse()
    return series.coefficient(0)
