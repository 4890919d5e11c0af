"""Parser for the profile expression language.

Grammar::

    expr     := ['-'] term (('+' | '-') term)*
    term     := [rational '*'] atom
    atom     := 'N(' r ',' r ')' | 'Exp(' r ')' | 'Mono(' nat ',' r ',' r ')'
              | 'U(' r ',' r ')' | 'Dirac(' ident ')'
    rational := ['-'] int ['/' int]

``U(a,b)`` is sugar for ``(1/(b-a))*Mono(0,a,b)``. Float literals are
rejected so that every parsed number is exact.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .profiles import Discrete, Exponential, Gaussian, Monomial, ProfileExpr, canonicalize


class ParseError(ValueError):
    """Syntax error; ``column`` is 1-based within the parsed text."""

    def __init__(self, message: str, text: str = "", column: int = 0):
        self.message = message
        self.text = text
        self.column = column
        super().__init__(f"{message} (column {column})" if column else message)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/(),]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", text, col)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start + 1))
        pos = m.end()
    toks.append(("end", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def expect_op(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.fail(f"expected {op!r}, found {tok[1] or 'end of input'!r}", tok)

    def natural(self) -> int:
        tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            self.fail(f"expected a non-negative integer, found {tok[1] or 'end of input'!r}", tok)
        return int(tok[1])

    def rational(self) -> Fraction:
        neg = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            neg = True
        num = self.natural_checked()
        value = Fraction(num)
        if self.peek()[:2] == ("op", "/"):
            self.take()
            den = self.natural_checked()
            if den == 0:
                self.fail("zero denominator", self.toks[self.i - 1])
            value = Fraction(num, den)
        return -value if neg else value

    def natural_checked(self) -> int:
        tok = self.peek()
        if tok[0] == "num" and not tok[1].isdigit():
            self.fail(f"float literal {tok[1]!r} not allowed; write an exact rational like 1/2", tok)
        return self.natural()

    def atom(self) -> ProfileExpr:
        tok = self.take()
        if tok[0] != "name":
            self.fail(f"expected an atom, found {tok[1] or 'end of input'!r}", tok)
        name = tok[1]
        try:
            if name == "N":
                self.expect_op("(")
                mu = self.rational()
                self.expect_op(",")
                sigma = self.rational()
                self.expect_op(")")
                return ProfileExpr.atom(Gaussian(mu, sigma))
            if name == "Exp":
                self.expect_op("(")
                rate = self.rational()
                self.expect_op(")")
                return ProfileExpr.atom(Exponential(rate))
            if name == "Mono":
                self.expect_op("(")
                k = self.natural_checked()
                self.expect_op(",")
                lo = self.rational()
                self.expect_op(",")
                hi = self.rational()
                self.expect_op(")")
                return ProfileExpr.atom(Monomial(k, lo, hi))
            if name == "U":
                self.expect_op("(")
                lo = self.rational()
                self.expect_op(",")
                hi = self.rational()
                self.expect_op(")")
                if not lo < hi:
                    raise ValueError(f"empty interval [{lo}, {hi})")
                return ProfileExpr.atom(Monomial(0, lo, hi), 1 / (hi - lo))
            if name == "Dirac":
                self.expect_op("(")
                sym = self.take()
                if sym[0] != "name":
                    self.fail("expected a symbol name", sym)
                self.expect_op(")")
                return ProfileExpr.atom(Discrete(sym[1]))
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), self.text, tok[2]) from None
        self.fail(f"unknown atom {name!r}", tok)

    def term(self) -> ProfileExpr:
        if self.peek()[0] == "num":
            coef = self.rational()
            self.expect_op("*")
            return self.atom() * coef
        return self.atom()

    def expr(self) -> ProfileExpr:
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        out = self.term() * sign
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            t = self.term()
            out = out + t if op == "+" else out - t
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return out


def parse_profile(text: str) -> ProfileExpr:
    """Parse and canonicalize a profile expression."""
    if not text or not text.strip():
        raise ParseError("empty profile expression", text or "", 1)
    return canonicalize(_Parser(text).expr())


def parse_rational(text: str) -> Fraction:
    """Parse ``int`` or ``int/int`` (optionally signed); floats are rejected."""
    text = str(text)
    p = _Parser(text)
    if p.peek()[0] == "end":
        raise ParseError("empty rational", text, 1)
    value = p.rational()
    if p.peek()[0] != "end":
        p.fail(f"unexpected {p.peek()[1]!r} in rational")
    return value
