"""Recursive-descent parser for the expression grammar.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ "^" unary ] ;              (* exponent must be an integer *)
    atom    = INTEGER | IDENT [ "(" args ")" ] | "(" expr ")" ;
    IDENT   = "phi" j | "d" k "phi" j | "V" m | "W" { "_" i } | "normsq"
            | "alpha" | "c" | "dt" | "dx" | user parameter ;

``V<m>`` may be written bare or applied as ``V<m>(normsq(phi))``; a bare
``normsq(phi)`` stands for <phi, phi>. Division is only allowed by
parameter-only expressions.
"""
from __future__ import annotations

import re

from .context import Context, JetOrderError
from .expr import Expr, SymbolicError

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))")
_JET = re.compile(r"^(?:d(\d+))?phi(\d+)$")
_V = re.compile(r"^V(\d+)$")
_W = re.compile(r"^W((?:_\d+)*)$")


class ParseError(ValueError):
    """Syntax or name error; ``position`` is the character offset in the input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DerivativeBoundError(ParseError, JetOrderError):
    """A derivative order in the text exceeds the context bound."""


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.text = text
        self.ctx = ctx
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[start]!r}", start)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", len(self.text))

    def take(self, value: str | None = None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        if tok[0] == "eof":
            raise ParseError("unexpected end of input", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1], self.peek()[2]
            t = self.unary()
            if op == "*":
                e = e * t
            else:
                try:
                    e = e / t
                except SymbolicError as exc:
                    raise ParseError(str(exc), pos) from None
        return e

    def unary(self) -> Expr:
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            u = self.unary()
            return -u if op == "-" else u
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            ex = self.unary()
            if not ex.is_coefficient() or ex.den or len(ex.num) > 1 or not ex.num.is_constant():
                raise ParseError("exponent must be an integer", pos)
            q = ex.num.leading_coefficient() if not ex.is_zero() else 0
            if not ex.is_zero() and q.q != 1:
                raise ParseError("exponent must be an integer", pos)
            k = int(q.p) if not ex.is_zero() else 0
            try:
                return base**k
            except SymbolicError as exc:
                raise ParseError(str(exc), pos) from None
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        ctx = self.ctx
        if kind == "num":
            return Expr.const(ctx, int(val))
        if val == "(":
            e = self.expr()
            self.take(")")
            return e
        if kind != "id":
            raise ParseError(f"unexpected token {val!r}", pos)
        if val == "normsq":
            self._normsq_arg()
            return self._normsq()
        if val in ctx.params:
            return Expr.symbol(ctx, val)
        m = _JET.match(val)
        if m:
            k = int(m.group(1) or 0)
            j = int(m.group(2))
            if not 1 <= j <= ctx.dim:
                raise ParseError(f"unknown identifier {val!r} (component outside 1..{ctx.dim})", pos)
            if k > ctx.max_jet:
                raise DerivativeBoundError(
                    f"derivative order {k} of {val!r} exceeds bound {ctx.max_jet}", pos
                )
            return Expr.symbol(ctx, ctx.jet_index(j, k))
        m = _V.match(val)
        if m and ctx.potential == "V":
            order = int(m.group(1))
            if order > ctx.max_pot:
                raise DerivativeBoundError(
                    f"potential derivative {val!r} exceeds bound {ctx.max_pot}", pos
                )
            if self.peek()[1] == "(":
                self.take("(")
                p2 = self.peek()[2]
                if self.take()[1] != "normsq":
                    raise ParseError("potential argument must be normsq(phi)", p2)
                self._normsq_arg()
                self.take(")")
            return Expr.symbol(ctx, f"V{order}")
        m = _W.match(val)
        if m and ctx.potential == "W":
            idx = tuple(sorted(int(x) for x in m.group(1).split("_")[1:]))
            if any(not 1 <= i <= ctx.dim for i in idx):
                raise ParseError(f"unknown identifier {val!r}", pos)
            if len(idx) > ctx.max_pot:
                raise DerivativeBoundError(f"potential derivative {val!r} exceeds bound", pos)
            return Expr.symbol(ctx, "W_" + "_".join(map(str, idx)) if idx else "W")
        if val in ctx.extra:
            return Expr.symbol(ctx, val)
        raise ParseError(f"unknown identifier {val!r}", pos)

    def _normsq_arg(self):
        self.take("(")
        p = self.peek()[2]
        if self.take()[1] != "phi":
            raise ParseError("normsq expects the argument phi", p)
        self.take(")")

    def _normsq(self) -> Expr:
        ctx = self.ctx
        out = Expr.zero(ctx)
        for j in range(1, ctx.dim + 1):
            p = Expr.symbol(ctx, ctx.jet_index(j, 0))
            out = out + p * p
        return out


def parse(text: str, ctx: Context) -> Expr:
    """Parse ``text`` into a normalized :class:`Expr` of context ``ctx``."""
    return _Parser(text, ctx).parse()


def normalize(e: Expr) -> Expr:
    """Return the canonical form (expressions are kept normalized on construction)."""
    return Expr(e.ctx, e.num, e.den)
