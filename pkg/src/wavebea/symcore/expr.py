"""Exact expressions over jet variables with rational-function coefficients.

An :class:`Expr` is ``num / den`` where ``num`` is a polynomial over Q in
parameters, jet variables and potential derivatives, and ``den`` is a
product of irreducible parameter-only polynomials kept in factored form.
Construction always cancels common factors, so two equal expressions have
identical ``(num, den)``: that pair is the canonical normal form.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

import flint
from flint.utils.flint_exceptions import DomainError

from .context import Context, JetOrderError, JetVar, Param

_Number = (int, Fraction, flint.fmpq, flint.fmpz)


class SymbolicError(ValueError):
    """Raised for operations outside the coefficient field (e.g. division by zero)."""


def _to_fmpq(x) -> flint.fmpq:
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return flint.fmpq(x)


def primitive_part(f):
    """Split ``f = content * prim`` with ``prim`` integral, primitive, positive leading coefficient."""
    coeffs = f.coeffs()
    den = 1
    num = 0
    for q in coeffs:
        den = lcm(den, int(q.q))
    for q in coeffs:
        num = gcd(num, int(q.p * (den // int(q.q))))
    content = flint.fmpq(num, den)
    if coeffs[0] < 0:
        content = -content
    return content, f / content


def _factor_den(poly) -> tuple[flint.fmpq, dict]:
    """Factor a parameter-only polynomial into (content, {prim_factor_str: (factor, exp)})."""
    content, facs = poly.factor()
    content = flint.fmpq(content)
    out: dict = {}
    for f, e in facs:
        k, fp = primitive_part(f)
        content *= k**e
        key = str(fp)
        if key in out:
            out[key] = (fp, out[key][1] + e)
        else:
            out[key] = (fp, e)
    return content, out


def _sorted_den(d: dict) -> tuple:
    return tuple(d[k] for k in sorted(d))


def _den_dict(den: tuple) -> dict:
    return {str(f): (f, e) for f, e in den}


class Expr:
    """Immutable normalized expression; see module docstring."""

    __slots__ = ("ctx", "num", "den", "_hash", "_denpoly")

    def __init__(self, ctx: Context, num, den: tuple = (), _normalized: bool = False):
        self.ctx = ctx
        if not _normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None
        self._denpoly = None

    # -- constructors ------------------------------------------------------
    @classmethod
    def const(cls, ctx: Context, value) -> "Expr":
        return cls(ctx, ctx.ring.constant(_to_fmpq(value)), (), True)

    @classmethod
    def symbol(cls, ctx: Context, v) -> "Expr":
        return cls(ctx, ctx.gens[ctx.var_index(v)], (), True)

    @classmethod
    def zero(cls, ctx: Context) -> "Expr":
        return cls(ctx, ctx._zero, (), True)

    # -- basic predicates --------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_coefficient(self) -> bool:
        """True if the expression lies in the coefficient field (parameters only)."""
        if self.num.is_zero():
            return True
        degs = self.num.degrees()
        return all(d == 0 for d in degs[self.ctx.nparams:])

    def den_poly(self):
        if self._denpoly is None:
            p = self.ctx._one
            for f, e in self.den:
                p = p * f**e
            self._denpoly = p
        return self._denpoly

    def used_indices(self) -> list[int]:
        if self.num.is_zero():
            return []
        return [i for i, d in enumerate(self.num.degrees()) if d > 0]

    def max_jet_order(self) -> int:
        """Highest jet order occurring, -1 if no jet variable occurs."""
        m = -1
        for i in self.used_indices():
            k = self.ctx.kinds[i]
            if k[0] == "jet":
                m = max(m, k[2])
        return m

    def depends_on(self, v) -> bool:
        i = self.ctx.var_index(v)
        return not self.num.is_zero() and self.num.degrees()[i] > 0

    # -- comparison --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, _Number):
            other = Expr.const(self.ctx, other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.num == other.num and len(self.den) == len(other.den) and all(
            e1 == e2 and f1 == f2 for (f1, e1), (f2, e2) in zip(self.den, other.den)
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((str(self.num), tuple((str(f), e) for f, e in self.den)))
        return self._hash

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.ctx is not self.ctx:
                raise SymbolicError("expressions belong to different contexts")
            return other
        if isinstance(other, _Number):
            return Expr.const(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            return Expr(self.ctx, self.num + other.num, self.den)
        d1, d2 = _den_dict(self.den), _den_dict(other.den)
        n1, n2 = self.num, other.num
        merged = {}
        for key in set(d1) | set(d2):
            f, e1 = d1.get(key, (None, 0))
            g, e2 = d2.get(key, (None, 0))
            f = f if f is not None else g
            e = max(e1, e2)
            if e > e1:
                n1 = n1 * f ** (e - e1)
            if e > e2:
                n2 = n2 * f ** (e - e2)
            merged[key] = (f, e)
        return Expr(self.ctx, n1 + n2, _sorted_den(merged))

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(self.ctx, -self.num, self.den, True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, _Number):
            if other == 0:
                return Expr.zero(self.ctx)
            return Expr(self.ctx, self.num * _to_fmpq(other), self.den, True)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return Expr.zero(self.ctx)
        if not self.den and not other.den:
            return Expr(self.ctx, self.num * other.num, (), True)
        d = _den_dict(self.den)
        for f, e in other.den:
            key = str(f)
            d[key] = (f, d[key][1] + e) if key in d else (f, e)
        return Expr(self.ctx, self.num * other.num, _sorted_den(d))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _Number):
            if other == 0:
                raise SymbolicError("division by zero")
            return Expr(self.ctx, self.num / _to_fmpq(other), self.den, True)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def inverse(self) -> "Expr":
        """Multiplicative inverse; only defined inside the coefficient field."""
        if self.num.is_zero():
            raise SymbolicError("division by an identically zero rational function")
        if not self.is_coefficient():
            raise SymbolicError("division by an expression that depends on jet variables")
        content, facs = _factor_den(self.num)
        num = self.den_poly() / content
        return Expr(self.ctx, num, _sorted_den(facs))

    def __pow__(self, k: int) -> "Expr":
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return Expr.const(self.ctx, 1)
        return Expr(self.ctx, self.num**k, tuple((f, e * k) for f, e in self.den), True)

    # -- calculus ------------------------------------------------------------
    def _with_num(self, num) -> "Expr":
        return Expr(self.ctx, num, self.den)

    def raw_diff(self, i: int) -> "Expr":
        """Partial derivative w.r.t. generator ``i`` treating all others as independent."""
        if self.ctx.is_param_index(i):
            return self._param_diff(i)
        if self.num.is_zero() or self.num.degrees()[i] == 0:
            return Expr.zero(self.ctx)
        return self._with_num(self.num.derivative(i))

    def _param_diff(self, i: int) -> "Expr":
        num_d = self.num.derivative(i)
        dp = self.den_poly()
        dp_d = dp.derivative(i)
        if dp_d.is_zero():
            return self._with_num(num_d)
        num = num_d * dp - self.num * dp_d
        return Expr(self.ctx, num, tuple((f, 2 * e) for f, e in self.den))

    def pdiff(self, v) -> "Expr":
        """Partial derivative; d/dphi_j acts through the potential by the chain rule."""
        ctx = self.ctx
        i = ctx.var_index(v)
        kind = ctx.kinds[i]
        out = self.raw_diff(i)
        if kind[0] == "jet" and kind[2] == 0 and ctx.potential is not None and not self.num.is_zero():
            degs = self.num.degrees()
            for vi, fac in ctx.chain_terms(kind[1]):
                if degs[vi] == 0:
                    continue
                if fac is JetOrderError:
                    raise JetOrderError("potential derivative order exceeds context bound")
                out = out + Expr(ctx, self.num.derivative(vi) * fac, self.den)
        return out

    def total_derivative(self, times: int = 1) -> "Expr":
        """d/dxi applied ``times`` times (sum over generators of d(e)/dv * D(v))."""
        e = self
        for _ in range(times):
            e = e._total_derivative_once()
        return e

    def _total_derivative_once(self) -> "Expr":
        ctx = self.ctx
        if self.num.is_zero():
            return self
        degs = self.num.degrees()
        acc = ctx._zero
        for i, d in enumerate(degs):
            if d == 0 or ctx.is_param_index(i):
                continue
            di = ctx.total_derivative_of(i)
            if di is None:
                continue
            if di is JetOrderError:
                raise JetOrderError(
                    f"total derivative of {ctx.names[i]} exceeds context bound"
                )
            acc = acc + self.num.derivative(i) * di
        return Expr(ctx, acc, self.den)

    # -- substitution and inspection -------------------------------------
    def subs(self, mapping: dict) -> "Expr":
        """Simultaneous substitution ``{var: Expr | number}``."""
        from .series import HSeries, compose

        # h is an ordinary symbol here, so nothing may be truncated
        big = 10**9
        rep = {}
        for k, v in mapping.items():
            v = self._coerce(v)
            rep[self.ctx.var_index(k)] = HSeries({0: v}, big, self.ctx)
        out = compose(HSeries({0: self}, big, self.ctx), rep)
        hh = Expr.symbol(self.ctx, self.ctx.h_index)
        tot = Expr.zero(self.ctx)
        for k, t in out.terms.items():
            tot = tot + (t * hh**k if k else t)
        return tot

    def coefficients(self) -> dict[tuple, "Expr"]:
        """Split into ``{monomial exponents over non-parameter symbols: coefficient}``."""
        ctx = self.ctx
        n = ctx.nparams
        groups: dict[tuple, dict] = {}
        for exps, c in self.num.to_dict().items():
            groups.setdefault(tuple(exps[n:]), {})[tuple(exps[:n]) + (0,) * (len(exps) - n)] = c
        return {
            mono: Expr(ctx, ctx.ring.from_dict(terms), self.den)
            for mono, terms in groups.items()
        }

    def monomial(self, mono: tuple) -> "Expr":
        n = self.ctx.nparams
        return Expr(self.ctx, self.ctx.ring.from_dict({(0,) * n + tuple(mono): 1}), (), True)

    def __repr__(self) -> str:
        from .printing import to_text

        return f"Expr({to_text(self)})"

    def __str__(self) -> str:
        from .printing import to_text

        return to_text(self)


def _normalize(num, den):
    if num.is_zero():
        return num, ()
    if not den:
        return num, ()
    out = []
    for f, e in den:
        k = 0
        while k < e:
            try:
                num = num / f
            except DomainError:
                break
            k += 1
        if e - k > 0:
            out.append((f, e - k))
    return num, tuple(out)


def var(ctx: Context, v) -> Expr:
    return Expr.symbol(ctx, v)


def const(ctx: Context, value) -> Expr:
    return Expr.const(ctx, value)


def jet(ctx: Context, component: int, order: int = 0) -> Expr:
    return Expr.symbol(ctx, JetVar(component, order))


def param(ctx: Context, name: str) -> Expr:
    return Expr.symbol(ctx, Param(name))
