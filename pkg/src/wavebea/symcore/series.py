"""Truncated formal power series in the grading variable h."""
from __future__ import annotations

from .context import Context, JetOrderError
from .expr import Expr, SymbolicError, _Number, _den_dict, _sorted_den, _to_fmpq


class TruncationError(ValueError):
    """Requested a coefficient above the truncation order."""


def split_var(poly, name: str, maxdeg: int | None = None) -> dict:
    """Split ``poly`` by powers of generator ``name``; coefficients no longer contain it."""
    ring = poly.context()
    x = ring.gen(ring.variable_to_index(name))
    out = {}
    k = 0
    q = poly
    while not q.is_zero():
        if maxdeg is not None and k > maxdeg:
            break
        c0 = q.subs({name: 0})
        if not c0.is_zero():
            out[k] = c0
        q = (q - c0) / x
        k += 1
    return out


class HSeries:
    """Truncated series ``sum_k h^k terms[k]`` with all powers above ``trunc`` unknown.

    Parameters
    ----------
    terms
        Map from h-power to :class:`Expr`; zero coefficients are dropped and
        powers above ``trunc`` are discarded.
    trunc
        Truncation order ``N``.
    ctx
        The owning context (inferred from ``terms`` when non-empty).
    """

    __slots__ = ("terms", "trunc", "ctx")

    def __init__(self, terms: dict, trunc: int, ctx: Context | None = None):
        if ctx is None:
            ctx = next((v.ctx for v in terms.values() if isinstance(v, Expr)), None)
            if ctx is None:
                raise ValueError("context required for a series without expressions")
        self.ctx = ctx
        self.trunc = trunc
        clean = {}
        for k, v in terms.items():
            if k < 0:
                raise ValueError("negative h-powers are not supported")
            if k > trunc:
                continue
            if isinstance(v, _Number):
                v = Expr.const(ctx, v)
            if not v.is_zero():
                clean[k] = v
        self.terms = dict(sorted(clean.items()))

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_expr(cls, e: Expr, trunc: int) -> "HSeries":
        return cls({0: e}, trunc, e.ctx)

    @classmethod
    def zero(cls, ctx: Context, trunc: int) -> "HSeries":
        return cls({}, trunc, ctx)

    # -- access ----------------------------------------------------------------
    def coeff(self, k: int) -> Expr:
        if k > self.trunc:
            raise TruncationError(f"h^{k} lies above truncation order {self.trunc}")
        return self.terms.get(k, Expr.zero(self.ctx))

    def __getitem__(self, k: int) -> Expr:
        return self.coeff(k)

    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> int | None:
        return next(iter(self.terms), None)

    def truncate(self, n: int) -> "HSeries":
        return HSeries(self.terms, min(n, self.trunc), self.ctx)

    def shift(self, k: int) -> "HSeries":
        """Multiply by ``h^k``."""
        return HSeries({p + k: v for p, v in self.terms.items()}, self.trunc + k, self.ctx)

    def map(self, f) -> "HSeries":
        return HSeries({k: f(v) for k, v in self.terms.items()}, self.trunc, self.ctx)

    def equal_to(self, other: "HSeries", order: int | None = None) -> bool:
        n = min(self.trunc, other.trunc) if order is None else order
        return all(self.coeff(k) == other.coeff(k) for k in range(n + 1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, HSeries):
            return NotImplemented
        return self.trunc == other.trunc and self.terms == other.terms

    def __hash__(self):
        return hash((self.trunc, tuple(self.terms.items())))

    def __repr__(self) -> str:
        body = " + ".join(f"h^{k}*({v})" for k, v in self.terms.items()) or "0"
        return f"HSeries({body}, trunc={self.trunc})"

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "HSeries":
        if isinstance(other, HSeries):
            return other
        if isinstance(other, Expr) or isinstance(other, _Number):
            e = other if isinstance(other, Expr) else Expr.const(self.ctx, other)
            return HSeries({0: e}, self.trunc, self.ctx)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = min(self.trunc, other.trunc)
        terms = {k: v for k, v in self.terms.items() if k <= n}
        for k, v in other.terms.items():
            if k > n:
                continue
            terms[k] = terms[k] + v if k in terms else v
        return HSeries(terms, n, self.ctx)

    __radd__ = __add__

    def __neg__(self):
        return HSeries({k: -v for k, v in self.terms.items()}, self.trunc, self.ctx)

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
        if isinstance(other, (Expr,) + _Number):
            return HSeries({k: v * other for k, v in self.terms.items()}, self.trunc, self.ctx)
        if not isinstance(other, HSeries):
            return NotImplemented
        va = self.valuation()
        vb = other.valuation()
        # a known to order Na and b of valuation vb: product known to Na + vb
        n = min(
            self.trunc + (vb if vb is not None else other.trunc + 1),
            other.trunc + (va if va is not None else self.trunc + 1),
        )
        terms: dict = {}
        for i, x in self.terms.items():
            for j, y in other.terms.items():
                k = i + j
                if k > n:
                    continue
                p = x * y
                terms[k] = terms[k] + p if k in terms else p
        return HSeries(terms, n, self.ctx)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Expr,) + _Number):
            return HSeries({k: v / other for k, v in self.terms.items()}, self.trunc, self.ctx)
        return NotImplemented

    def __pow__(self, k: int) -> "HSeries":
        if not isinstance(k, int) or k < 0:
            raise TypeError("only non-negative integer powers")
        out = HSeries({0: Expr.const(self.ctx, 1)}, self.trunc, self.ctx)
        for _ in range(k):
            out = out * self
        return out

    # -- calculus ------------------------------------------------------------
    def pdiff(self, v) -> "HSeries":
        return self.map(lambda e: e.pdiff(v))

    def total_derivative(self, times: int = 1) -> "HSeries":
        return self.map(lambda e: e.total_derivative(times))

    def max_jet_order(self) -> int:
        return max((v.max_jet_order() for v in self.terms.values()), default=-1)

    def substitute(self, var, replacement) -> "HSeries":
        """Replace a single symbol by an :class:`HSeries` (or Expr)."""
        i = self.ctx.var_index(var)
        if self.ctx.kinds[i][0] != "jet":
            raise SymbolicError(f"substitution target {self.ctx.names[i]} is not a jet variable")
        return compose(self, {i: self._coerce(replacement)})


def _as_series(ctx, v, trunc):
    if isinstance(v, HSeries):
        return v
    if isinstance(v, _Number):
        v = Expr.const(ctx, v)
    return HSeries({0: v}, trunc, ctx)


def compose(s: HSeries, rep: dict) -> HSeries:
    """Simultaneously substitute ``{var: HSeries}`` into ``s`` and re-truncate.

    Parameter replacements must be h-free polynomials in the parameters.
    """
    ctx = s.ctx
    ring = ctx.ring
    big = 10**9
    rep = {ctx.var_index(k): _as_series(ctx, v, big) for k, v in rep.items()}
    if not rep or s.is_zero():
        return s
    # common factored denominator of all replacement coefficients
    dmax: dict = {}
    for r in rep.values():
        for e in r.terms.values():
            for f, k in e.den:
                key = str(f)
                if key not in dmax or dmax[key][1] < k:
                    dmax[key] = (f, k)
    common = _sorted_den(dmax)
    images = list(ctx.gens)
    u = ctx.gens[ctx.aux_index]
    h = ctx.gens[ctx.h_index]
    param_rep = False
    for i, r in rep.items():
        if ctx.is_param_index(i):
            param_rep = True
            if any(k > 0 for k in r.terms) or any(e.den for e in r.terms.values()):
                raise SymbolicError("parameter replacements must be h-free polynomials")
        poly = ctx._zero
        for k, e in r.terms.items():
            mult = ctx._one
            ed = _den_dict(e.den)
            for key, (f, kk) in dmax.items():
                diff = kk - ed.get(key, (None, 0))[1]
                if diff:
                    mult = mult * f**diff
            poly = poly + e.num * mult * h**k
        images[i] = poly * u if common else poly

    used = set()
    for e in s.terms.values():
        used.update(e.used_indices())
    new_trunc = s.trunc
    for j, e in s.terms.items():
        for i in e.used_indices():
            if i in rep:
                new_trunc = min(new_trunc, j + rep[i].trunc)

    out: dict = {}
    den_cache: dict = {}
    for j, e in s.terms.items():
        if j > new_trunc:
            continue
        if not any(i in rep for i in e.used_indices()) and not (param_rep and e.den):
            out[j] = out[j] + e if j in out else e
            continue
        q = e.num.compose(*images)
        if param_rep and e.den:
            key = tuple((str(f), k) for f, k in e.den)
            if key not in den_cache:
                dp = ctx._one
                for f, k in e.den:
                    dp = dp * f.compose(*images) ** k
                if dp.is_zero():
                    raise SymbolicError("substitution makes a denominator vanish")
                den_cache[key] = Expr(ctx, dp, (), True).inverse()
            base = den_cache[key]
        else:
            base = Expr(ctx, ctx._one, e.den, True)
        hparts = split_var(q, "h", new_trunc - j)
        for k, part in hparts.items():
            if common:
                for m, c in split_var(part, "_u").items():
                    term = Expr(ctx, c, tuple((f, kk * m) for f, kk in common) if m else ()) * base
                    out[j + k] = out[j + k] + term if (j + k) in out else term
            else:
                term = Expr(ctx, part, ()) * base
                out[j + k] = out[j + k] + term if (j + k) in out else term
    return HSeries(out, new_trunc, ctx)


def series_arith(a: HSeries, b: HSeries, op: str) -> HSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


__all__ = ["HSeries", "TruncationError", "compose", "homogeneous_parts", "series_arith", "split_var", "JetOrderError"]


def homogeneous_parts(e: Expr, indices) -> dict:
    """Split ``e`` by total degree in the generators ``indices`` -> {degree: Expr}."""
    ctx = e.ctx
    if e.is_zero():
        return {}
    h = ctx.gens[ctx.h_index]
    images = list(ctx.gens)
    for i in indices:
        images[i] = images[i] * h
    q = e.num.compose(*images)
    return {k: Expr(ctx, part, e.den) for k, part in split_var(q, "h").items()}
