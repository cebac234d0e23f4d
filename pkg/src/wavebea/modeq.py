"""High-order modified ODE and its reduction to a second-order system."""
from __future__ import annotations

from dataclasses import dataclass

from .symcore import Context, Expr, HSeries, JetVar
from .symcore.linalg import SingularMatrixError, invert
from .symcore.series import compose


class RegularityError(SingularMatrixError):
    """The leading coefficient of the second derivative is not invertible."""


class ReductionError(RuntimeError):
    """The order reduction did not reach a fixed point (internal error)."""


@dataclass
class HighOrderODE:
    """``phi'' = rhs`` where rhs may contain any jet order at positive h-powers."""

    rhs: list
    trunc: int

    @property
    def ctx(self) -> Context:
        return self.rhs[0].ctx

    @property
    def M(self) -> int:
        return max(r.max_jet_order() for r in self.rhs)


@dataclass
class ReducedODE:
    """``phi'' = rhs(phi, phi')`` term by term in h."""

    rhs: list
    trunc: int

    def __post_init__(self):
        for r in self.rhs:
            if r.max_jet_order() > 1:
                raise ValueError("reduced right-hand side may only contain phi and phi'")

    @property
    def ctx(self) -> Context:
        return self.rhs[0].ctx

    def truncate(self, n: int) -> "ReducedODE":
        return ReducedODE([r.truncate(n) for r in self.rhs], min(n, self.trunc))

    def residual_form(self) -> list:
        """``phi'' - rhs`` as series."""
        ctx = self.ctx
        return [
            HSeries({0: Expr.symbol(ctx, JetVar(j + 1, 2))}, self.trunc, ctx) - r
            for j, r in enumerate(self.rhs)
        ]


def solve_for_second_derivative(residual: list, trunc: int | None = None) -> HighOrderODE:
    """Rewrite ``residual = 0`` as ``phi'' = a_0(phi, phi') + sum h^i a_i``.

    The h^0 residual must be affine in phi'' with a coefficient-field
    invertible matrix ``M``; then ``rhs = phi'' - M^{-1} residual``.
    """
    ctx = residual[0].ctx
    n = ctx.dim
    N = min(r.trunc for r in residual) if trunc is None else trunc
    r0 = [r.coeff(0) for r in residual]
    M = [[r0[i].pdiff(JetVar(j + 1, 2)) for j in range(n)] for i in range(n)]
    for row in M:
        for m in row:
            if not m.is_coefficient():
                raise RegularityError(
                    "leading part is not linear in phi'' with constant coefficients; "
                    "the Lagrangian is not regular"
                )
    try:
        Minv = invert(M)
    except SingularMatrixError:
        raise RegularityError("leading coefficient of phi'' is singular; the Lagrangian is not regular") from None
    rhs = []
    scaled = []
    for i in range(n):
        acc = None
        for j in range(n):
            if Minv[i][j].is_zero():
                continue
            t = residual[j].truncate(N) * Minv[i][j]
            acc = t if acc is None else acc + t
        scaled.append(acc if acc is not None else HSeries.zero(ctx, N))
    for i in range(n):
        phi2 = HSeries({0: Expr.symbol(ctx, JetVar(i + 1, 2))}, N, ctx)
        s = phi2 - scaled[i]
        if s.coeff(0).max_jet_order() > 1:
            raise RegularityError("h^0 equation is not of second order")
        rhs.append(s)
    return HighOrderODE(rhs, N)


class JetSubstitution:
    """Lazily computed maps ``g_k(phi, phi')`` for the derivatives of order ``k >= 2``.

    ``g_2`` is the reduced right-hand side and ``g_{k+1}`` is the total
    derivative of ``g_k`` with ``phi''`` re-substituted by ``g_2``. Maps are
    cached per truncation order so that high derivatives, which only occur
    at high powers of h, are only expanded as far as needed.
    """

    def __init__(self, g2: list, trunc: int | None = None):
        self.ctx: Context = g2[0].ctx
        self.trunc = min(g.trunc for g in g2) if trunc is None else trunc
        self.g2 = [g.truncate(self.trunc) for g in g2]
        self._cache: dict = {}

    def _extend(self, g2: list, trunc: int):
        """Replace ``g_2`` by a series agreeing through the old order; caches stay valid."""
        self.g2 = [g.truncate(trunc) for g in g2]
        self.trunc = trunc

    def get(self, k: int, t: int | None = None) -> list:
        """``g_k`` truncated at ``h^t``."""
        t = self.trunc if t is None else t
        if t > self.trunc:
            raise ValueError(f"jet maps are only known through h^{self.trunc}")
        if k < 2:
            raise KeyError("substitutions start at the second derivative")
        if k == 2:
            return [g.truncate(t) for g in self.g2]
        key = (k, t)
        if key not in self._cache:
            prev = self.get(k - 1, t)
            self._cache[key] = [self._second(x.total_derivative(), t) for x in prev]
        return self._cache[key]

    def __getitem__(self, k: int) -> list:
        return self.get(k)

    def _second(self, s: HSeries, t: int | None = None) -> HSeries:
        t = self.trunc if t is None else t
        rep = {}
        for j in range(self.ctx.dim):
            rep[self.ctx.var_index(JetVar(j + 1, 2))] = self.g2[j].truncate(t)
        return compose(s.truncate(t), rep)

    def mapping(self, max_order: int, t: int | None = None) -> dict:
        rep = {}
        for k in range(2, max_order + 1):
            gk = self.get(k, t)
            for j in range(self.ctx.dim):
                rep[self.ctx.var_index(JetVar(j + 1, k))] = gk[j]
        return rep

    def apply_expr(self, e: Expr, t: int) -> HSeries:
        """Substitute into a single coefficient; the result is known through ``h^t``."""
        m = e.max_jet_order()
        s = HSeries({0: e}, t, self.ctx)
        if m < 2:
            return s
        return compose(s, self.mapping(m, t))

    def apply(self, s: HSeries) -> HSeries:
        """Replace every derivative of order >= 2 in ``s``."""
        N = min(s.trunc, self.trunc + (s.valuation() or 0))
        out = HSeries.zero(self.ctx, N)
        for j, e in s.terms.items():
            if j > N:
                continue
            out = out + self.apply_expr(e, N - j).shift(j)
        return HSeries(out.terms, N, self.ctx)


def reduce_order(ode: HighOrderODE) -> tuple[ReducedODE, JetSubstitution]:
    """Eliminate all derivatives of order >= 2 from the right-hand side order by order.

    The h^m coefficient of the reduced equation only depends on lower-order
    coefficients, so one pass per h-power suffices:
    ``G_m = sum_{i>0} [h^(m-i)] (a_i o g)`` with jet maps known through ``h^(m-i)``.
    """
    ctx = ode.ctx
    N = ode.trunc
    if all(r.max_jet_order() <= 1 for r in ode.rhs):
        red = ReducedODE([r.truncate(N) for r in ode.rhs], N)
        return red, JetSubstitution(red.rhs, N)
    G = [{0: r.coeff(0)} for r in ode.rhs]
    for g in G:
        if g[0].max_jet_order() > 1:
            raise ReductionError("h^0 right-hand side must only contain phi and phi'")
    sub = JetSubstitution([HSeries(g, 0, ctx) for g in G], 0)
    passes = 0
    for m in range(1, N + 1):
        if any(0 < k <= m for r in ode.rhs for k in r.terms):
            passes += 1
            if passes > N + 2:
                raise ReductionError("order reduction did not terminate")
            for j, r in enumerate(ode.rhs):
                val = Expr.zero(ctx)
                for i, e in r.terms.items():
                    if 0 < i <= m:
                        val = val + sub.apply_expr(e, m - i).coeff(m - i)
                if not val.is_zero():
                    G[j][m] = val
        sub._extend([HSeries(g, m, ctx) for g in G], m)
    red = ReducedODE([HSeries(g, N, ctx) for g in G], N)
    return red, sub


def check_substitution(sub: JetSubstitution, max_order: int) -> bool:
    """``g_{k+1} = D g_k`` with ``phi''`` re-substituted, for all k up to ``max_order``."""
    for k in range(2, max_order):
        lhs = sub.get(k + 1)
        rhs = [sub._second(s.total_derivative()) for s in sub.get(k)]
        if not all(a.equal_to(b) for a, b in zip(lhs, rhs)):
            return False
    return True


def check_equivalence(ode: HighOrderODE, red: ReducedODE, sub: JetSubstitution) -> list:
    """Substitute the jet maps into the high-order rhs minus the reduced rhs (zero when consistent)."""
    out = []
    for r, g in zip(ode.rhs, red.rhs):
        out.append(sub.apply(r) - g)
    return out


def modified_equation(problem, trunc: int | None = None):
    """Functional-equation residual, high-order ODE, reduced ODE and jet maps of a stencil problem."""
    from .stencil import expand_functional_equation

    res = expand_functional_equation(problem, trunc)
    ode = solve_for_second_derivative(res)
    red, sub = reduce_order(ode)
    return res, ode, red, sub
