"""Variational calculus on jet expressions: total derivative, Euler operator, Noether currents."""
from __future__ import annotations

from dataclasses import dataclass, field

from .symcore import Context, Expr, HSeries, JetVar
from .symcore.expr import SymbolicError


class NotASymmetryError(SymbolicError):
    """The generator does not leave the Lagrangian invariant."""


@dataclass(frozen=True)
class LagrangianDensity:
    """Formal Lagrangian ``L = sum_i h^i L^i`` over the jet of ``phi``."""

    L: HSeries
    n: int = field(default=0)

    def __post_init__(self):
        if self.n == 0:
            object.__setattr__(self, "n", self.L.ctx.dim)

    @property
    def ctx(self) -> Context:
        return self.L.ctx

    @property
    def trunc(self) -> int:
        return self.L.trunc

    @property
    def max_jet(self) -> dict[int, int]:
        """Highest jet order occurring in each h-coefficient."""
        return {k: v.max_jet_order() for k, v in self.L.terms.items()}

    def order(self) -> int:
        return max([0] + list(self.max_jet.values()))


@dataclass(frozen=True)
class SymmetryGenerator:
    """Vector field on configuration space, one :class:`Expr` per component."""

    components: tuple

    def __post_init__(self):
        for g in self.components:
            if g.max_jet_order() > 0:
                raise ValueError("generator components may depend on phi only")

    @classmethod
    def rotation(cls, ctx: Context) -> "SymmetryGenerator":
        """Infinitesimal rotation ``J^T phi = (-phi2, phi1)`` of the plane."""
        if ctx.dim != 2:
            raise ValueError("rotation generator needs dimension 2")
        p1 = Expr.symbol(ctx, JetVar(1, 0))
        p2 = Expr.symbol(ctx, JetVar(2, 0))
        return cls((-p2, p1))

    @classmethod
    def zero(cls, ctx: Context) -> "SymmetryGenerator":
        return cls(tuple(Expr.zero(ctx) for _ in range(ctx.dim)))


def _as_series(L) -> HSeries:
    if isinstance(L, LagrangianDensity):
        return L.L
    if isinstance(L, Expr):
        return HSeries({0: L}, 0, L.ctx)
    return L


def total_derivative(e, times: int = 1):
    """d/dxi applied ``times`` times to an Expr or HSeries."""
    if times < 1:
        raise ValueError("times must be positive")
    return e.total_derivative(times)


def euler_operator(L, j: int, K: int | None = None) -> HSeries:
    """``sum_{i=0}^K (-1)^i D^i d/dphi_j^(i)`` applied coefficient-wise in h."""
    s = _as_series(L)
    ctx = s.ctx

    def apply(e: Expr) -> Expr:
        k_max = e.max_jet_order() if K is None else K
        out = Expr.zero(ctx)
        for i in range(max(k_max, 0) + 1):
            d = e.pdiff(JetVar(j, i))
            if d.is_zero():
                continue
            d = d.total_derivative(i) if i else d
            out = out + d if i % 2 == 0 else out - d
        return out

    return s.map(apply)


def euler_lagrange(L, K: int | None = None) -> list[HSeries]:
    s = _as_series(L)
    return [euler_operator(s, j, K) for j in range(1, s.ctx.dim + 1)]


def prolong(g: SymmetryGenerator, order: int) -> list[list[Expr]]:
    """``[[D^k g_j for j] for k in 0..order]``."""
    out = [list(g.components)]
    for _ in range(order):
        out.append([x.total_derivative() for x in out[-1]])
    return out


def symmetry_defect(L, g: SymmetryGenerator) -> HSeries:
    """Variation of ``L`` along the prolonged generator."""
    s = _as_series(L)
    ctx = s.ctx
    order = max(s.max_jet_order(), 0)
    pg = prolong(g, order)

    def apply(e: Expr) -> Expr:
        out = Expr.zero(ctx)
        for k in range(e.max_jet_order() + 1):
            for j in range(ctx.dim):
                d = e.pdiff(JetVar(j + 1, k))
                if not d.is_zero():
                    out = out + d * pg[k][j]
        return out

    return s.map(apply)


def noether_current(L, g: SymmetryGenerator, M: int | None = None, check: bool = True) -> HSeries:
    """Conserved current of a point symmetry leaving ``L`` invariant.

    ``sum_{m=1}^M sum_{k=0}^{m-1} (-1)^k <D^k grad_{phi^(m)} L, D^{m-1-k} g>``.
    """
    s = _as_series(L)
    ctx = s.ctx
    if check:
        defect = symmetry_defect(s, g)
        if not defect.is_zero():
            null = all(x.is_zero() for x in euler_lagrange(defect))
            kind = "a divergence symmetry (unsupported)" if null else "not a symmetry"
            raise NotASymmetryError(f"generator is {kind} of the Lagrangian")
    order = max(s.max_jet_order(), 0) if M is None else M
    pg = prolong(g, max(order - 1, 0))

    def apply(e: Expr) -> Expr:
        out = Expr.zero(ctx)
        mm = e.max_jet_order() if M is None else M
        for m in range(1, mm + 1):
            for j in range(ctx.dim):
                dm = e.pdiff(JetVar(j + 1, m))
                if dm.is_zero():
                    continue
                for k in range(m):
                    t = dm.total_derivative(k) if k else dm
                    t = t * pg[m - 1 - k][j]
                    out = out + t if k % 2 == 0 else out - t
        return out

    return s.map(apply)
