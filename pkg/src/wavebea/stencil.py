"""Discrete problem family and its step-size series expansions.

The built-in family is the five-point stencil for ``u_tt - u_xx - grad W(u) = 0``
restricted to rotating travelling waves ``u(t, x) = R(t) phi(x - c t)`` with
``R(t) = exp(t alpha J)``. Every object is expanded in the grading variable
``h`` that scales both steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .jetcalc import LagrangianDensity, euler_lagrange, euler_operator
from .symcore import Context, Expr, HSeries, JetVar, parse
from .symcore.context import RESERVED_PARAMS


class ProblemError(ValueError):
    """Invalid problem definition."""


SYMBOLIC = "symbolic"


@dataclass
class StencilProblem:
    """Rotating or non-rotating travelling-wave reduction of a stencil.

    Parameters
    ----------
    dim
        Configuration dimension; must be 2 when ``alpha`` is not zero.
    alpha, c, dt, dx
        ``"symbolic"``, a rational number, or a text expression in the
        remaining symbolic parameters (e.g. ``dx="c*dt"``).
    potential
        ``"V"`` (radial, ``W = V(<phi,phi>)/2``) or ``"W"`` (general).
    trunc
        Truncation order ``N`` in ``h``.
    stencil
        Optional custom triples ``(offset, rotation power, weight)``; the
        difference part of the residual is ``h^-2 sum w R(r h dt) phi(xi + o h)``.
    """

    dim: int = 2
    alpha: object = SYMBOLIC
    c: object = SYMBOLIC
    dt: object = SYMBOLIC
    dx: object = SYMBOLIC
    potential: str = "V"
    trunc: int = 2
    stencil: list | None = None
    max_jet: int | None = None
    max_pot: int | None = None
    extra_params: tuple = ()
    ctx: Context = field(init=False, repr=False)

    def __post_init__(self):
        raw = {"alpha": self.alpha, "c": self.c, "dt": self.dt, "dx": self.dx}
        symbolic = [p for p in RESERVED_PARAMS if raw[p] == SYMBOLIC]
        if self.potential not in ("V", "W"):
            raise ProblemError(f"unknown potential kind {self.potential!r}")
        if self.trunc < 0:
            raise ProblemError("truncation order must be non-negative")
        mj = self.max_jet if self.max_jet is not None else max(8, 2 * self.trunc + 4)
        mp = self.max_pot if self.max_pot is not None else max(6, 2 * self.trunc + 4)
        self.ctx = Context(
            dim=self.dim,
            params=tuple(symbolic) + tuple(self.extra_params),
            max_jet=mj,
            max_pot=mp,
            potential=self.potential,
        )
        self.values: dict[str, Expr] = {}
        for p in RESERVED_PARAMS:
            v = raw[p]
            if v == SYMBOLIC:
                self.values[p] = Expr.symbol(self.ctx, p)
        for p in RESERVED_PARAMS:
            v = raw[p]
            if v == SYMBOLIC:
                continue
            if isinstance(v, str):
                e = parse(v, self.ctx)
                if not e.is_coefficient():
                    raise ProblemError(f"{p} must be an expression in the parameters")
                self.values[p] = e
            else:
                self.values[p] = Expr.const(self.ctx, Fraction(v))
        a = self.values["alpha"]
        if not a.is_zero() and (self.dim != 2 or self.potential != "V"):
            raise ProblemError("rotating waves require dimension 2 and a radial potential")
        c = self.values["c"]
        if (c * c - 1).is_zero():
            raise ProblemError("wave speed with c^2 = 1 makes the reduced equation degenerate")
        if self.values["dt"].is_zero() or self.values["dx"].is_zero():
            raise ProblemError("step sizes must be nonzero")

    # -- convenient accessors ----------------------------------------------
    def __getitem__(self, name: str) -> Expr:
        return self.values[name]

    @property
    def rotating(self) -> bool:
        return not self.values["alpha"].is_zero()

    def phi(self, j: int, k: int = 0) -> Expr:
        return Expr.symbol(self.ctx, JetVar(j, k))

    def grad_potential(self) -> list[Expr]:
        """Components of grad W at phi."""
        ctx = self.ctx
        if self.potential == "V":
            v1 = Expr.symbol(ctx, "V1")
            return [v1 * self.phi(j) for j in range(1, ctx.dim + 1)]
        return [Expr.symbol(ctx, f"W_{j}") for j in range(1, ctx.dim + 1)]

    def potential_density(self) -> Expr:
        """W(phi) as an expression (V/2 for the radial case)."""
        if self.potential == "V":
            return Expr.symbol(self.ctx, "V0") / 2
        return Expr.symbol(self.ctx, "W")

    def triples(self) -> list[tuple[Expr, int, Expr]]:
        if self.stencil is not None:
            out = []
            for o, r, w in self.stencil:
                out.append((_coef(self.ctx, o), int(r), _coef(self.ctx, w)))
            return out
        c, dt, dx = self.values["c"], self.values["dt"], self.values["dx"]
        it = (dt * dt).inverse()
        ix = (dx * dx).inverse()
        return [
            (c * dt, -1, it),
            (Expr.zero(self.ctx), 0, -2 * it),
            (-(c * dt), 1, it),
            (dx, 0, -ix),
            (Expr.zero(self.ctx), 0, 2 * ix),
            (-dx, 0, -ix),
        ]

    def with_values(self, **kw) -> "StencilProblem":
        args = dict(
            dim=self.dim, alpha=self.alpha, c=self.c, dt=self.dt, dx=self.dx,
            potential=self.potential, trunc=self.trunc, stencil=self.stencil,
            max_jet=self.max_jet, max_pot=self.max_pot, extra_params=self.extra_params,
        )
        args.update(kw)
        return StencilProblem(**args)


def _coef(ctx: Context, v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, str):
        return parse(v, ctx)
    return Expr.const(ctx, Fraction(v))


def rotating_problem(trunc: int = 2, **kw) -> StencilProblem:
    """Rotating travelling waves in the plane with symbolic alpha, c, dt, dx."""
    return StencilProblem(dim=2, trunc=trunc, **kw)


def travelling_problem(dim: int = 1, trunc: int = 2, **kw) -> StencilProblem:
    """Non-rotating travelling waves with a general potential W."""
    kw.setdefault("potential", "W")
    return StencilProblem(dim=dim, alpha=0, trunc=trunc, **kw)


# -- shift and rotation expansions -------------------------------------------


def apply_J(v: list) -> list:
    """``J v`` with ``J = [[0, 1], [-1, 0]]``."""
    return [v[1], -v[0]]


def shift_expansion(p: StencilProblem, offset: Expr, order: int) -> list[list[Expr]]:
    """Taylor coefficients of ``phi(xi + offset h)``: ``[k][j] = offset^k/k! phi_j^(k)``."""
    ctx = p.ctx
    out = []
    pw = Expr.const(ctx, 1)
    for k in range(order + 1):
        out.append([pw * Expr.symbol(ctx, JetVar(j, k)) / factorial(k) for j in range(1, ctx.dim + 1)])
        pw = pw * offset
    return out


def rotation_expansion(p: StencilProblem, power: int, order: int) -> list:
    """Coefficients of ``R(power h dt) = exp(power h dt alpha J)`` as ``(scalar, J-power mod 4)``."""
    theta = p.values["alpha"] * p.values["dt"] * power
    out = []
    pw = Expr.const(p.ctx, 1)
    for k in range(order + 1):
        out.append((pw / factorial(k), k % 4))
        pw = pw * theta
    return out


def _apply_jpow(v: list, m: int) -> list:
    for _ in range(m):
        v = apply_J(v)
    return v


def rotated_shift(p: StencilProblem, offset: Expr, power: int, order: int) -> list[HSeries]:
    """Series of ``R(power h dt) phi(xi + offset h)`` componentwise up to ``h^order``."""
    ctx = p.ctx
    sh = shift_expansion(p, offset, order)
    n = ctx.dim
    terms = [dict() for _ in range(n)]
    if power == 0 or not p.rotating:
        for k in range(order + 1):
            for j in range(n):
                terms[j][k] = sh[k][j]
    else:
        rot = rotation_expansion(p, power, order)
        for a in range(order + 1):
            s, m = rot[a]
            if s.is_zero():
                continue
            for b in range(order + 1 - a):
                v = _apply_jpow(sh[b], m)
                for j in range(n):
                    t = s * v[j]
                    terms[j][a + b] = terms[j][a + b] + t if (a + b) in terms[j] else t
    return [HSeries(t, order, ctx) for t in terms]


def _divide_h2(s: HSeries) -> HSeries:
    for k in (0, 1):
        if not s.coeff(k).is_zero():
            raise ProblemError("stencil is not consistent: h^-2 or h^-1 terms survive")
    return HSeries({k - 2: v for k, v in s.terms.items()}, s.trunc - 2, s.ctx)


# -- public operations ---------------------------------------------------------


def expand_functional_equation(p: StencilProblem, trunc: int | None = None) -> list[HSeries]:
    """Residual of the symmetric functional equation expanded in h.

    The sign is fixed so that the h^0 part is
    ``(alpha^2 + V') phi + 2 c alpha J phi' - (c^2 - 1) phi''``, i.e. the
    residual equals the Euler-Lagrange expression of the expanded Lagrangian.
    """
    N = p.trunc if trunc is None else trunc
    ctx = p.ctx
    acc = [HSeries.zero(ctx, N + 2) for _ in range(ctx.dim)]
    for off, rp, w in p.triples():
        rs = rotated_shift(p, off, rp, N + 2)
        acc = [a + r * w for a, r in zip(acc, rs)]
    grad = p.grad_potential()
    out = []
    for j in range(ctx.dim):
        diff = _divide_h2(acc[j])
        out.append(-(diff - grad[j]))
    return out


def _norm_sq(vs: list[HSeries]) -> HSeries:
    out = None
    for v in vs:
        t = v * v
        out = t if out is None else out + t
    return out


def raw_discrete_lagrangian(p: StencilProblem, trunc: int | None = None) -> HSeries:
    """Expansion of the reduced discrete Lagrangian before removing null terms.

    ``||R(-h dt) phi(xi + c h dt) - phi||^2 / (2 h^2 dt^2)
    - ||phi(xi - h dx) - phi||^2 / (2 h^2 dx^2) + W(phi)``.
    """
    if p.stencil is not None:
        raise ProblemError("discrete Lagrangians are only built for the five-point family")
    N = p.trunc if trunc is None else trunc
    ctx = p.ctx
    c, dt, dx = p.values["c"], p.values["dt"], p.values["dx"]
    phi0 = [HSeries({0: p.phi(j)}, N + 2, ctx) for j in range(1, ctx.dim + 1)]
    a = rotated_shift(p, c * dt, -1, N + 1)
    b = rotated_shift(p, -dx, 0, N + 1)
    da = [x - y for x, y in zip(a, phi0)]
    db = [x - y for x, y in zip(b, phi0)]
    na = _norm_sq(da)
    nb = _norm_sq(db)
    # the differences start at h^1, so squares are known through h^(N+2)
    kin = na * (2 * dt * dt).inverse() - nb * (2 * dx * dx).inverse()
    kin = HSeries(kin.terms, N + 2, ctx)
    L = _divide_h2(kin) + HSeries({0: p.potential_density()}, N, ctx)
    return L.truncate(N)


def drop_null_terms(L) -> LagrangianDensity:
    """Remove h-coefficients annihilated by the Euler operator (total derivatives)."""
    s = L.L if isinstance(L, LagrangianDensity) else L
    keep = {}
    for k, v in s.terms.items():
        el = euler_lagrange(HSeries({0: v}, 0, s.ctx))
        if all(e.is_zero() for e in el):
            continue
        keep[k] = v
    return LagrangianDensity(HSeries(keep, s.trunc, s.ctx))


def expand_discrete_lagrangian(p: StencilProblem, trunc: int | None = None) -> LagrangianDensity:
    """Modified Lagrangian of the stencil with null (odd-power) terms removed."""
    return drop_null_terms(raw_discrete_lagrangian(p, trunc))


# -- two-variable modified PDE -------------------------------------------------------


@dataclass(frozen=True)
class ModifiedPDE:
    """Residual components of the modified PDE in a private two-variable jet context."""

    ctx: Context
    components: tuple

    def text(self) -> list[str]:
        return [str(c) for c in self.components]


def pde_symbol(j: int, t_order: int, x_order: int) -> str:
    if t_order == 0 and x_order == 0:
        return f"u{j}"
    return f"u{j}_" + "t" * t_order + "x" * x_order


def modified_pde(dt_order: int = 2, dx_order: int = 2, dim: int = 1) -> ModifiedPDE:
    """Expansion of the five-point stencil for ``u(t, x)`` in powers of dt and dx.

    Keeps ``dt^k`` for ``k <= dt_order`` and ``dx^k`` for ``k <= dx_order``.
    """
    if dt_order > 4 or dx_order > 4 or dt_order < 0 or dx_order < 0:
        raise ValueError("orders must lie in 0..4")
    mt = dt_order // 2 + 1
    mx = dx_order // 2 + 1
    names = []
    for j in range(1, dim + 1):
        names.append(pde_symbol(j, 0, 0))
        for m in range(1, mt + 1):
            names.append(pde_symbol(j, 2 * m, 0))
        for m in range(1, mx + 1):
            names.append(pde_symbol(j, 0, 2 * m))
    ctx = Context(dim=dim, params=("dt", "dx"), max_jet=0, max_pot=1, potential="W", extra=names)
    dt = Expr.symbol(ctx, "dt")
    dx = Expr.symbol(ctx, "dx")
    comps = []
    for j in range(1, dim + 1):
        r = Expr.zero(ctx)
        for m in range(1, mt + 1):
            r = r + Expr.symbol(ctx, pde_symbol(j, 2 * m, 0)) * dt ** (2 * m - 2) * Fraction(2, factorial(2 * m))
        for m in range(1, mx + 1):
            r = r - Expr.symbol(ctx, pde_symbol(j, 0, 2 * m)) * dx ** (2 * m - 2) * Fraction(2, factorial(2 * m))
        r = r - Expr.symbol(ctx, f"W_{j}")
        comps.append(r)
    return ModifiedPDE(ctx, tuple(comps))


__all__ = [
    "ModifiedPDE",
    "ProblemError",
    "StencilProblem",
    "apply_J",
    "drop_null_terms",
    "euler_operator",
    "expand_discrete_lagrangian",
    "expand_functional_equation",
    "modified_pde",
    "raw_discrete_lagrangian",
    "rotated_shift",
    "rotating_problem",
    "travelling_problem",
]
