"""Ostrogradsky construction and the reduced modified Hamiltonian structure.

Matrix convention for 2-forms: in the frame ``(phi_1..phi_n, phi'_1..phi'_n)``
the matrix of ``omega = sum dq ^ dp`` has entries
``M_ab = sum (d_a p d_b q - d_a q d_b p)``; Hamilton's equations read
``M z' = grad H``. A 1-form ``lambda`` is a primitive when
``M_ab = d_b lambda_a - d_a lambda_b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .jetcalc import LagrangianDensity, euler_lagrange
from .modeq import (
    JetSubstitution,
    ReducedODE,
    RegularityError,
    modified_equation,
    reduce_order,
    solve_for_second_derivative,
)
from .symcore import Context, Expr, HSeries, JetVar
from .symcore.linalg import SingularMatrixError, invert, solve_linear_series
from .symcore.series import homogeneous_parts


class ClosednessError(RuntimeError):
    """The 2-form is not closed (internal consistency failure)."""


def frame(ctx: Context) -> list[JetVar]:
    """Coordinates ``(phi_1..phi_n, phi'_1..phi'_n)`` of the first jet."""
    return [JetVar(j, 0) for j in range(1, ctx.dim + 1)] + [JetVar(j, 1) for j in range(1, ctx.dim + 1)]


@dataclass
class OstrogradskyData:
    """Coordinates ``q^i = phi^(i-1)``, momenta ``p[i][j]`` (1-based i) and Hamiltonian ``H``."""

    M: int
    p: dict
    H: HSeries
    L: HSeries

    @property
    def ctx(self) -> Context:
        return self.H.ctx

    @property
    def trunc(self) -> int:
        return self.H.trunc


@dataclass
class HamStructure:
    """Reduced structure: ``omega`` (2n x 2n matrix of HSeries) and Hamiltonian ``H`` on the first jet."""

    omega: list
    H: HSeries
    trunc: int
    P: dict | None = field(default=None, repr=False)
    Q: dict | None = field(default=None, repr=False)

    @property
    def ctx(self) -> Context:
        return self.H.ctx

    def block(self, rows: range, cols: range) -> list:
        return [[self.omega[a][b] for b in cols] for a in rows]


def _series(ctx, e, N) -> HSeries:
    return HSeries({0: e}, N, ctx)


def ostrogradsky(L) -> OstrogradskyData:
    """Momenta by the descending recursion and ``H = sum <p_i, phi^(i)> - L``."""
    s = L.L if isinstance(L, LagrangianDensity) else L
    ctx = s.ctx
    n = ctx.dim
    M = s.max_jet_order()
    if M < 1:
        raise RegularityError("Lagrangian does not depend on derivatives")
    L0 = s.coeff(0)
    hess = [[L0.pdiff(JetVar(i, 1)).pdiff(JetVar(j, 1)) for j in range(1, n + 1)] for i in range(1, n + 1)]
    try:
        if not all(x.is_coefficient() for row in hess for x in row):
            raise SingularMatrixError("non-constant Hessian")
        invert(hess)
    except SingularMatrixError:
        raise RegularityError("h^0 Hessian in phi' is not invertible; the Lagrangian is not regular") from None
    p: dict = {}
    p[M] = [s.pdiff(JetVar(j, M)) for j in range(1, n + 1)]
    for i in range(M - 1, 0, -1):
        p[i] = [s.pdiff(JetVar(j, i)) - p[i + 1][j - 1].total_derivative() for j in range(1, n + 1)]
    H = -s
    for i in range(1, M + 1):
        for j in range(1, n + 1):
            H = H + p[i][j - 1] * Expr.symbol(ctx, JetVar(j, i))
    return OstrogradskyData(M, p, H, s)


def onshell_reduce(o: OstrogradskyData, sub: JetSubstitution, trunc: int | None = None) -> HamStructure:
    """Substitute the jet maps into ``H`` and into ``omega = sum dq ^ dp``."""
    ctx = o.ctx
    n = ctx.dim
    N = min(o.trunc, sub.trunc) if trunc is None else trunc
    z = frame(ctx)
    P: dict = {}
    Q: dict = {}
    for i in range(1, o.M + 1):
        P[i] = [sub.apply(x.truncate(N)) for x in o.p[i]]
        val = min((x.valuation() for x in P[i] if x.valuation() is not None), default=None)
        if val is None:
            continue
        t = N - val
        if i - 1 <= 1:
            Q[i] = [_series(ctx, Expr.symbol(ctx, JetVar(j, i - 1)), N) for j in range(1, n + 1)]
        else:
            Q[i] = [HSeries(g.terms, N, ctx) if g.trunc >= N else g for g in sub.get(i - 1, t)]
    H = sub.apply(o.H.truncate(N))
    dP = {i: [[x.pdiff(v) for v in z] for x in P[i]] for i in Q}
    dQ = {i: [[x.pdiff(v) for v in z] for x in Q[i]] for i in Q}
    m = 2 * n
    omega = [[HSeries.zero(ctx, N) for _ in range(m)] for _ in range(m)]
    for a in range(m):
        for b in range(a + 1, m):
            acc = HSeries.zero(ctx, N)
            for i in Q:
                for j in range(n):
                    acc = acc + dP[i][j][a] * dQ[i][j][b] - dQ[i][j][a] * dP[i][j][b]
            acc = HSeries(acc.terms, N, ctx)
            omega[a][b] = acc
            omega[b][a] = -acc
    return HamStructure(omega, HSeries(H.terms, N, ctx), N, P, Q)


def check_skew(hs: HamStructure) -> bool:
    m = len(hs.omega)
    return all((hs.omega[a][b] + hs.omega[b][a]).is_zero() for a in range(m) for b in range(m))


def closedness_defects(hs: HamStructure) -> list:
    """Nonzero components ``d_a w_bc + d_b w_ca + d_c w_ab`` (empty when closed)."""
    z = frame(hs.ctx)
    w = hs.omega
    m = len(w)
    out = []
    for a in range(m):
        for b in range(a + 1, m):
            for c in range(b + 1, m):
                s = w[b][c].pdiff(z[a]) + w[c][a].pdiff(z[b]) + w[a][b].pdiff(z[c])
                if not s.is_zero():
                    out.append(((a, b, c), s))
    return out


@dataclass
class FlowReport:
    residual: list
    zdot: list

    @property
    def ok(self) -> bool:
        return all(r.is_zero() for r in self.residual)


def hamiltonian_vector_field(hs: HamStructure) -> list:
    """``z' = omega^{-1} grad H`` solved as formal series."""
    z = frame(hs.ctx)
    grad = [hs.H.pdiff(v) for v in z]
    return solve_linear_series(hs.omega, grad)


def hamiltonian_flow_check(hs: HamStructure, r: ReducedODE) -> FlowReport:
    """Difference between the Hamiltonian vector field and ``(phi', rhs)``."""
    ctx = hs.ctx
    N = min(hs.trunc, r.trunc)
    zdot = hamiltonian_vector_field(hs)
    expected = [_series(ctx, Expr.symbol(ctx, JetVar(j, 1)), N) for j in range(1, ctx.dim + 1)] + list(r.rhs)
    res = [HSeries((a - b).terms, N, ctx) for a, b in zip(zdot, expected)]
    res = [x.truncate(N) for x in res]
    return FlowReport(res, zdot)


def check_vertical_lagrangian(hs: HamStructure):
    """True iff the ``dphi' ^ dphi'`` block vanishes; also returns that block."""
    n = hs.ctx.dim
    blk = hs.block(range(n, 2 * n), range(n, 2 * n))
    return all(x.is_zero() for row in blk for x in row), blk


def exterior_derivative(lam: list) -> list:
    """Matrix of ``d lambda`` in the module convention: ``d_b lambda_a - d_a lambda_b``."""
    ctx = lam[0].ctx
    z = frame(ctx)
    m = len(z)
    out = [[None] * m for _ in range(m)]
    grads = [[x.pdiff(v) for v in z] for x in lam]
    for a in range(m):
        for b in range(m):
            out[a][b] = grads[a][b] - grads[b][a]
    return out


def _fibre_homotopy(hs: HamStructure) -> list:
    """``(K Omega)_b = int_0^1 sum_j y_j Omega_{y_j b}(x, t y) s_b(t) dt`` with ``Omega = -M``."""
    ctx = hs.ctx
    n = ctx.dim
    N = hs.trunc
    yidx = [ctx.var_index(JetVar(j, 1)) for j in range(1, n + 1)]
    out = []
    for b in range(2 * n):
        extra = 1 if b >= n else 0
        terms: dict = {}
        for j in range(n):
            om = -hs.omega[n + j][b]
            y = Expr.symbol(ctx, yidx[j])
            for k, e in om.terms.items():
                for d, part in homogeneous_parts(e, yidx).items():
                    t = y * part / (d + 1 + extra)
                    terms[k] = terms[k] + t if k in terms else t
        out.append(HSeries(terms, N, ctx))
    return out


def local_primitive(hs: HamStructure) -> list:
    """1-form ``lambda`` (components in the jet frame) with ``d lambda = omega``.

    Gauge: fibre homotopy (scaling ``phi'`` to zero) plus, on the zero
    section, the restriction of ``-sum p dq``; the h^0 part is ``-p dq`` of
    the continuous problem and there are no ``dphi'`` components when the
    vertical block of ``omega`` vanishes. Without momentum data the base
    part uses the radial homotopy, which requires polynomial coefficients.
    """
    if closedness_defects(hs):
        raise ClosednessError("omega is not closed; no primitive exists")
    ctx = hs.ctx
    n = ctx.dim
    N = hs.trunc
    z = frame(ctx)
    lam = _fibre_homotopy(hs)
    yzero = {JetVar(j, 1): 0 for j in range(1, n + 1)}
    if hs.P is not None and hs.Q is not None:
        for b in range(n):
            acc = HSeries.zero(ctx, N)
            for i in hs.Q:
                for j in range(n):
                    acc = acc - hs.P[i][j] * hs.Q[i][j].pdiff(z[b])
            acc = acc.map(lambda e: e.subs(yzero))
            lam[b] = lam[b] + acc
    else:
        xidx = [ctx.var_index(JetVar(j, 0)) for j in range(1, n + 1)]
        for b in range(n):
            terms: dict = {}
            for a in range(n):
                x = Expr.symbol(ctx, xidx[a])
                for k, e in (-hs.omega[a][b]).terms.items():
                    e0 = e.subs(yzero)
                    if any(ctx.kinds[i][0] in ("V", "W") for i in e0.used_indices()):
                        raise NotImplementedError(
                            "radial homotopy of potential-dependent forms needs momentum data"
                        )
                    for d, part in homogeneous_parts(e0, xidx).items():
                        t = x * part / (d + 2)
                        terms[k] = terms[k] + t if k in terms else t
            lam[b] = lam[b] + HSeries(terms, N, ctx)
    return lam


# -- pipeline and first-order Lagrangians ------------------------------------------


@dataclass
class Pipeline:
    """All derived objects of a stencil problem at one truncation order."""

    problem: object
    L: LagrangianDensity
    residual: list
    ode: object
    reduced: ReducedODE
    sub: JetSubstitution
    ostro: OstrogradskyData
    hs: HamStructure


def modified_hamiltonian_structure(problem, trunc: int | None = None) -> Pipeline:
    from .stencil import expand_discrete_lagrangian

    N = problem.trunc if trunc is None else trunc
    res, ode, red, sub = modified_equation(problem, N)
    L = expand_discrete_lagrangian(problem, N)
    o = ostrogradsky(L)
    hs = onshell_reduce(o, sub, N)
    return Pipeline(problem, L, res, ode, red, sub, o, hs)


def reduced_from_lagrangian(L) -> ReducedODE:
    """Second-order reduced equation of a Lagrangian (Euler-Lagrange equations solved for phi'')."""
    s = L.L if isinstance(L, LagrangianDensity) else L
    el = euler_lagrange(s)
    ode = solve_for_second_derivative(el)
    red, _ = reduce_order(ode)
    return red


@dataclass
class FirstOrderLagrangian:
    L: HSeries
    case: str
    pipeline: Pipeline | None = None


CASES = ("c0", "dx_eq_c_dt", "alpha0")


def case_problem(problem, case: str):
    """Copy of ``problem`` with the parameter relation of a special case imposed.

    The problem itself is returned when the relation already holds.
    """
    v = problem.values
    if case == "c0" and v["c"].is_zero():
        return problem
    if case == "alpha0" and v["alpha"].is_zero():
        return problem
    if case == "dx_eq_c_dt" and (v["dx"] - v["c"] * v["dt"]).is_zero():
        return problem
    if case == "c0":
        return problem.with_values(c=0)
    if case == "dx_eq_c_dt":
        from .symcore import to_text

        if problem.values["c"].is_zero():
            raise ValueError("dx = c dt with c = 0 leaves no spatial step")
        return problem.with_values(dx=to_text(problem.values["c"] * problem.values["dt"]))
    if case == "alpha0":
        return problem.with_values(alpha=0)
    raise ValueError(f"unknown case {case!r}; expected one of {CASES}")


def legendre_first_order(problem, case: str, trunc: int | None = None) -> FirstOrderLagrangian:
    """First-order modified Lagrangian ``L = -<lambda_phi, phi'> - H`` in a special case.

    Requires the vertical block of ``omega`` to vanish so that the primitive
    has no ``dphi'`` components.
    """
    cp = case_problem(problem, case)
    pipe = modified_hamiltonian_structure(cp, trunc)
    hs = pipe.hs
    ok, _ = check_vertical_lagrangian(hs)
    if not ok:
        raise ValueError(f"case {case!r}: fibres are not Lagrangian, no first-order Lagrangian")
    lam = local_primitive(hs)
    ctx = hs.ctx
    n = ctx.dim
    for b in range(n, 2 * n):
        if not lam[b].is_zero():
            raise RuntimeError("primitive has vertical components despite a Lagrangian fibre")
    L = -hs.H
    for j in range(n):
        L = L - lam[j] * Expr.symbol(ctx, JetVar(j + 1, 1))
    return FirstOrderLagrangian(HSeries(L.terms, hs.trunc, ctx), case, pipe)


def naive_substitution_lagrangian(L, sub: JetSubstitution) -> HSeries:
    """Lagrangian with derivatives of order >= 2 replaced on-shell (not variationally valid)."""
    s = L.L if isinstance(L, LagrangianDensity) else L
    return sub.apply(s)


def dH_dxi_onshell(o: OstrogradskyData, sub: JetSubstitution) -> HSeries:
    """Total derivative of the Ostrogradsky Hamiltonian with all jets replaced on-shell."""
    return sub.apply(o.H.total_derivative())


def invariant_onshell_derivative(hs: HamStructure, f: HSeries, r: ReducedODE) -> HSeries:
    """``d f / d xi`` along the reduced flow."""
    ctx = hs.ctx
    n = ctx.dim
    N = min(f.trunc, r.trunc)
    out = HSeries.zero(ctx, N)
    for j in range(1, n + 1):
        out = out + f.pdiff(JetVar(j, 0)) * Expr.symbol(ctx, JetVar(j, 1))
        out = out + f.pdiff(JetVar(j, 1)) * r.rhs[j - 1]
    return out.truncate(N)
