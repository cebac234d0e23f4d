"""Modified conserved quantities and Poisson brackets on the reduced phase space."""
from __future__ import annotations

from .hamstruct import HamStructure, Pipeline, frame, invariant_onshell_derivative
from .jetcalc import SymmetryGenerator, noether_current
from .modeq import JetSubstitution, ReducedODE
from .symcore import Expr, HSeries, JetVar
from .symcore.linalg import solve_linear_series


def reduce_invariant(I: HSeries, sub: JetSubstitution) -> HSeries:
    """Replace all derivatives of order >= 2 in ``I`` by their on-shell values."""
    if I.max_jet_order() <= 1:
        return I
    return sub.apply(I)


def rotation_invariant(pipe: Pipeline) -> tuple[HSeries, HSeries]:
    """Noether quantity of the rotation symmetry, on the jet and reduced to ``(phi, phi')``.

    With the generator ``(-phi2, phi1)`` the h^0 part is ``alpha c |phi|^2 + (c^2-1) <J phi', phi>``.
    """
    ctx = pipe.hs.ctx
    g = SymmetryGenerator.rotation(ctx)
    I = noether_current(pipe.L, g)
    return I, reduce_invariant(I, pipe.sub)


def gradient(f: HSeries) -> list:
    return [f.pdiff(v) for v in frame(f.ctx)]


def hamiltonian_vector(hs: HamStructure, g: HSeries) -> list:
    """Solve ``omega X = grad g`` as formal series."""
    return solve_linear_series(hs.omega, gradient(g))


def poisson_bracket(hs: HamStructure, f: HSeries, g: HSeries) -> HSeries:
    """``{f, g} = <grad f, omega^{-1} grad g>``; ``{f, H}`` is the derivative of ``f`` along the flow."""
    ctx = hs.ctx
    N = min(hs.trunc, f.trunc, g.trunc)
    X = hamiltonian_vector(hs, HSeries(g.terms, N, ctx) if g.trunc > N else g)
    out = HSeries.zero(ctx, N)
    for a, x in zip(gradient(f), X):
        out = out + a * x
    return out.truncate(N)


def conservation_defect(hs: HamStructure, f: HSeries, r: ReducedODE) -> HSeries:
    """Derivative of ``f`` along the reduced equation; zero for a modified invariant."""
    return invariant_onshell_derivative(hs, f, r)


def noether_identity_defect(L, g: SymmetryGenerator) -> HSeries:
    """``D I + sum_j E_j(L) g_j`` for the current ``I``; identically zero for a symmetry."""
    from .jetcalc import euler_lagrange

    I = noether_current(L, g)
    s = L.L if hasattr(L, "L") else L
    el = euler_lagrange(s)
    out = I.total_derivative()
    for e, gj in zip(el, g.components):
        out = out + e * gj
    return out


def continuous_rotation_invariant(ctx) -> Expr:
    """``alpha c |phi|^2 + (c^2-1) <J phi', phi>`` with ``J v = (v2, -v1)``."""
    p1, p2 = Expr.symbol(ctx, JetVar(1, 0)), Expr.symbol(ctx, JetVar(2, 0))
    d1, d2 = Expr.symbol(ctx, JetVar(1, 1)), Expr.symbol(ctx, JetVar(2, 1))
    a = Expr.symbol(ctx, "alpha") if "alpha" in ctx.params else None
    c = Expr.symbol(ctx, "c") if "c" in ctx.params else None
    if a is None or c is None:
        raise ValueError("context needs symbolic alpha and c")
    return a * c * (p1 * p1 + p2 * p2) + (c * c - 1) * (d2 * p1 - d1 * p2)
