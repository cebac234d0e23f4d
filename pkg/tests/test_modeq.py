import numpy as np
import pytest

from wavebea.modeq import (
    HighOrderODE,
    ReducedODE,
    RegularityError,
    check_equivalence,
    check_substitution,
    modified_equation,
    reduce_order,
    solve_for_second_derivative,
)
from wavebea.numlab import CompiledExprs, NumericBinding, Potential, collapse
from wavebea.stencil import StencilProblem, expand_functional_equation, rotating_problem, travelling_problem
from wavebea.symcore import HSeries, JetVar, parse, series_text, to_text


@pytest.fixture(scope="module")
def rot4():
    return modified_equation(rotating_problem(trunc=4))


def test_leading_term_solves_continuous_equation(rot4):
    _, ode, red, _ = rot4
    ctx = ode.ctx
    exp = [
        "((alpha^2 + V1)*phi1 + 2*alpha*c*d1phi2)/(c^2 - 1)",
        "((alpha^2 + V1)*phi2 - 2*alpha*c*d1phi1)/(c^2 - 1)",
    ]
    for j in range(2):
        assert ode.rhs[j].coeff(0) == parse(exp[j], ctx)
        assert red.rhs[j].coeff(0) == parse(exp[j], ctx)


def test_high_order_ode_contains_high_derivatives(rot4):
    _, ode, _, _ = rot4
    assert ode.M > 2
    assert all(r.coeff(0).max_jet_order() <= 1 for r in ode.rhs)


def test_reduced_ode_is_first_order_and_even(rot4):
    _, _, red, _ = rot4
    assert all(r.max_jet_order() <= 1 for r in red.rhs)
    assert all(k % 2 == 0 for r in red.rhs for k in r.terms)
    assert sorted(red.rhs[0].terms) == [0, 2, 4]
    with pytest.raises(ValueError):
        ReducedODE([HSeries({0: parse("d2phi1", red.ctx)}, 0, red.ctx)] * 2, 0)


def test_substitution_consistency(rot4):
    _, ode, _, sub = rot4
    # the top maps are expensive at full order; four levels reach every h^2 term
    assert check_substitution(sub, min(ode.M, 4))


def test_equivalence_of_high_and_reduced_forms(rot4):
    _, ode, red, sub = rot4
    assert all(d.is_zero() for d in check_equivalence(ode, red, sub))


def test_residual_vanishes_on_reduced_flow(rot4):
    """Substituting the jet maps into the functional-equation residual gives zero through h^N."""
    res, _, _, sub = rot4
    for r in res:
        assert sub.apply(r).is_zero()


def test_reduction_is_idempotent(rot4):
    _, _, red, _ = rot4
    again, _ = reduce_order(HighOrderODE(red.rhs, red.trunc))
    assert all(a.equal_to(b) for a, b in zip(again.rhs, red.rhs))


def test_truncation_is_consistent():
    """The order-2 reduction is the truncation of the order-4 reduction."""
    _, _, r2, _ = modified_equation(rotating_problem(trunc=2))
    _, _, r4, _ = modified_equation(rotating_problem(trunc=4))
    # the two problems live in different contexts, so compare canonical text
    for a, b in zip(r2.rhs, r4.truncate(2).rhs):
        assert series_text(a) == series_text(b)


def test_order_zero_is_continuous_ode():
    _, ode, red, _ = modified_equation(rotating_problem(trunc=0))
    assert sorted(red.rhs[0].terms) == [0]
    assert ode.M <= 1


def test_singular_leading_coefficient():
    # the h^0 residual does not contain phi'' at all
    p = rotating_problem(trunc=0)
    ctx = p.ctx
    res = [HSeries({0: parse("phi1 + d1phi2", ctx)}, 0, ctx), HSeries({0: parse("phi2", ctx)}, 0, ctx)]
    with pytest.raises(RegularityError):
        solve_for_second_derivative(res)


def _residual_order(N, hs=(0.2, 0.1, 0.05)):
    """Residual of the order-N reduced flow, prolonged exactly, inside the order-6 high-order ODE."""
    p = travelling_problem(dim=1, trunc=6, c="1/2", dt="3/5", dx="3/5")
    _, ode, red, _ = modified_equation(p)
    G = collapse(red.rhs[0], N)
    gs = {2: G}
    for k in range(3, ode.M + 1):
        gs[k] = gs[k - 1].total_derivative().subs({JetVar(1, 2): G})
    F = collapse(ode.rhs[0], 6)
    pot = Potential("x1**4/4 - x1**2/2 + x1**3/5", "W", 1)
    errs = []
    for h in hs:
        b = NumericBinding({}, pot, h=h)
        J = [[0.7, -0.3] + [0.0] * (ode.M - 1)]
        for k in range(2, ode.M + 1):
            J[0][k] = CompiledExprs([gs[k]], b)(J)[0]
        errs.append(abs(CompiledExprs([F], b)(J)[0] - J[0][2]))
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


@pytest.mark.parametrize("N", [0, 2, 4])
def test_numeric_residual_order(N):
    # only even powers occur, so the first neglected term is h^(N+2)
    slopes = _residual_order(N, hs=(0.4, 0.2, 0.1))
    assert slopes.min() >= N + 1
    assert np.allclose(slopes, N + 2, atol=0.3)


def test_travelling_reduction_matches_scalar_formula():
    # non-rotating d = 1: the h^0 reduced equation is phi'' = W_1/(1 - c^2) up to sign
    p = travelling_problem(dim=1, trunc=2)
    _, _, red, _ = modified_equation(p)
    assert red.rhs[0].coeff(0) == parse("W_1/(c^2-1)", p.ctx)


def test_numeric_and_symbolic_parameters_agree():
    sym = modified_equation(rotating_problem(trunc=2))[2]
    num = modified_equation(StencilProblem(alpha="1/3", c=2, dt="1/5", dx="1/10", trunc=2))[2]
    ctx = num.ctx
    vals = {"alpha": parse("1/3", sym.ctx), "c": parse("2", sym.ctx),
            "dt": parse("1/5", sym.ctx), "dx": parse("1/10", sym.ctx)}
    for a, b in zip(sym.rhs, num.rhs):
        for k in (0, 2):
            assert to_text(a.coeff(k).subs(vals)) == to_text(b.coeff(k))
    assert ctx.params == ()


def test_high_order_ode_from_functional_equation_is_unique():
    p = rotating_problem(trunc=2)
    ode = solve_for_second_derivative(expand_functional_equation(p))
    assert ode.trunc == 2
    assert isinstance(ode, HighOrderODE)
