import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from conftest import sympy_equal, to_sympy
from wavebea.jetcalc import (
    LagrangianDensity,
    NotASymmetryError,
    SymmetryGenerator,
    euler_lagrange,
    euler_operator,
    noether_current,
    symmetry_defect,
    total_derivative,
)
from wavebea.symcore import Context, Expr, HSeries, JetVar, parse

CTX = Context(dim=2, max_jet=10)
L0_TEXT = ("1/2*(alpha^2*(phi1^2+phi2^2) + 2*alpha*c*(phi1*d1phi2 - phi2*d1phi1)"
           " + (c^2-1)*(d1phi1^2+d1phi2^2) + V0)")


def L0():
    return parse(L0_TEXT, CTX)


def test_total_derivative_examples():
    assert total_derivative(parse("phi1^2", CTX)) == parse("2*phi1*d1phi1", CTX)
    assert total_derivative(parse("d1phi2", CTX), 2) == parse("d3phi2", CTX)
    # V(<phi,phi>) obeys the chain rule
    assert total_derivative(parse("V0", CTX)) == parse("2*V1*(phi1*d1phi1+phi2*d1phi2)", CTX)
    with pytest.raises(ValueError):
        total_derivative(parse("phi1", CTX), 0)


def _frac(v):
    v = sympy.Rational(v)
    return Fraction(int(v.p), int(v.q))


def test_total_derivative_along_numeric_curve():
    """D^2 of a jet polynomial evaluated on a polynomial curve equals the second xi-derivative."""
    x = sympy.Symbol("x")
    f1 = 1 + 2 * x - 3 * x**2 + x**3 / 2
    f2 = -1 + x / 3 + x**2 - 2 * x**3
    e = parse("phi1^2*phi2 + d1phi1*phi2^3 - 2*d1phi2^2", CTX)
    d2 = total_derivative(e, 2)
    sym = f1**2 * f2 + sympy.diff(f1, x) * f2**3 - 2 * sympy.diff(f2, x) ** 2
    for x0 in (sympy.Rational(-1, 2), sympy.Rational(3, 7), 2):
        env = {}
        for j, f in ((1, f1), (2, f2)):
            for k in range(5):
                env[JetVar(j, k)] = sympy.diff(f, x, k).subs(x, x0)
        got = d2.subs({k: Expr.const(CTX, _frac(v)) for k, v in env.items()})
        assert got == Expr.const(CTX, _frac(sympy.diff(sym, x, 2).subs(x, x0)))


def test_euler_operator_gives_continuous_equation():
    el = euler_lagrange(L0())
    expected = [
        "(alpha^2+V1)*phi1 + 2*alpha*c*d1phi2 - (c^2-1)*d2phi1",
        "(alpha^2+V1)*phi2 - 2*alpha*c*d1phi1 - (c^2-1)*d2phi2",
    ]
    for got, exp in zip(el, expected):
        assert got.coeff(0) == parse(exp, CTX)


def _random_expr(r: random.Random, order=2, nterms=4):
    atoms = [f"d{k}phi{j}" if k else f"phi{j}" for j in (1, 2) for k in range(order + 1)] + ["V0", "V1"]
    terms = []
    for _ in range(nterms):
        fac = [r.choice(atoms) for _ in range(r.randint(1, 3))]
        terms.append(f"({r.randint(-4, 4)}/{r.randint(1, 3)})*{r.choice(['alpha', 'c', '1', 'dt^2'])}*" + "*".join(fac))
    return parse(" + ".join(terms), CTX)


@given(st.integers(0, 10**6))
def test_total_derivatives_are_null_lagrangians(seed):
    e = _random_expr(random.Random(seed))
    for comp in euler_lagrange(total_derivative(e)):
        assert comp.is_zero()


@given(st.integers(0, 10**6))
def test_euler_operator_ignores_added_divergence(seed):
    e = _random_expr(random.Random(seed))
    a = euler_lagrange(L0())
    b = euler_lagrange(L0() + total_derivative(e))
    assert all(x.equal_to(y) for x, y in zip(a, b))


def test_euler_operator_is_linear_and_coefficientwise():
    r = random.Random(7)
    e1, e2 = _random_expr(r), _random_expr(r)
    s = HSeries({0: e1, 2: e2}, 2, CTX)
    for j in (1, 2):
        out = euler_operator(s, j)
        assert out.coeff(0) == euler_operator(e1, j).coeff(0)
        assert out.coeff(2) == euler_operator(e2, j).coeff(0)


def test_euler_operator_against_sympy():
    """Independent oracle: sympy's euler_equations on the same density written in functions."""
    x = sympy.Symbol("x")
    u, v = sympy.Function("u")(x), sympy.Function("v")(x)
    a, c = sympy.symbols("alpha c")
    L = (u.diff(x, 2) ** 2 * v + a * c * u * v.diff(x) ** 3 + u**2 * v.diff(x) * u.diff(x, 2))
    eqs = sympy.euler_equations(L, [u, v], x)
    ours = euler_lagrange(parse("d2phi1^2*phi2 + alpha*c*phi1*d1phi2^3 + phi1^2*d1phi2*d2phi1", CTX))
    names = {}
    for k in range(6):
        names[u.diff(x, k) if k else u] = sympy.Symbol(f"d{k}phi1" if k else "phi1")
        names[v.diff(x, k) if k else v] = sympy.Symbol(f"d{k}phi2" if k else "phi2")
    for eq, mine in zip(eqs, ours):
        lhs = eq.lhs
        for k in range(5, -1, -1):
            lhs = lhs.subs({u.diff(x, k) if k else u: names[u.diff(x, k) if k else u],
                            v.diff(x, k) if k else v: names[v.diff(x, k) if k else v]})
        assert sympy_equal(lhs, to_sympy(mine.coeff(0)))


# -- symmetries and Noether currents ---------------------------------------------------


def test_rotation_is_a_symmetry_of_L0():
    g = SymmetryGenerator.rotation(CTX)
    assert symmetry_defect(L0(), g).is_zero()


def test_noether_current_of_L0():
    g = SymmetryGenerator.rotation(CTX)
    I = noether_current(L0(), g)
    exp = parse("alpha*c*(phi1^2+phi2^2) + (c^2-1)*(d1phi2*phi1 - d1phi1*phi2)", CTX)
    assert I.coeff(0) == exp


def test_noether_current_conserved_on_continuous_solutions():
    g = SymmetryGenerator.rotation(CTX)
    I = noether_current(L0(), g)
    # D I = -sum_j E_j g_j identically
    el = euler_lagrange(L0())
    ident = total_derivative(I) + el[0] * HSeries({0: g.components[0]}, 0, CTX) \
        + el[1] * HSeries({0: g.components[1]}, 0, CTX)
    assert ident.is_zero()


def test_zero_generator_gives_zero_current():
    assert noether_current(L0(), SymmetryGenerator.zero(CTX)).is_zero()


def test_non_symmetry_raises():
    p1 = Expr.symbol(CTX, JetVar(1, 0))
    g = SymmetryGenerator((Expr.const(CTX, 1), Expr.zero(CTX)))  # translation in phi1
    with pytest.raises(NotASymmetryError):
        noether_current(L0(), g)
    with pytest.raises(ValueError):
        SymmetryGenerator((parse("d1phi1", CTX), p1))


def test_higher_order_noether_identity():
    """For a rotation-invariant second-order density, D I + sum E_j g_j = 0."""
    L = parse("(d2phi1^2+d2phi2^2)*V0 + (phi1*d1phi2-phi2*d1phi1)^2 + (d1phi1*d2phi2-d1phi2*d2phi1)", CTX)
    g = SymmetryGenerator.rotation(CTX)
    assert symmetry_defect(L, g).is_zero()
    I = noether_current(LagrangianDensity(HSeries({0: L}, 0, CTX)), g)
    el = euler_lagrange(L)
    s = total_derivative(I)
    for j in range(2):
        s = s + el[j] * HSeries({0: g.components[j]}, 0, CTX)
    assert s.is_zero()


def test_lagrangian_density_metadata():
    L = LagrangianDensity(HSeries({0: L0(), 2: parse("d3phi1*d1phi1", CTX)}, 2, CTX))
    assert L.n == 2
    assert L.max_jet == {0: 1, 2: 3}
    assert L.order() == 3
