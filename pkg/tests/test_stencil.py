import pytest
import sympy

from conftest import sympy_equal, to_sympy
from wavebea.jetcalc import euler_lagrange
from wavebea.stencil import (
    ProblemError,
    StencilProblem,
    drop_null_terms,
    expand_discrete_lagrangian,
    expand_functional_equation,
    modified_pde,
    raw_discrete_lagrangian,
    rotating_problem,
    travelling_problem,
)
from wavebea.symcore import Expr, HSeries, JetVar, parse


def test_lagrangian_leading_term():
    p = rotating_problem(trunc=2)
    L = expand_discrete_lagrangian(p).L
    exp = parse("1/2*(alpha^2*(phi1^2+phi2^2) + 2*alpha*c*(phi1*d1phi2 - phi2*d1phi1)"
                " + (c^2-1)*(d1phi1^2+d1phi2^2) + V0)", p.ctx)
    assert L.coeff(0) == exp


def test_lagrangian_h2_contains_fourth_order_kinetic_correction():
    p = rotating_problem(trunc=2)
    L2 = expand_discrete_lagrangian(p).L.coeff(2)
    co = L2.coefficients()
    for j in (1, 2):
        m31 = parse(f"d3phi{j}*d1phi{j}", p.ctx).coefficients()
        m22 = parse(f"d2phi{j}^2", p.ctx).coefficients()
        (k31,), (k22,) = m31.keys(), m22.keys()
        # (c^4 dt^2 - dx^2)/24 * (4 phi''' phi' + 3 phi''^2)
        assert co[k31] == parse("(c^4*dt^2 - dx^2)/6", p.ctx)
        assert co[k22] == parse("(c^4*dt^2 - dx^2)/8", p.ctx)


def test_odd_powers_are_null_and_removed():
    p = rotating_problem(trunc=4)
    raw = raw_discrete_lagrangian(p)
    assert any(k % 2 for k in raw.terms), "raw expansion has odd-power terms"
    for k, v in raw.terms.items():
        if k % 2:
            assert all(e.is_zero() for e in euler_lagrange(v))
    L = expand_discrete_lagrangian(p).L
    assert all(k % 2 == 0 for k in L.terms)
    for a, b in zip(euler_lagrange(raw), euler_lagrange(L)):
        assert a.equal_to(b)


def test_drop_null_terms_removes_divergence():
    p = rotating_problem(trunc=2)
    L = expand_discrete_lagrangian(p).L
    div = HSeries({1: parse("phi1*d1phi1 + d2phi2*d1phi2", p.ctx)}, 2, p.ctx)
    assert drop_null_terms(L + div).L.equal_to(L)


def test_functional_equation_leading_term():
    p = rotating_problem(trunc=2)
    res = expand_functional_equation(p)
    exp = [
        "(alpha^2+V1)*phi1 + 2*alpha*c*d1phi2 - (c^2-1)*d2phi1",
        "(alpha^2+V1)*phi2 - 2*alpha*c*d1phi1 - (c^2-1)*d2phi2",
    ]
    for r, e in zip(res, exp):
        assert r.coeff(0) == parse(e, p.ctx)
    assert all(k % 2 == 0 for r in res for k in r.terms)


def test_functional_equation_against_sympy_series():
    """Oracle: sympy series in h of the exact rotating-wave stencil with jets as symbols."""
    N = 4
    p = rotating_problem(trunc=N)
    res = expand_functional_equation(p)
    h, a, c, dt, dx, V1 = sympy.symbols("h alpha c dt dx V1")
    K = N + 3
    jets = [[sympy.Symbol(f"d{k}phi{j}" if k else f"phi{j}") for k in range(K + 1)] for j in (1, 2)]

    def shifted(s):
        return [sum(jets[j][k] * s**k / sympy.factorial(k) for k in range(K + 1)) for j in range(2)]

    def rot(theta, v):
        # exp(theta J) with J v = (v2, -v1)
        return [sympy.cos(theta) * v[0] + sympy.sin(theta) * v[1],
                -sympy.sin(theta) * v[0] + sympy.cos(theta) * v[1]]

    fwd = rot(-a * h * dt, shifted(c * h * dt))
    bwd = rot(a * h * dt, shifted(-c * h * dt))
    xp, xm = shifted(h * dx), shifted(-h * dx)
    for j in range(2):
        phi = jets[j][0]
        diff = (fwd[j] - 2 * phi + bwd[j]) / dt**2 - (xp[j] - 2 * phi + xm[j]) / dx**2
        ser = sympy.expand(sympy.series(diff, h, 0, N + 3).removeO() / h**2)
        ser = -(ser - V1 * phi)
        for k in range(N + 1):
            assert sympy_equal(ser.coeff(h, k), to_sympy(res[j].coeff(k))), (j, k)


@pytest.mark.parametrize("problem", [
    rotating_problem(trunc=4),
    travelling_problem(dim=1, trunc=6),
    travelling_problem(dim=2, trunc=4),
], ids=["rotating-N4", "travelling-d1-N6", "travelling-d2-N4"])
def test_symmetric_criticality(problem):
    """Euler-Lagrange of the expanded Lagrangian equals the expanded functional equation."""
    L = expand_discrete_lagrangian(problem)
    res = expand_functional_equation(problem)
    for a, b in zip(euler_lagrange(L), res):
        assert (a - b).is_zero()


def test_non_rotating_static_stencil_h2():
    # alpha = 0, c = 0: only the spatial three-point difference remains
    p = StencilProblem(dim=1, alpha=0, c=0, potential="W", trunc=4)
    res = expand_functional_equation(p)[0]
    ctx = p.ctx
    assert res.coeff(0) == parse("d2phi1 + W_1", ctx)
    assert res.coeff(2) == parse("dx^2/12*d4phi1", ctx)
    assert res.coeff(4) == parse("dx^4/360*d6phi1", ctx)


def test_modified_pde_second_order():
    m = modified_pde(2, 2)
    exp = parse("u1_tt + dt^2/12*u1_tttt - u1_xx - dx^2/12*u1_xxxx - W_1", m.ctx)
    assert m.components[0] == exp


def test_modified_pde_fourth_order_coefficients():
    m = modified_pde(4, 4)
    c = m.components[0]
    assert c - parse("u1_tt + dt^2/12*u1_tttt - u1_xx - dx^2/12*u1_xxxx - W_1", m.ctx) \
        == parse("dt^4/360*u1_tttttt - dx^4/360*u1_xxxxxx", m.ctx)
    with pytest.raises(ValueError):
        modified_pde(6, 2)


def test_modified_pde_correction_cancels_on_light_cone():
    # u(x - t) with dt = dx: time and space derivatives agree and the h^2 terms cancel
    m = modified_pde(4, 4)
    ctx = m.ctx
    sub = {"u1_tt": parse("u1_xx", ctx), "u1_tttt": parse("u1_xxxx", ctx),
           "u1_tttttt": parse("u1_xxxxxx", ctx), "dt": parse("dx", ctx)}
    assert m.components[0].subs(sub) == parse("-W_1", ctx)


def test_rotation_equivariance():
    """Residual(R phi) = R Residual(phi) for a rational rotation."""
    p = rotating_problem(trunc=2, extra_params=("t",))
    ctx = p.ctx
    res = expand_functional_equation(p)
    co = parse("(1-t^2)/(1+t^2)", ctx)
    si = parse("2*t/(1+t^2)", ctx)
    K = max(r.max_jet_order() for r in res)
    sub = {}
    for k in range(K + 1):
        x, y = Expr.symbol(ctx, JetVar(1, k)), Expr.symbol(ctx, JetVar(2, k))
        sub[JetVar(1, k)] = co * x + si * y
        sub[JetVar(2, k)] = -si * x + co * y
    for n in res[0].terms:
        r1, r2 = res[0].coeff(n), res[1].coeff(n)
        assert r1.subs(sub) == co * r1 + si * r2
        assert r2.subs(sub) == -si * r1 + co * r2


def test_custom_stencil_matches_builtin():
    p = rotating_problem(trunc=2)
    custom = p.with_values(stencil=[
        ("c*dt", -1, "1/dt^2"), (0, 0, "-2/dt^2"), ("-c*dt", 1, "1/dt^2"),
        ("dx", 0, "-1/dx^2"), (0, 0, "2/dx^2"), ("-dx", 0, "-1/dx^2"),
    ])
    for a, b in zip(expand_functional_equation(p), expand_functional_equation(custom)):
        assert a.equal_to(b)
    with pytest.raises(ProblemError):
        raw_discrete_lagrangian(custom)


def test_inconsistent_stencil_rejected():
    p = rotating_problem(trunc=2, stencil=[("dx", 0, "1/dx^2"), (0, 0, "-3/dx^2"), ("-dx", 0, "1/dx^2")])
    with pytest.raises(ProblemError):
        expand_functional_equation(p)


@pytest.mark.parametrize("kw", [
    {"c": 1}, {"c": -1}, {"dim": 1, "alpha": "symbolic"}, {"potential": "X"}, {"dt": 0}, {"trunc": -2},
    {"potential": "W"},
])
def test_problem_validation(kw):
    with pytest.raises(ProblemError):
        StencilProblem(**kw)


def test_numeric_parameter_values():
    p = StencilProblem(dim=2, alpha="1/2", c=2, dt="dx", trunc=2)
    assert p.ctx.params == ("dx",)
    res = expand_functional_equation(p)
    assert res[0].coeff(0) == parse("(1/4+V1)*phi1 + 2*d1phi2 - 3*d2phi1", p.ctx)
