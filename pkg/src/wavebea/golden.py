"""Published closed forms of the rotating-wave and P-series computations, checked against the pipeline.

Every identity is compared exactly: the difference of the computed and the
printed expression must reduce to zero in the rational function field.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .symcore import parse, to_text

NORM = "(phi1^2+phi2^2)"
VNORM = "(d1phi1^2+d1phi2^2)"

REDUCED_H0 = [
    "((alpha^2 + V1)*phi1 + 2*alpha*c*d1phi2)/(c^2 - 1)",
    "((alpha^2 + V1)*phi2 - 2*alpha*c*d1phi1)/(c^2 - 1)",
]

D_COEFFS = {
    "d1": "(2*alpha^2*V1*(dx^2-c^4*dt^2)+V1^2*(dx^2-c^4*dt^2)+alpha^4*((1-2*c^2)*dt^2+dx^2))/(24*(c^2-1)^2)",
    "d2": "(alpha^2*(-3*c^4*dt^2+c^2*(5*dx^2-3*dt^2)+dx^2)+(c^2-1)*V1*(c^4*dt^2-dx^2))/(12*(c^2-1)^2)",
    "d3": "alpha*c*(c^2*dt^2-dx^2)*(alpha^2+V1)/(3*(c^2-1)^2)",
    "d4": "V2*(c^4*dt^2-dx^2)/(6*(c^2-1))",
}
# monomial each d_k multiplies in the h^2 part of the on-shell Hamiltonian
D_MONOMIALS = {
    "d1": NORM,
    "d2": VNORM,
    "d3": "(d1phi1*phi2-d1phi2*phi1)",
    "d4": "(phi1*d1phi1+phi2*d1phi2)^2",
}

OMEGA_H0 = [
    ["0", "2*alpha*c", "1-c^2", "0"],
    ["-2*alpha*c", "0", "0", "1-c^2"],
    ["c^2-1", "0", "0", "0"],
    ["0", "c^2-1", "0", "0"],
]
W1 = "alpha*c/(3*(c^2-1))*(alpha*(dx^2-dt^2) + (dx^2-2*c^2*dt^2+c^4*dt^2)*(V1+(phi1^2+phi2^2)*V2))"
W2 = "alpha*c*(c^2*dt^2-dx^2)/(3*(c^2-1))"
Z_SWAP = "-alpha^2*(c^2*((c^2-3)*dt^2+dx^2)+dx^2)/(6*(c^2-1)^2) + (c^2-1)*(dx^2-c^4*dt^2)*V1/(6*(c^2-1)^2)"
Z_OUTER = "(c^4*dt^2-dx^2)*V2/(3*(c^2-1))"

B_ROT = {
    "b1": "alpha*c*(alpha^2*(dx^2-dt^2)+V1*(c^2*(c^2-2)*dt^2+dx^2))",
    "b2": "alpha*c*(c^2-1)*(c^2*dt^2-dx^2)",
    "b3": "alpha^2*(c^4*dt^2+c^2*(dx^2-3*dt^2)+dx^2)+(c^2-1)*V1*(c^4*dt^2-dx^2)",
}
B_ROT_MONOMIALS = {"b1": NORM, "b2": VNORM, "b3": "(d1phi2*phi1-d1phi1*phi2)"}

B_TREE = {
    "b1": "(-3*dt^4*c^8-2*dt^4*c^6+10*dt^2*dx^2*c^4-2*dx^4*c^2-3*dx^4)/2160",
    "b2": "(-2*dt^4*c^8-3*dt^4*c^6+10*dt^2*dx^2*c^4-3*dx^4*c^2-2*dx^4)/720",
    "b3": "(10*dt^6*c^12+22*dt^6*c^10+3*dt^6*c^8-77*dt^4*dx^2*c^8+28*dt^2*dx^4*c^6-28*dt^4*dx^2*c^6"
          "-3*dx^6*c^4+77*dt^2*dx^4*c^4-22*dx^6*c^2-10*dx^6)/302400",
    "b4": "(72*dt^6*c^12+94*dt^6*c^10+9*dt^6*c^8-413*dt^4*dx^2*c^8+112*dt^2*dx^4*c^6-112*dt^4*dx^2*c^6"
          "-9*dx^6*c^4+413*dt^2*dx^4*c^4-94*dx^6*c^2-72*dx^6)/120960",
}
_K = "(c^4*dt^2-dx^2)"
# a_{j,k} as printed, with the trees numbered as in ptrees.STANDARD_LISTING
A_TREE = {
    (2, 1): f"{_K}/(24*(c^2-1))",
    (2, 2): f"{_K}/(12*(c^2-1))",
    (4, 1): "b1/(c^2-1)^3",
    (4, 2): "6*b1/(c^2-1)^4",
    (4, 3): "b2/(c^2-1)^3",
    (4, 4): "3*b1/(c^2-1)^5",
    (6, 1): "b3/(c^2-1)^3",
    (6, 2): "60*b3/(c^2-1)^5",
    (6, 3): "10*b3/(c^2-1)^5",
    (6, 4): "b4/(c^2-1)^6",
    (6, 5): "2*b4/(c^2-1)^5",
    (6, 6): "45*b3/(c^2-1)^5",
    (6, 7): "20*b3/(c^2-1)^4",
    (6, 8): "b4/(c^2-1)^4",
    (6, 9): "15*b3/(c^2-1)^4",
    (6, 10): "15*b3/(c^2-1)^6",
}


def tree_coefficient_text(key) -> str:
    s = A_TREE[key]
    for name, val in B_TREE.items():
        s = s.replace(name, f"({val})")
    return s


@dataclass
class GoldenResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}" + (f"  [{self.detail}]" if self.detail and not self.ok else "")


@lru_cache(maxsize=None)
def rotating_pipeline(trunc: int = 2):
    from .hamstruct import modified_hamiltonian_structure
    from .stencil import rotating_problem

    return modified_hamiltonian_structure(rotating_problem(trunc=trunc))


@lru_cache(maxsize=None)
def rotating_invariant(trunc: int = 2):
    from .noether import rotation_invariant

    return rotation_invariant(rotating_pipeline(trunc))[1]


@lru_cache(maxsize=None)
def tree_fit(trunc: int = 6, dim: int = 2):
    from .modeq import modified_equation
    from .ptrees import fit_coefficients
    from .stencil import travelling_problem

    p = travelling_problem(dim=dim, trunc=trunc)
    _, _, red, _ = modified_equation(p)
    return p, fit_coefficients(red, p.values["c"], orders=tuple(range(2, trunc + 1, 2)))


def _cmp(name, computed, expected) -> GoldenResult:
    d = computed - expected
    if d.is_zero():
        return GoldenResult(name, True)
    return GoldenResult(name, False, "difference " + to_text(d)[:160])


def check_reduced_h0() -> list[GoldenResult]:
    pipe = rotating_pipeline(2)
    ctx = pipe.hs.ctx
    out = []
    for j, txt in enumerate(REDUCED_H0):
        out.append(_cmp(f"reduced h^0 component {j + 1}", pipe.reduced.rhs[j].coeff(0), parse(txt, ctx)))
    ok = all(r.ok for r in out)
    return [GoldenResult("reduced equation h^0", ok, "; ".join(r.detail for r in out if not r.ok))]


def check_hamiltonian() -> list[GoldenResult]:
    """Each d_k is isolated as the coefficient of its rotation-invariant monomial."""
    pipe = rotating_pipeline(2)
    ctx = pipe.hs.ctx
    H2 = pipe.hs.H.coeff(2)
    out = []
    for k in D_COEFFS:
        # H2 minus the other printed terms must equal d_k times its monomial
        others = parse(" + ".join(f"({D_COEFFS[m]})*{D_MONOMIALS[m]}" for m in D_COEFFS if m != k), ctx)
        out.append(_cmp(k, H2 - others, parse(f"({D_COEFFS[k]})*{D_MONOMIALS[k]}", ctx)))
    return out


def check_omega() -> list[GoldenResult]:
    pipe = rotating_pipeline(2)
    ctx = pipe.hs.ctx
    W = pipe.hs.omega
    ok0 = all((W[a][b].coeff(0) - parse(OMEGA_H0[a][b], ctx)).is_zero() for a in range(4) for b in range(4))
    out = [GoldenResult("omega h^0 block", ok0)]
    w1, w2 = parse(W1, ctx), parse(W2, ctx)
    J = [[0, 1], [-1, 0]]
    ok1 = all((W[i][j].coeff(2) - w1 * J[i][j]).is_zero() for i in range(2) for j in range(2))
    out.append(GoldenResult("w1", ok1, "" if ok1 else "computed " + to_text(W[0][1].coeff(2))[:160]))
    ok2 = all((W[2 + i][2 + j].coeff(2) - w2 * J[i][j]).is_zero() for i in range(2) for j in range(2))
    out.append(GoldenResult("w2", ok2, "" if ok2 else "computed " + to_text(W[2][3].coeff(2))[:160]))
    zs, zo = parse(Z_SWAP, ctx), parse(Z_OUTER, ctx)
    P = [["phi1^2", "phi1*phi2"], ["phi1*phi2", "phi2^2"]]
    S = [[0, 1], [1, 0]]
    okz = True
    for i in range(2):
        for j in range(2):
            z = zs * S[i][j] - zo * parse(P[i][j], ctx)
            okz &= (W[i][2 + j].coeff(2) - z).is_zero() and (W[2 + i][j].coeff(2) + z).is_zero()
    out.append(GoldenResult("Z", okz, "" if okz else "computed Z_11 " + to_text(W[0][2].coeff(2))[:160]))
    return out


def check_rotation_invariant() -> list[GoldenResult]:
    Ir = rotating_invariant(2)
    ctx = Ir.ctx
    I2 = Ir.coeff(2)
    out = []
    for k in B_ROT:
        others = parse(" + ".join(f"({B_ROT[m]})*{B_ROT_MONOMIALS[m]}" for m in B_ROT if m != k), ctx)
        pref = parse("1/(6*(c^2-1)^2)", ctx)
        out.append(_cmp(f"I_rot {k}", I2 - pref * others, pref * parse(f"({B_ROT[k]})*{B_ROT_MONOMIALS[k]}", ctx)))
    return out


def check_tree_coefficients(trunc: int = 6) -> list[GoldenResult]:
    p, a = tree_fit(trunc)
    out = []
    for key in sorted(A_TREE):
        if key[0] > trunc:
            continue
        got = a[key]
        exp = parse(tree_coefficient_text(key), p.ctx)
        r = _cmp(f"a_{key[0]},{key[1]}", got, exp)
        if not r.ok:
            r.detail = "computed " + to_text(got)[:160]
        out.append(r)
    return out


def run_all(trunc: int = 6) -> list[GoldenResult]:
    return (
        check_reduced_h0()
        + check_hamiltonian()
        + check_omega()
        + check_rotation_invariant()
        + check_tree_coefficients(trunc)
    )
