"""Exact linear algebra over the coefficient field and over h-series."""
from __future__ import annotations

from .expr import Expr, SymbolicError
from .series import HSeries


class SingularMatrixError(SymbolicError):
    """Leading matrix is not invertible over the coefficient field."""


class InconsistentSystemError(SymbolicError):
    """Linear system has no solution."""


class UnderdeterminedSystemError(SymbolicError):
    """Linear system has a nontrivial nullspace; ``nullspace`` holds a basis."""

    def __init__(self, message: str, nullspace: list):
        super().__init__(message)
        self.nullspace = nullspace


def _zero(ctx):
    return Expr.zero(ctx)


def invert(matrix: list[list[Expr]]) -> list[list[Expr]]:
    """Inverse of a square matrix by Gauss-Jordan elimination.

    Pivots must lie in the coefficient field; other entries may depend on
    jet variables.
    """
    n = len(matrix)
    ctx = matrix[0][0].ctx
    one = Expr.const(ctx, 1)
    a = [list(row) + [one if i == j else _zero(ctx) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not a[r][col].is_zero() and a[r][col].is_coefficient():
                piv = r
                break
        if piv is None:
            raise SingularMatrixError("leading matrix is singular over the coefficient field")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def matvec(m: list[list], v: list):
    out = []
    for row in m:
        acc = None
        for x, y in zip(row, v):
            t = x * y
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def solve_linear_series(A: list[list[HSeries]], rhs: list[HSeries]) -> list[HSeries]:
    """Solve ``A x = rhs`` for h-series order by order.

    ``x_k = A_0^{-1} (rhs_k - sum_{i>=1} A_i x_{k-i})``; the result is exact
    up to the minimum truncation order of the inputs.
    """
    n = len(rhs)
    ctx = rhs[0].ctx
    trunc = min([r.trunc for r in rhs] + [a.trunc for row in A for a in row])
    a0 = [[A[i][j].coeff(0) for j in range(n)] for i in range(n)]
    a0inv = invert(a0)
    xs: list[dict] = [dict() for _ in range(n)]
    for k in range(trunc + 1):
        resid = [rhs[i].coeff(k) for i in range(n)]
        for i in range(n):
            for j in range(n):
                for p, aij in A[i][j].terms.items():
                    if 1 <= p <= k and (k - p) in xs[j]:
                        resid[i] = resid[i] - aij * xs[j][k - p]
        sol = matvec(a0inv, resid)
        for j in range(n):
            if not sol[j].is_zero():
                xs[j][k] = sol[j]
    return [HSeries(x, trunc, ctx) for x in xs]


def solve_field_system(rows: list[list[Expr]], rhs: list[Expr], ctx=None) -> list[Expr]:
    """Solve an (over)determined linear system over the coefficient field.

    Raises :class:`InconsistentSystemError` or :class:`UnderdeterminedSystemError`.
    """
    if ctx is None:
        ctx = rhs[0].ctx if rhs else rows[0][0].ctx
    m = len(rows)
    n = len(rows[0]) if rows else 0
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if not a[i][col].is_zero()), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = a[r][col].inverse()
        a[r] = [x * inv for x in a[r]]
        for i in range(m):
            if i != r and not a[i][col].is_zero():
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if not a[i][n].is_zero():
            raise InconsistentSystemError("linear system is inconsistent")
    if len(pivots) < n:
        free = [c for c in range(n) if c not in pivots]
        basis = []
        for fcol in free:
            vec = [_zero(ctx) for _ in range(n)]
            vec[fcol] = Expr.const(ctx, 1)
            for i, pc in enumerate(pivots):
                vec[pc] = -a[i][fcol]
            basis.append(vec)
        raise UnderdeterminedSystemError(
            f"linear system is underdetermined ({len(free)} free unknowns)", basis
        )
    sol = [_zero(ctx) for _ in range(n)]
    for i, pc in enumerate(pivots):
        sol[pc] = a[i][n]
    return sol
