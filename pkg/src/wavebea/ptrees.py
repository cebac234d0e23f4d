"""Bicoloured trees, elementary differentials and the P-series Lagrangian ansatz.

A bicoloured tree here is a free tree whose white nodes are leaves. A black
node of degree ``k`` stands for a ``k``-th partial derivative of ``W``, a
white leaf for a factor ``phi'``, and every edge for a summation index. The
order of a tree is the sum of the degrees of its black nodes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .symcore import Context, Expr, HSeries, JetVar, WPartial
from .symcore.linalg import solve_field_system

BLACK, WHITE = "b", "w"

# Standard listing of trees (rooted bracket notation) used to number the
# coefficients a_{order,k}.
STANDARD_LISTING = {
    2: ["b(b)", "b(w,w)"],
    4: ["b(w,w,w,w)", "b(b(w,w))", "b(b(w),w)", "b(b(b))"],
    6: [
        "b(w,w,w,w,w,w)",
        "b(b(b,w),w)",
        "b(b(b(w)),w)",
        "b(b(b(b)))",
        "b(b(b(w,w)))",
        "b(b(w,w,b))",
        "b(b(w),w,w,w)",
        "b(b(w,w),w,w)",
        "b(b(w,w,w,w))",
        "b(b(b,b))",
    ],
}


class UnsupportedOrderError(ValueError):
    pass


@dataclass(frozen=True)
class BiTree:
    """Free tree given by node colours and an edge list."""

    colours: tuple
    edges: tuple

    def __post_init__(self):
        n = len(self.colours)
        if len(self.edges) != n - 1:
            raise ValueError("a tree on n nodes has n - 1 edges")
        for c in self.colours:
            if c not in (BLACK, WHITE):
                raise ValueError(f"unknown colour {c!r}")
        deg = self.degrees
        for i, c in enumerate(self.colours):
            if c == WHITE and deg[i] > 1:
                raise ValueError("white nodes must be leaves")
        if BLACK not in self.colours:
            raise ValueError("a tree needs at least one black node")
        seen = {0}
        stack = [0]
        adj = self.adjacency
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        if len(seen) != n:
            raise ValueError("edges do not connect all nodes")

    @cached_property
    def adjacency(self) -> list:
        adj = [[] for _ in self.colours]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    @cached_property
    def degrees(self) -> list:
        return [len(a) for a in self.adjacency]

    @property
    def order(self) -> int:
        return sum(d for d, c in zip(self.degrees, self.colours) if c == BLACK)

    def _rooted(self, root: int, parent: int = -1) -> str:
        kids = sorted(self._rooted(m, root) for m in self.adjacency[root] if m != parent)
        return self.colours[root] + ("(" + ",".join(kids) + ")" if kids else "")

    def _centres(self) -> list:
        n = len(self.colours)
        if n <= 2:
            return list(range(n))
        deg = list(self.degrees)
        leaves = [i for i in range(n) if deg[i] <= 1]
        left = n
        removed = set()
        while left > 2:
            left -= len(leaves)
            nxt = []
            for v in leaves:
                removed.add(v)
                for m in self.adjacency[v]:
                    if m not in removed:
                        deg[m] -= 1
                        if deg[m] == 1:
                            nxt.append(m)
            leaves = nxt
        return [i for i in range(n) if i not in removed]

    @cached_property
    def canonical(self) -> str:
        """Isomorphism-invariant string: minimal rooted form over the tree centres."""
        return min(self._rooted(c) for c in self._centres())

    def __eq__(self, other):
        return isinstance(other, BiTree) and self.canonical == other.canonical

    def __hash__(self):
        return hash(self.canonical)

    def bracket(self, root: int | None = None) -> str:
        """Rooted bracket notation; the default root is the first black node."""
        if root is None:
            root = self.colours.index(BLACK)
        return self._rooted(root)

    def ascii(self) -> str:
        """Indented drawing rooted at the first black node."""
        lines = []

        def walk(v, parent, depth):
            lines.append("  " * depth + ("*" if self.colours[v] == BLACK else "o"))
            for m in self.adjacency[v]:
                if m != parent:
                    walk(m, v, depth + 1)

        walk(self.colours.index(BLACK), -1, 0)
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"BiTree({self.bracket()})"


def parse_bracket(text: str) -> BiTree:
    """Build a tree from rooted bracket notation such as ``b(b(w),w)``."""
    colours: list = []
    edges: list = []
    pos = 0

    def node(parent):
        nonlocal pos
        if pos >= len(text) or text[pos] not in (BLACK, WHITE):
            raise ValueError(f"expected 'b' or 'w' at position {pos} in {text!r}")
        me = len(colours)
        colours.append(text[pos])
        if parent >= 0:
            edges.append((parent, me))
        pos += 1
        if pos < len(text) and text[pos] == "(":
            pos += 1
            node(me)
            while pos < len(text) and text[pos] == ",":
                pos += 1
                node(me)
            if pos >= len(text) or text[pos] != ")":
                raise ValueError(f"expected ')' at position {pos} in {text!r}")
            pos += 1

    node(-1)
    if pos != len(text):
        raise ValueError(f"trailing input at position {pos} in {text!r}")
    return BiTree(tuple(colours), tuple(edges))


def _grow(t: BiTree, at: int, colour: str) -> BiTree:
    n = len(t.colours)
    return BiTree(t.colours + (colour,), t.edges + ((at, n),))


def enumerate_trees(order: int) -> list[BiTree]:
    """All trees of the given even order, in the standard listing order."""
    if order not in STANDARD_LISTING:
        raise UnsupportedOrderError(f"tree order {order} not supported; use one of {sorted(STANDARD_LISTING)}")
    found = _enumerate_raw(order)
    listing = [parse_bracket(s) for s in STANDARD_LISTING[order]]
    if set(listing) != set(found) or len(listing) != len(found):
        raise RuntimeError("standard listing does not match the enumeration")
    return listing


def _enumerate_raw(order: int) -> list[BiTree]:
    """Breadth-first growth from a single black node, deduplicated by canonical form."""
    frontier = {BiTree((BLACK,), ())}
    out = set()
    while frontier:
        nxt = set()
        for t in frontier:
            o = t.order
            if o == order:
                out.add(t)
                continue
            for v, c in enumerate(t.colours):
                if c != BLACK:
                    continue
                if o + 1 <= order:
                    nxt.add(_grow(t, v, WHITE))
                if o + 2 <= order:
                    nxt.add(_grow(t, v, BLACK))
        frontier = nxt
    return sorted(out, key=lambda t: t.canonical)


def count_trees(order: int) -> int:
    return len(_enumerate_raw(order))


def elementary_differential(t: BiTree, ctx: Context) -> Expr:
    """Full index contraction of ``t`` over ``1..ctx.dim``.

    Needs a context with a general potential ``W``.
    """
    if ctx.potential != "W":
        raise ValueError("elementary differentials need a general potential W")
    d = ctx.dim
    out = Expr.zero(ctx)
    m = len(t.edges)
    inc = [[k for k, e in enumerate(t.edges) if v in e] for v in range(len(t.colours))]
    for idx in itertools.product(range(1, d + 1), repeat=m):
        term = Expr.const(ctx, 1)
        for v, c in enumerate(t.colours):
            ks = tuple(idx[k] for k in inc[v])
            if c == BLACK:
                term = term * Expr.symbol(ctx, WPartial(ks))
            else:
                term = term * Expr.symbol(ctx, JetVar(ks[0], 1))
        out = out + term
    return out


# -- P-series fitting --------------------------------------------------------------


def base_lagrangian(ctx: Context, c: Expr) -> Expr:
    """``(c^2-1)/2 |phi'|^2 + W``."""
    out = Expr.symbol(ctx, "W")
    for j in range(1, ctx.dim + 1):
        v = Expr.symbol(ctx, JetVar(j, 1))
        out = out + (c * c - 1) / 2 * v * v
    return out


def _split_rows(exprs: list, keys: dict) -> dict:
    """Collect non-parameter monomials into rows."""
    for col, e in enumerate(exprs):
        for mono, coef in e.coefficients().items():
            keys.setdefault(mono, {})[col] = coef
    return keys


def fit_coefficients(reduced, c: Expr, orders=(2, 4, 6)) -> dict:
    """Coefficients ``a[(order, k)]`` of ``L = L0 + sum h^order sum_k a F_k``.

    Fits, order by order, the Euler-Lagrange equations of the ansatz solved
    for ``phi''`` to the given reduced equation. Each order is a linear
    system over the coefficient field (underdetermined or inconsistent
    systems raise).
    """
    from .hamstruct import reduced_from_lagrangian
    from .jetcalc import euler_lagrange
    from .modeq import JetSubstitution

    ctx = reduced.ctx
    n = ctx.dim
    L0 = base_lagrangian(ctx, c)
    lag = {0: L0}
    # leading coefficient of phi'' in E(L0) is -(c^2 - 1)
    minv = (c * c - 1).inverse()
    g0 = JetSubstitution([HSeries({0: r.coeff(0)}, 0, ctx) for r in reduced.rhs], 0)
    out = {}
    for order in orders:
        if order > reduced.trunc:
            break
        trees = enumerate_trees(order)
        F = [elementary_differential(t, ctx) for t in trees]
        base = reduced_from_lagrangian(HSeries(lag, order, ctx))
        # contribution of h^order * F_k to the h^order rhs: E(F_k)/(c^2-1) at h^0 jets
        cols = []
        for f in F:
            el = euler_lagrange(HSeries({0: f}, 0, ctx))
            cols.append([(minv * g0.apply_expr(e.coeff(0), 0).coeff(0)) for e in el])
        target = [reduced.rhs[j].coeff(order) - base.rhs[j].coeff(order) for j in range(n)]
        keys: dict = {}
        for j in range(n):
            comp = {}
            _split_rows([cols[k][j] for k in range(len(F))], comp)
            for mono, coef in target[j].coefficients().items():
                comp.setdefault(mono, {})["rhs"] = coef
            for mono, row in comp.items():
                keys[(j, mono)] = row
        rows, rhs = [], []
        for key in sorted(keys):
            row = keys[key]
            rows.append([row.get(k, Expr.zero(ctx)) for k in range(len(F))])
            rhs.append(row.get("rhs", Expr.zero(ctx)))
        sol = solve_field_system(rows, rhs, ctx)
        acc = Expr.zero(ctx)
        for k, (a, f) in enumerate(zip(sol, F), start=1):
            out[(order, k)] = a
            acc = acc + a * f
        lag[order] = acc
    return out


def pseries_lagrangian(coeffs: dict, ctx: Context, c: Expr, trunc: int) -> HSeries:
    """Assemble ``L0 + sum h^order a F`` from fitted coefficients."""
    terms = {0: base_lagrangian(ctx, c)}
    for (order, k), a in coeffs.items():
        if order > trunc:
            continue
        f = elementary_differential(enumerate_trees(order)[k - 1], ctx)
        terms[order] = terms[order] + a * f if order in terms else a * f
    return HSeries(terms, trunc, ctx)


# -- characteristic functions ------------------------------------------------------


@dataclass
class CharacteristicPair:
    """``rho`` and ``sigma`` as lists of ``(exponent, coefficient)``."""

    rho: list
    sigma: list
    step: Expr

    def rho_at_one(self) -> Expr:
        out = Expr.zero(self.step.ctx)
        for _, c in self.rho:
            out = out + c
        return out


def characteristic_functions(p) -> CharacteristicPair:
    """Non-polynomial characteristic functions of the non-rotating stencil.

    Exponents ``0, 1/2 -+ dx/(2 c dt), 1/2, 1`` with step ``ds = 2 c dt``;
    coinciding exponents (``dx = c dt``) are merged.
    """
    v = p.values
    if not v["alpha"].is_zero():
        raise ValueError("characteristic functions need alpha = 0")
    c, dt, dx = v["c"], v["dt"], v["dx"]
    if c.is_zero():
        raise ValueError("characteristic functions need c != 0")
    ctx = p.ctx
    one = Expr.const(ctx, 1)
    half = one / 2
    r = c * c * dt * dt / (dx * dx)
    q = dx / (2 * c * dt)
    raw = [
        (Expr.zero(ctx), 4 * c * c),
        (half - q, -4 * r),
        (half, 8 * (r - c * c)),
        (half + q, -4 * r),
        (one, 4 * c * c),
    ]
    merged: list = []
    for e, w in raw:
        for i, (e2, w2) in enumerate(merged):
            if (e - e2).is_zero():
                merged[i] = (e2, w2 + w)
                break
        else:
            merged.append((e, w))
    merged = [(e, w) for e, w in merged if not w.is_zero()]
    return CharacteristicPair(merged, [(half, one)], 2 * c * dt)


def characteristic_expansion(p, cp: CharacteristicPair, trunc: int) -> list[HSeries]:
    """``rho(e^{h ds D}) phi - h^2 ds^2 sigma(e^{h ds D}) grad W`` expanded about ``xi``.

    The multistep origin sits at ``xi - ds/2``, so exponent ``e`` maps to the
    offset ``(e - 1/2) ds``.
    """
    from .stencil import rotated_shift

    ctx = p.ctx
    half = Expr.const(ctx, Fraction(1, 2))
    acc = [HSeries.zero(ctx, trunc) for _ in range(ctx.dim)]
    for e, w in cp.rho:
        rs = rotated_shift(p, (e - half) * cp.step, 0, trunc)
        acc = [a + s * w for a, s in zip(acc, rs)]
    grad = p.grad_potential()
    for e, w in cp.sigma:
        if not (e - half).is_zero():
            raise NotImplementedError("only sigma supported at the midpoint")
        for j in range(ctx.dim):
            acc[j] = acc[j] - HSeries({2: cp.step * cp.step * w * grad[j]}, trunc, ctx)
    return acc
