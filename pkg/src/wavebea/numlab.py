"""Numeric backend: compiled evaluators, implicit midpoint, multistep stepping and order studies."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import sympy
from scipy.integrate import solve_ivp

from .symcore import Context, Expr, HSeries, to_text


class UnboundParameterError(KeyError):
    pass


class NumericFailure(RuntimeError):
    """Fixed-point or nonlinear-solve failure in a numeric run."""


# -- potentials --------------------------------------------------------------------


class Potential:
    """Concrete potential with derivatives obtained by sympy and lambdified.

    ``kind="V"``: radial ``V(s)`` with ``s = |phi|^2``; ``kind="W"``: general
    ``W(x1, ..., xd)``.
    """

    def __init__(self, expr, kind: str = "V", dim: int = 2, name: str = ""):
        if kind not in ("V", "W"):
            raise ValueError(f"unknown potential kind {kind!r}")
        self.kind = kind
        self.dim = dim
        self.expr = sympy.sympify(expr)
        self.name = name or str(self.expr)
        if kind == "V":
            self.args = (sympy.Symbol("s"),)
        else:
            self.args = tuple(sympy.Symbol(f"x{i}") for i in range(1, dim + 1))
        extra = self.expr.free_symbols - set(self.args)
        if extra:
            raise ValueError(f"potential has unbound symbols {sorted(map(str, extra))}")
        self._cache: dict = {}

    def _fn(self, key):
        if key not in self._cache:
            if self.kind == "V":
                d = sympy.diff(self.expr, self.args[0], key) if key else self.expr
            else:
                d = self.expr
                for i in key:
                    d = sympy.diff(d, self.args[i - 1])
            self._cache[key] = sympy.lambdify(self.args, d, "numpy")
        return self._cache[key]

    def radial(self, m: int, s):
        if self.kind != "V":
            raise ValueError("radial derivatives need a radial potential")
        return self._fn(m)(s) + 0.0 * s

    def partial(self, idx: tuple, x):
        if self.kind != "W":
            raise ValueError("partials need a general potential")
        return self._fn(tuple(sorted(idx)))(*x) + 0.0 * x[0]

    def __repr__(self):
        return f"Potential({self.name}, kind={self.kind})"

    @classmethod
    def polynomial(cls, coeffs, name: str = "") -> "Potential":
        """``V(s) = sum_k coeffs[k] s^k``."""
        s = sympy.Symbol("s")
        return cls(sum(sympy.nsimplify(c) * s**k for k, c in enumerate(coeffs)), "V", 2, name)

    @classmethod
    def gaussian_well(cls) -> "Potential":
        """``V(a) = -exp(-(a-1)^2)``."""
        s = sympy.Symbol("s")
        return cls(-sympy.exp(-((s - 1) ** 2)), "V", 2, "gaussian_well")

    @classmethod
    def from_text(cls, text: str, kind: str = "V", dim: int = 2) -> "Potential":
        return cls(sympy.sympify(text), kind, dim, text)


POTENTIALS = {
    "fig4": lambda: Potential.polynomial([0, Fraction(-1, 2), -1], "-a/2 - a^2"),
    "fig5": lambda: Potential.polynomial([0, 1, 0, 0, Fraction(-1, 10)], "-0.1 s^4 + s"),
    "fig7": lambda: Potential.polynomial([0, 0, 1], "s^2"),
    "gaussian_well": Potential.gaussian_well,
}


@dataclass
class NumericBinding:
    """Parameter values, the series parameter ``h`` and a concrete potential."""

    values: dict
    potential: Potential | None = None
    h: float = 1.0

    def __post_init__(self):
        self.values = {k: float(v) for k, v in self.values.items()}
        c = self.values.get("c")
        if c is not None and abs(abs(c) - 1.0) < 1e-14:
            raise ValueError("|c| = 1 is degenerate")

    def value(self, name: str) -> float:
        try:
            return self.values[name]
        except KeyError:
            raise UnboundParameterError(f"parameter {name!r} is not bound") from None

    def as_dict(self) -> dict:
        return {"values": dict(self.values), "h": self.h, "potential": getattr(self.potential, "name", None)}


# -- compilation -------------------------------------------------------------------


def _fq(c) -> float:
    return int(c.p) / int(c.q) if hasattr(c, "p") else float(c)


def _scalar_table(ctx: Context, b: NumericBinding) -> dict:
    table = {ctx.h_index: b.h}
    for i, p in enumerate(ctx.params):
        if p in b.values:
            table[i] = b.values[p]
    return table


def _eval_coefficient(ctx: Context, poly, table: dict) -> float:
    """Value of a parameter-only polynomial."""
    tot = 0.0
    for exps, c in poly.to_dict().items():
        t = _fq(c)
        for i, d in enumerate(exps):
            if d:
                if i not in table:
                    raise UnboundParameterError(f"parameter {ctx.names[i]!r} is not bound")
                t *= table[i] ** int(d)
        tot += t
    return tot


def _numeric_terms(e: Expr, b: NumericBinding) -> list[tuple[float, tuple]]:
    """Monomials of ``e`` with parameters (and h) folded into float coefficients."""
    ctx = e.ctx
    table = _scalar_table(ctx, b)
    den = _eval_coefficient(ctx, e.den_poly(), table)
    if den == 0.0:
        raise ZeroDivisionError(f"denominator of {to_text(e)[:60]} vanishes at the bound parameters")
    groups: dict = {}
    first = ctx.aux_index + 1
    for exps, c in e.num.to_dict().items():
        t = _fq(c)
        for i in range(first):
            d = exps[i]
            if d:
                if i not in table:
                    raise UnboundParameterError(f"parameter {ctx.names[i]!r} is not bound")
                t *= table[i] ** int(d)
        key = tuple((i, int(exps[i])) for i in range(first, len(exps)) if exps[i])
        groups[key] = groups.get(key, 0.0) + t / den
    return [(v, k) for k, v in groups.items() if v != 0.0]


class CompiledExprs:
    """Generated Python evaluator for a list of expressions.

    Call with ``J`` of shape ``(n, K+1, ...)`` holding the jet values.
    """

    def __init__(self, exprs: list, b: NumericBinding):
        if not exprs:
            raise ValueError("nothing to compile")
        self.ctx: Context = exprs[0].ctx
        self.binding = b
        ctx = self.ctx
        terms = [_numeric_terms(e, b) for e in exprs]
        used = sorted({i for t in terms for _, mono in t for i, _ in mono})
        self.max_jet = max([ctx.kinds[i][2] for i in used if ctx.kinds[i][0] == "jet"] + [0])
        self.v_orders = sorted({ctx.kinds[i][1] for i in used if ctx.kinds[i][0] == "V"})
        self.w_indices = sorted({ctx.kinds[i][1] for i in used if ctx.kinds[i][0] == "W"})
        for i in used:
            if ctx.kinds[i][0] == "extra":
                raise UnboundParameterError(f"symbol {ctx.names[i]!r} has no numeric meaning")
        if (self.v_orders or self.w_indices) and b.potential is None:
            raise UnboundParameterError("expression needs a potential but none is bound")
        lines = ["def _f(J, V, Wd):"]
        for i in used:
            k = ctx.kinds[i]
            if k[0] == "jet":
                lines.append(f"    x{i} = J[{k[1] - 1}][{k[2]}]")
            elif k[0] == "V":
                lines.append(f"    x{i} = V[{k[1]}]")
            else:
                lines.append(f"    x{i} = Wd[{k[1]!r}]")
        powers = sorted({(i, d) for t in terms for _, mono in t for i, d in mono if d > 1})
        for i, d in powers:
            lines.append(f"    x{i}_{d} = x{i}**{d}")
        outs = []
        for r, t in enumerate(terms):
            lines.append(f"    r{r} = 0.0")
            for coef, mono in t:
                factors = [repr(coef)] + [f"x{i}" if d == 1 else f"x{i}_{d}" for i, d in mono]
                lines.append(f"    r{r} += " + "*".join(factors))
            outs.append(f"r{r}")
        lines.append(f"    return ({', '.join(outs)},)")
        self.source = "\n".join(lines)
        ns: dict = {}
        exec(compile(self.source, "<wavebea-compiled>", "exec"), ns)
        self._f = ns["_f"]

    def potential_values(self, J):
        pot = self.binding.potential
        n = self.ctx.dim
        V, Wd = {}, {}
        if self.v_orders:
            s = sum(J[j][0] * J[j][0] for j in range(n))
            for m in self.v_orders:
                V[m] = pot.radial(m, s)
        if self.w_indices:
            x = [J[j][0] for j in range(n)]
            for idx in self.w_indices:
                Wd[idx] = pot.partial(idx, x)
        return V, Wd

    def __call__(self, J):
        V, Wd = self.potential_values(J)
        return self._f(J, V, Wd)


def compile_expr(e: Expr, b: NumericBinding):
    """Evaluator returning a single value."""
    ce = CompiledExprs([e], b)
    return lambda J: ce(J)[0]


def evaluate_direct(e: Expr, b: NumericBinding, J) -> float:
    """Reference evaluation by walking the monomials (no code generation)."""
    ctx = e.ctx
    table = _scalar_table(ctx, b)
    pot = b.potential
    n = ctx.dim
    s = sum(J[j][0] * J[j][0] for j in range(n))
    tot = 0.0
    for exps, c in e.num.to_dict().items():
        t = _fq(c)
        for i, d in enumerate(exps):
            if not d:
                continue
            k = ctx.kinds[i]
            if i in table:
                x = table[i]
            elif k[0] == "jet":
                x = J[k[1] - 1][k[2]]
            elif k[0] == "V":
                x = pot.radial(k[1], s)
            elif k[0] == "W":
                x = pot.partial(k[1], [J[j][0] for j in range(n)])
            else:
                raise UnboundParameterError(ctx.names[i])
            t *= x ** int(d)
        tot += t
    return tot / _eval_coefficient(ctx, e.den_poly(), table)


def collapse(s: HSeries, upto: int | None = None) -> Expr:
    """``sum_{k <= upto} h^k s_k`` as a single expression in ``h``."""
    ctx = s.ctx
    upto = s.trunc if upto is None else upto
    hh = Expr.symbol(ctx, ctx.h_index)
    out = Expr.zero(ctx)
    for k, v in sorted(s.terms.items()):
        if k <= upto:
            out = out + v * hh**k if k else out + v
    return out


def first_jet(z, n: int):
    """Jet array ``(n, 2, ...)`` from a state ``(phi, phi')``."""
    z = np.asarray(z, dtype=float)
    return [[z[j], z[n + j]] for j in range(n)]


# -- trajectories ------------------------------------------------------------------


@dataclass
class Trajectory:
    xi: np.ndarray
    states: np.ndarray
    channels: dict = field(default_factory=dict)
    labels: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if len(self.xi) > 1 and not np.all(np.diff(self.xi) > 0):
            raise ValueError("grid must be strictly increasing")
        if len(self.states) != len(self.xi):
            raise ValueError("states and grid differ in length")
        for k, v in self.channels.items():
            if len(v) != len(self.xi):
                raise ValueError(f"channel {k!r} has the wrong length")

    def drift(self, name: str) -> float:
        v = np.asarray(self.channels[name])
        v = v[np.isfinite(v)]
        return float(np.max(np.abs(v - v[0])))

    def amplitude(self, name: str) -> float:
        v = np.asarray(self.channels[name])
        v = v[np.isfinite(v)]
        return float(np.max(v) - np.min(v))

    def to_csv(self, path) -> None:
        labels = list(self.labels) or [f"z{i}" for i in range(self.states.shape[1])]
        names = sorted(self.channels)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi"] + labels + names)
            for i, x in enumerate(self.xi):
                row = [repr(float(x))] + [repr(float(v)) for v in self.states[i]]
                row += [repr(float(self.channels[k][i])) for k in names]
                w.writerow(row)


def content_hash(items) -> str:
    h = hashlib.sha256()
    for it in items:
        h.update((it if isinstance(it, str) else to_text(it)).encode())
        h.update(b"\n")
    return h.hexdigest()


def write_manifest(path, binding: NumericBinding, settings: dict, symbolic_hash: str) -> dict:
    from . import __version__

    data = {
        "version": __version__,
        "binding": binding.as_dict(),
        "settings": settings,
        "symbolic_hash": symbolic_hash,
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


# -- integrators -------------------------------------------------------------------


def integrate_midpoint(
    f,
    x0,
    span: tuple,
    step: float,
    fp_tol: float = 1e-14,
    fp_maxiter: int = 100,
    observables: dict | None = None,
    labels: tuple = (),
) -> Trajectory:
    """Implicit midpoint rule; the stage equation is solved by fixed-point iteration.

    Convergence is declared when the update is below ``fp_tol * (1 + |z|)``.
    """
    t0, t1 = span
    nsteps = int(round((t1 - t0) / step))
    if nsteps < 1 or abs(nsteps * step - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError("span must be an integer multiple of the step")
    z = np.array(x0, dtype=float)
    out = np.empty((nsteps + 1, z.size))
    out[0] = z
    for i in range(nsteps):
        z1 = z + step * np.asarray(f(z))
        for it in range(fp_maxiter):
            z2 = z + step * np.asarray(f(0.5 * (z + z1)))
            d = np.max(np.abs(z2 - z1))
            z1 = z2
            if d <= fp_tol * (1.0 + np.max(np.abs(z1))):
                break
        else:
            raise NumericFailure(f"fixed-point iteration did not converge at step {i}")
        z = z1
        out[i + 1] = z
    xi = t0 + step * np.arange(nsteps + 1)
    ch = {}
    for name, g in (observables or {}).items():
        ch[name] = np.array([g(s) for s in out])
    return Trajectory(xi, out, ch, labels)


def integrate_accurate(f, x0, times, rtol=1e-13, atol=1e-15) -> np.ndarray:
    """High-accuracy reference solution (DOP853) sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    sol = solve_ivp(lambda t, z: f(z), (times[0], times[-1]), np.asarray(x0, float),
                    method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericFailure(sol.message)
    return sol.y.T


# -- rotating-wave model -----------------------------------------------------------


class RotatingModel:
    """Compiled reduced equation and invariants of the rotating travelling wave.

    ``z = (phi1, phi2, phi1', phi2')``; the continuous Darboux variables are
    ``q = phi`` and ``p = (c^2-1) phi' - c alpha J phi``.
    """

    def __init__(self, binding: NumericBinding, trunc: int = 2, pipeline=None):
        from .hamstruct import modified_hamiltonian_structure
        from .noether import rotation_invariant
        from .stencil import rotating_problem

        self.binding = binding
        self.N = trunc
        if pipeline is None:
            pipeline = _cached_pipeline(trunc)
        self.pipe = pipeline
        b = binding
        red = pipeline.reduced
        self.rhs = CompiledExprs([collapse(r, trunc) for r in red.rhs], b)
        H = pipeline.hs.H
        _, Ir = rotation_invariant(pipeline)
        self.Ir = Ir
        orders = list(range(0, trunc + 1, 2))
        self.H_by_order = {k: CompiledExprs([collapse(H, k)], b) for k in orders}
        self.I_by_order = {k: CompiledExprs([collapse(Ir, k)], b) for k in orders}
        self.c = b.value("c")
        self.alpha = b.value("alpha")
        self.symbolic_hash = content_hash([to_text(collapse(r, trunc)) for r in red.rhs])

    # vector fields
    def phi_field(self, z):
        J = first_jet(z, 2)
        a = self.rhs(J)
        return np.array([z[2], z[3], a[0], a[1]])

    def to_darboux(self, z):
        c, al = self.c, self.alpha
        q = np.array([z[0], z[1]])
        v = np.array([z[2], z[3]])
        Jq = np.array([q[1], -q[0]])
        return np.concatenate([q, (c * c - 1) * v - c * al * Jq])

    def from_darboux(self, y):
        c, al = self.c, self.alpha
        q = np.array([y[0], y[1]])
        p = np.array([y[2], y[3]])
        Jq = np.array([q[1], -q[0]])
        return np.concatenate([q, (p + c * al * Jq) / (c * c - 1)])

    def darboux_field(self, y):
        c, al = self.c, self.alpha
        z = self.from_darboux(y)
        dz = self.phi_field(z)
        Jv = np.array([dz[1], -dz[0]])
        return np.concatenate([dz[:2], (c * c - 1) * dz[2:] - c * al * Jv])

    def H(self, z, order: int) -> float:
        return self.H_by_order[order](first_jet(z, 2))[0]

    def I(self, z, order: int) -> float:
        return self.I_by_order[order](first_jet(z, 2))[0]

    def observables(self, darboux: bool = False) -> dict:
        conv = self.from_darboux if darboux else (lambda z: z)
        out = {}
        for k in self.H_by_order:
            out[f"H{k}"] = (lambda y, k=k: self.H(conv(y), k))
            out[f"I{k}"] = (lambda y, k=k: self.I(conv(y), k))
        return out


@lru_cache(maxsize=8)
def _cached_pipeline(trunc: int):
    from .hamstruct import modified_hamiltonian_structure
    from .stencil import rotating_problem

    return modified_hamiltonian_structure(rotating_problem(trunc=trunc))


def run_midpoint(model: RotatingModel, y0, span, step, fp_tol=1e-14, fp_maxiter=100) -> Trajectory:
    """Midpoint integration in the continuous Darboux variables ``(q, p)``."""
    tr = integrate_midpoint(
        model.darboux_field, y0, span, step, fp_tol, fp_maxiter,
        model.observables(darboux=True), labels=("q1", "q2", "p1", "p2"),
    )
    tr.meta.update({"integrator": "implicit midpoint", "coordinates": "darboux", "trunc": model.N})
    return tr


# -- multistep stepping of the functional equation ----------------------------------


def _rational(x: float, what: str, max_den: int = 1000) -> Fraction:
    fr = Fraction(x).limit_denominator(max_den)
    if abs(float(fr) - x) > 1e-12 * max(1.0, abs(x)):
        raise ValueError(f"{what} = {x} is not a rational number with denominator <= {max_den}")
    return fr


@dataclass
class MultistepGrid:
    tau: float
    k: int  # c dt h = k tau
    l: int  # dx h = l tau

    @property
    def reach(self) -> int:
        return max(self.k, self.l)


def multistep_grid(b: NumericBinding, refine: int = 1) -> MultistepGrid:
    c, dt, dx, h = b.value("c"), b.value("dt"), b.value("dx"), b.h
    if c == 0:
        raise ValueError("multistep stepping needs c != 0")
    r = _rational(abs(c) * dt / dx, "c dt / dx")
    k, l = r.numerator * refine, r.denominator * refine
    return MultistepGrid(abs(c) * dt * h / k, k, l)


def _rotation(theta: float) -> np.ndarray:
    """``exp(theta J)`` with ``J = [[0, 1], [-1, 0]]``."""
    return np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]])


def functional_residual(b: NumericBinding, grid: MultistepGrid, phi: np.ndarray, i: int):
    """Residual of the discrete equation centred at grid index ``i`` and its scale."""
    c, dt, dx, h, al = b.value("c"), b.value("dt"), b.value("dx"), b.h, b.value("alpha")
    sgn = 1 if c > 0 else -1
    k, l = grid.k, grid.l
    Rm, Rp = _rotation(-h * dt * al), _rotation(h * dt * al)
    it, ix = 1 / (h * dt) ** 2, 1 / (h * dx) ** 2
    fwd, bwd = (i + k, i - k) if sgn > 0 else (i - k, i + k)
    s = float(np.dot(phi[i], phi[i]))
    grad = b.potential.radial(1, s) * phi[i]
    parts = [
        it * Rm @ phi[fwd], -2 * it * phi[i], it * Rp @ phi[bwd],
        -ix * phi[i + l], 2 * ix * phi[i], -ix * phi[i - l], -grad,
    ]
    res = sum(parts)
    scale = sum(np.abs(p) for p in parts)
    return res, scale


def multistep_functional(b: NumericBinding, seeds: np.ndarray, grid: MultistepGrid, n_points: int) -> Trajectory:
    """Advance the functional equation as an explicit recurrence for the newest point.

    ``seeds`` holds ``phi`` at the first ``2 * reach`` grid points. Requires
    ``c > 0``.
    """
    c, dt, dx, h, al = b.value("c"), b.value("dt"), b.value("dx"), b.h, b.value("alpha")
    if c <= 0:
        raise ValueError("multistep stepping is implemented for c > 0")
    L = grid.reach
    seeds = np.asarray(seeds, dtype=float)
    if len(seeds) < 2 * L:
        raise ValueError(f"need {2 * L} seed values, got {len(seeds)}")
    if b.potential is None or b.potential.kind != "V":
        raise ValueError("multistep stepping needs a radial potential")
    k, l = grid.k, grid.l
    Rm, Rp = _rotation(-h * dt * al), _rotation(h * dt * al)
    it, ix = 1 / (h * dt) ** 2, 1 / (h * dx) ** 2
    A = np.zeros((2, 2))
    if k == L:
        A += it * Rm
    if l == L:
        A -= ix * np.eye(2)
    Ainv = np.linalg.inv(A)
    phi = np.empty((n_points, 2))
    phi[: len(seeds)] = seeds[:n_points]
    for j in range(len(seeds), n_points):
        i = j - L
        rest = -2 * it * phi[i] + it * Rp @ phi[i - k] + 2 * ix * phi[i] - ix * phi[i - l]
        if k != L:
            rest = rest + it * Rm @ phi[i + k]
        if l != L:
            rest = rest - ix * phi[i + l]
        s = float(np.dot(phi[i], phi[i]))
        rest = rest - b.potential.radial(1, s) * phi[i]
        phi[j] = -Ainv @ rest
        if not np.all(np.isfinite(phi[j])):
            raise NumericFailure(f"multistep recurrence blew up at index {j}")
    xi = grid.tau * np.arange(n_points)
    return Trajectory(xi, phi, {}, ("phi1", "phi2"), {"tau": grid.tau, "k": k, "l": l})


def max_relative_residual(b: NumericBinding, grid: MultistepGrid, tr: Trajectory) -> float:
    L = grid.reach
    worst = 0.0
    for i in range(L, len(tr.xi) - L):
        res, scale = functional_residual(b, grid, tr.states, i)
        worst = max(worst, float(np.max(np.abs(res) / np.maximum(scale, 1e-300))))
    return worst


def central_difference_weights(half: int) -> np.ndarray:
    """First-derivative central weights on ``-half..half`` (order ``2 half``)."""
    offs = np.arange(-half, half + 1, dtype=float)
    V = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def derivative_from_grid(values: np.ndarray, tau: float, half: int = 4) -> np.ndarray:
    """Central finite-difference derivative; edges are NaN."""
    w = central_difference_weights(half)
    out = np.full_like(values, np.nan)
    for i in range(half, len(values) - half):
        out[i] = np.tensordot(w, values[i - half: i + half + 1], axes=(0, 0)) / tau
    return out


def seed_from_modified(model: RotatingModel, z0, grid: MultistepGrid, count: int) -> np.ndarray:
    times = grid.tau * np.arange(count)
    sol = integrate_accurate(model.phi_field, z0, times)
    return sol[:, :2]


def stepping_experiment(b: NumericBinding, z0, span_end: float, seed_order: int = 4,
                        obs_orders=(0, 2, 4), refine: int = 1) -> Trajectory:
    """Seed from the modified equation, step the functional equation, evaluate invariants."""
    grid = multistep_grid(b, refine)
    seeder = RotatingModel(b, seed_order)
    L = grid.reach
    n = int(round(span_end / grid.tau)) + 1
    seeds = seed_from_modified(seeder, z0, grid, 2 * L)
    tr = multistep_functional(b, seeds, grid, n)
    dphi = derivative_from_grid(tr.states, grid.tau)
    states = np.concatenate([tr.states, dphi], axis=1)
    obs = RotatingModel(b, max(obs_orders)) if max(obs_orders) != seed_order else seeder
    ch = {}
    ok = np.all(np.isfinite(states), axis=1)
    for k in obs_orders:
        hk = np.full(len(states), np.nan)
        ik = np.full(len(states), np.nan)
        J = [[states[ok, 0], states[ok, 2]], [states[ok, 1], states[ok, 3]]]
        hk[ok] = obs.H_by_order[k](J)[0]
        ik[ok] = obs.I_by_order[k](J)[0]
        ch[f"H{k}"], ch[f"I{k}"] = hk, ik
    out = Trajectory(tr.xi, states, ch, ("phi1", "phi2", "dphi1", "dphi2"), dict(tr.meta))
    out.meta["max_relative_residual"] = max_relative_residual(b, grid, tr)
    out.meta["symbolic_hash"] = seeder.symbolic_hash
    return out


# -- order studies -----------------------------------------------------------------


@dataclass
class OrderStudy:
    h: list
    errors: list
    pair_orders: list
    slope: float
    noise_floor: bool

    def table(self) -> str:
        lines = ["h, error, observed order"]
        for i, (h, e) in enumerate(zip(self.h, self.errors)):
            o = "" if i == 0 else f"{self.pair_orders[i - 1]:.3f}"
            lines.append(f"{h:.6g}, {e:.6e}, {o}")
        lines.append(f"least-squares slope: {self.slope:.3f}" + (" (noise floor reached)" if self.noise_floor else ""))
        return "\n".join(lines)


def order_study(error_fn, h_list, floor: float = 1e-13) -> OrderStudy:
    """Observed convergence order of ``error_fn(h)`` over a geometric list of ``h``."""
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("an order study needs at least three h values")
    ratios = [h_list[i + 1] / h_list[i] for i in range(len(h_list) - 1)]
    if max(ratios) - min(ratios) > 1e-9 * max(abs(r) for r in ratios):
        raise ValueError("h values must form a geometric sequence")
    errs = [float(error_fn(h)) for h in h_list]
    pairs = [math.log(errs[i + 1] / errs[i]) / math.log(h_list[i + 1] / h_list[i])
             if errs[i] > 0 and errs[i + 1] > 0 else float("nan") for i in range(len(errs) - 1)]
    x = np.log(h_list)
    y = np.log(np.maximum(errs, 1e-300))
    slope = float(np.polyfit(x, y, 1)[0])
    return OrderStudy(h_list, errs, pairs, slope, min(errs) < floor)


def reduced_vs_multistep_error(b_base: NumericBinding, h: float, N: int, z0, span_end: float,
                               seed_order: int = 4) -> float:
    """Max deviation between the stepped functional equation and the order-N reduced flow."""
    b = NumericBinding(b_base.values, b_base.potential, h)
    grid = multistep_grid(b)
    L = grid.reach
    n = int(round(span_end / grid.tau)) + 1
    seeder = RotatingModel(b, seed_order)
    seeds = seed_from_modified(seeder, z0, grid, 2 * L)
    tr = multistep_functional(b, seeds, grid, n)
    model = seeder if N == seed_order else RotatingModel(b, N)
    ref = integrate_accurate(model.phi_field, z0, tr.xi)
    return float(np.max(np.abs(ref[:, :2] - tr.states)))


# -- presets -----------------------------------------------------------------------

PRESETS = {
    "fig4": {
        "potential": "fig4", "alpha": -1.0, "c": 2.0, "dt": 0.15, "dx": 0.1, "h": 1.0,
        "trunc": 0, "x0": [-0.11, -0.01, -0.1, 0.1], "span": [0.0, 100.0], "step": 1e-2,
        "mode": "midpoint",
    },
    "fig5": {
        "potential": "fig5", "alpha": 0.3, "c": 2.0, "dt": 0.15, "dx": 0.1, "h": 1.0,
        "trunc": 2, "x0": [-0.11, -0.01, -0.1, 0.1], "span": [0.0, 500.0], "step": 2e-2,
        "mode": "midpoint",
    },
    "fig7": {
        "potential": "fig7", "alpha": 0.3, "c": 0.5, "dt": 0.15, "dx": 0.15, "h": 1.0,
        "trunc": 4, "x0": [0.1, -0.05, 0.0, 0.1], "span": [0.0, 120.0],
        "mode": "multistep",
    },
}


def preset_binding(name: str) -> tuple[NumericBinding, dict]:
    cfg = dict(PRESETS[name])
    pot = POTENTIALS[cfg["potential"]]()
    b = NumericBinding({k: cfg[k] for k in ("alpha", "c", "dt", "dx")}, pot, cfg["h"])
    return b, cfg


def run_preset(name: str, **overrides) -> Trajectory:
    b, cfg = preset_binding(name)
    cfg.update(overrides)
    if cfg["mode"] == "midpoint":
        model = RotatingModel(b, cfg["trunc"])
        tr = run_midpoint(model, cfg["x0"], tuple(cfg["span"]), cfg["step"],
                          cfg.get("fp_tol", 1e-14), cfg.get("fp_maxiter", 100))
        tr.meta["symbolic_hash"] = model.symbolic_hash
    else:
        tr = stepping_experiment(b, cfg["x0"], cfg["span"][1], seed_order=cfg["trunc"])
    tr.meta.update({"preset": name, "binding": b.as_dict()})
    return tr


ORDER_STUDY = {
    "potential": "fig7", "alpha": 0.3, "c": 0.5, "dt": 0.6, "dx": 0.6,
    "x0": [0.1, -0.05, 0.0, 0.1], "span_end": 5.0, "h": [0.4, 0.2, 0.1], "seed_order": 4,
}


def reduced_order_studies(orders=(0, 2, 4), cfg: dict | None = None) -> dict:
    """Convergence of the order-N reduced flows towards the stepped functional equation."""
    cfg = dict(ORDER_STUDY, **(cfg or {}))
    b = NumericBinding({k: cfg[k] for k in ("alpha", "c", "dt", "dx")}, POTENTIALS[cfg["potential"]]())
    return {
        N: order_study(
            lambda h, N=N: reduced_vs_multistep_error(b, h, N, cfg["x0"], cfg["span_end"], cfg["seed_order"]),
            cfg["h"],
        )
        for N in orders
    }
