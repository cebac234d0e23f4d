"""Variable registry shared by every expression of one problem.

A :class:`Context` fixes the configuration dimension, the symbolic
parameters, the jet and potential-derivative bounds, and owns the flint
polynomial ring all numerators live in.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable

import flint

RESERVED_PARAMS = ("alpha", "c", "dt", "dx")

_LATEX_PARAM = {"alpha": r"\alpha", "c": "c", "dt": r"\Delta t", "dx": r"\Delta x"}


class JetOrderError(ValueError):
    """A derivative order exceeded the bound fixed when the context was built."""


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class JetVar:
    """Jet coordinate: ``order``-th xi-derivative of component ``component`` (1-based)."""

    component: int
    order: int = 0


@dataclass(frozen=True)
class PotentialDeriv:
    """``V^(order)`` evaluated at <phi, phi> (radial potentials)."""

    order: int


@dataclass(frozen=True)
class WPartial:
    """Partial derivative of a general potential ``W(phi)``; indices are sorted and 1-based."""

    indices: tuple[int, ...]


def jet_name(component: int, order: int) -> str:
    return f"phi{component}" if order == 0 else f"d{order}phi{component}"


def w_name(indices: tuple[int, ...]) -> str:
    return "W" if not indices else "W_" + "_".join(str(i) for i in indices)


class Context:
    """Problem context: dimension, parameters and derivative bounds.

    Parameters
    ----------
    dim
        Dimension ``n`` of the configuration space.
    params
        Names of the symbolic parameters; ``alpha, c, dt, dx`` are the
        reserved names, others are user parameters ordered after them.
    max_jet
        Highest jet order available for every component.
    max_pot
        Highest potential derivative order available.
    potential
        ``"V"`` for a radial potential ``V(<phi,phi>)``, ``"W"`` for a general
        potential ``W(phi)`` or ``None``.
    extra
        Additional inert symbols (no derivative rules).
    """

    def __init__(
        self,
        dim: int = 2,
        params: Iterable[str] = RESERVED_PARAMS,
        max_jet: int = 8,
        max_pot: int = 6,
        potential: str | None = "V",
        extra: Iterable[str] = (),
    ):
        params = tuple(params)
        if len(set(params)) != len(params):
            raise ValueError("parameter names must be unique")
        reserved = [p for p in RESERVED_PARAMS if p in params]
        user = [p for p in params if p not in RESERVED_PARAMS]
        self.params: tuple[str, ...] = tuple(reserved + user)
        if dim < 1:
            raise ValueError("dimension must be positive")
        if potential not in ("V", "W", None):
            raise ValueError(f"unknown potential kind {potential!r}")
        self.dim = dim
        self.max_jet = max_jet
        self.max_pot = max_pot
        self.potential = potential
        self.extra = tuple(extra)

        names: list[str] = list(self.params) + ["h", "_u"]
        self.kinds: list[tuple] = [("param", p) for p in self.params] + [("h",), ("aux",)]
        for j in range(1, dim + 1):
            for k in range(max_jet + 1):
                names.append(jet_name(j, k))
                self.kinds.append(("jet", j, k))
        self.w_indices: list[tuple[int, ...]] = []
        if potential == "V":
            for m in range(max_pot + 1):
                names.append(f"V{m}")
                self.kinds.append(("V", m))
        elif potential == "W":
            for m in range(max_pot + 1):
                for idx in combinations_with_replacement(range(1, dim + 1), m):
                    self.w_indices.append(idx)
                    names.append(w_name(idx))
                    self.kinds.append(("W", idx))
        for e in self.extra:
            names.append(e)
            self.kinds.append(("extra", e))
        if len(set(names)) != len(names):
            raise ValueError("symbol names collide")
        self.names = tuple(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.ring = flint.fmpq_mpoly_ctx.get(self.names, "lex")
        self.gens = self.ring.gens()
        self.nparams = len(self.params)
        self.h_index = self.nparams
        self.aux_index = self.nparams + 1
        self._zero = self.ring.from_dict({})
        self._one = self.ring.constant(1)
        self._dcache: dict[int, object] = {}

    # -- variable lookup -------------------------------------------------
    def __repr__(self) -> str:
        return (
            f"Context(dim={self.dim}, params={self.params}, max_jet={self.max_jet}, "
            f"max_pot={self.max_pot}, potential={self.potential!r})"
        )

    def jet_index(self, component: int, order: int) -> int:
        if not 1 <= component <= self.dim:
            raise ValueError(f"component {component} outside 1..{self.dim}")
        if order > self.max_jet:
            raise JetOrderError(f"jet order {order} exceeds context bound {self.max_jet}")
        return self.index[jet_name(component, order)]

    def var_index(self, v) -> int:
        if isinstance(v, int):
            return v
        if isinstance(v, str):
            if v not in self.index:
                raise KeyError(f"unknown symbol {v!r}")
            return self.index[v]
        if isinstance(v, JetVar):
            return self.jet_index(v.component, v.order)
        if isinstance(v, Param):
            return self.index[v.name]
        if isinstance(v, PotentialDeriv):
            if self.potential != "V":
                raise ValueError("context has no radial potential")
            if v.order > self.max_pot:
                raise JetOrderError(f"potential order {v.order} exceeds bound {self.max_pot}")
            return self.index[f"V{v.order}"]
        if isinstance(v, WPartial):
            idx = tuple(sorted(v.indices))
            if len(idx) > self.max_pot:
                raise JetOrderError(f"potential order {len(idx)} exceeds bound {self.max_pot}")
            return self.index[w_name(idx)]
        raise TypeError(f"cannot index {v!r}")

    def is_param_index(self, i: int) -> bool:
        return i < self.nparams

    def jet_vars(self, order: int) -> list[int]:
        return [self.jet_index(j, order) for j in range(1, self.dim + 1)]

    def latex_name(self, i: int) -> str:
        kind = self.kinds[i]
        if kind[0] == "param":
            return _LATEX_PARAM.get(kind[1], kind[1])
        if kind[0] == "jet":
            _, j, k = kind
            if k == 0:
                return rf"\phi_{{{j}}}"
            if k == 1:
                return rf"\dot\phi_{{{j}}}"
            if k == 2:
                return rf"\ddot\phi_{{{j}}}"
            return rf"\phi^{{({k})}}_{{{j}}}"
        if kind[0] == "V":
            m = kind[1]
            return "V" if m == 0 else "V" + "'" * m if m <= 3 else rf"V^{{({m})}}"
        if kind[0] == "W":
            idx = kind[1]
            return "W" if not idx else "W_{" + ",".join(str(i) for i in idx) + "}"
        return self.names[i]

    # -- total derivative of a single variable -----------------------------
    def total_derivative_of(self, i: int):
        """d/dxi of generator ``i`` as a flint polynomial (``None`` if constant)."""
        if i in self._dcache:
            return self._dcache[i]
        kind = self.kinds[i]
        g = self.gens
        out = None
        if kind[0] == "jet":
            _, j, k = kind
            out = g[self.jet_index(j, k + 1)] if k + 1 <= self.max_jet else JetOrderError
        elif kind[0] == "V":
            m = kind[1]
            if m + 1 > self.max_pot:
                out = JetOrderError
            else:
                s = self._zero
                for j in range(1, self.dim + 1):
                    s += g[self.jet_index(j, 0)] * g[self.jet_index(j, 1)]
                out = 2 * g[self.index[f"V{m + 1}"]] * s
        elif kind[0] == "W":
            idx = kind[1]
            if len(idx) + 1 > self.max_pot:
                out = JetOrderError
            else:
                s = self._zero
                for j in range(1, self.dim + 1):
                    s += g[self.index[w_name(tuple(sorted(idx + (j,))))]] * g[self.jet_index(j, 1)]
                out = s
        self._dcache[i] = out
        return out

    def chain_terms(self, component: int):
        """Pairs ``(var, factor)`` such that d/dphi_j acting through a potential is
        sum(d/dvar * factor)."""
        out = []
        g = self.gens
        phi = g[self.jet_index(component, 0)]
        if self.potential == "V":
            for m in range(self.max_pot + 1):
                fac = 2 * phi * g[self.index[f"V{m + 1}"]] if m + 1 <= self.max_pot else JetOrderError
                out.append((self.index[f"V{m}"], fac))
        elif self.potential == "W":
            for idx in self.w_indices:
                if len(idx) + 1 <= self.max_pot:
                    fac = g[self.index[w_name(tuple(sorted(idx + (component,))))]]
                else:
                    fac = JetOrderError
                out.append((self.index[w_name(idx)], fac))
        return out
