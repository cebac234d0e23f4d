"""Canonical text and LaTeX printers.

Both printers group the numerator by jet monomial; the coefficient of each
jet monomial is a polynomial in the parameters and potential derivatives.
Text output is accepted by :func:`wavebea.symcore.parser.parse`; LaTeX output
is converted back to text by :func:`latex_to_text`.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .context import Context

# -- monomial bookkeeping ------------------------------------------------------


def _jet_positions(ctx: Context) -> list[int]:
    return [i for i, k in enumerate(ctx.kinds) if k[0] == "jet"]


def _pot_sort_key(ctx: Context, i: int):
    k = ctx.kinds[i]
    if k[0] == "V":
        return (1, k[1], ())
    if k[0] == "W":
        return (1, len(k[1]), k[1])
    return (2, 0, (ctx.names[i],))


def _jet_key(ctx: Context, exps: dict) -> tuple:
    """Graded lex: total jet degree, then (component, order) factors."""
    factors = []
    for i, e in exps.items():
        _, j, k = ctx.kinds[i]
        factors.extend([(j, k)] * e)
    factors.sort()
    return (sum(exps.values()), tuple(factors))


def group_by_jet(ctx: Context, poly) -> list[tuple[dict, dict]]:
    """Split a numerator into sorted ``[(jet exps, {other exps tuple: coeff})]``."""
    jets = set(_jet_positions(ctx))
    groups: dict = {}
    for exps, c in poly.to_dict().items():
        jkey = tuple((i, e) for i, e in enumerate(exps) if e and i in jets)
        rest = tuple(0 if i in jets else e for i, e in enumerate(exps))
        groups.setdefault(jkey, {})[rest] = c
    out = [(dict(jk), rest) for jk, rest in groups.items()]
    out.sort(key=lambda t: _jet_key(ctx, t[0]))
    return out


def _rest_key(ctx: Context, exps: tuple):
    """Order coefficient terms: parameters by descending lex degree, then potentials."""
    n = ctx.nparams
    pots = []
    for i, e in enumerate(exps):
        if e and i >= n:
            pots.extend([_pot_sort_key(ctx, i)] * e)
    return (tuple(sorted(pots)), tuple(-e for e in exps[:n]))


# -- text ----------------------------------------------------------------------


def _frac_text(q) -> str:
    q = Fraction(int(q.p), int(q.q))
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _symbols_text(ctx: Context, exps) -> list[str]:
    items = sorted(
        ((i, e) for i, e in (exps.items() if isinstance(exps, dict) else enumerate(exps)) if e),
        key=lambda t: (
            0 if ctx.kinds[t[0]][0] == "param" else 1 if ctx.kinds[t[0]][0] == "jet" else 2,
            (ctx.kinds[t[0]][1], ctx.kinds[t[0]][2]) if ctx.kinds[t[0]][0] == "jet" else (),
            _pot_sort_key(ctx, t[0]) if ctx.kinds[t[0]][0] not in ("param", "jet") else (),
            t[0],
        ),
    )
    return [ctx.names[i] if e == 1 else f"{ctx.names[i]}^{e}" for i, e in items]


def _poly_terms_text(ctx: Context, terms: dict) -> list[tuple[int, str]]:
    """Return [(sign, unsigned text)] for a polynomial given as {exps: coeff}."""
    out = []
    for exps in sorted(terms, key=lambda e: _rest_key(ctx, e)):
        c = terms[exps]
        sign = -1 if c < 0 else 1
        c = abs(c)
        syms = _symbols_text(ctx, exps)
        if not syms:
            out.append((sign, _frac_text(c)))
        elif c == 1:
            out.append((sign, "*".join(syms)))
        else:
            out.append((sign, _frac_text(c) + "*" + "*".join(syms)))
    return out


def _join(parts: list[tuple[int, str]]) -> str:
    s = ""
    for k, (sign, t) in enumerate(parts):
        if k == 0:
            s = ("-" if sign < 0 else "") + t
        else:
            s += (" - " if sign < 0 else " + ") + t
    return s or "0"


def poly_text(ctx: Context, poly) -> str:
    """Text of a numerator polynomial grouped by jet monomial."""
    groups = group_by_jet(ctx, poly)
    if len(groups) == 1 and not groups[0][0]:
        return _join(_poly_terms_text(ctx, groups[0][1]))
    parts = []
    for jexps, rest in groups:
        jtxt = "*".join(_symbols_text(ctx, jexps))
        cterms = _poly_terms_text(ctx, rest)
        if len(cterms) == 1:
            sign, t = cterms[0]
            if not jtxt:
                parts.append((sign, t))
            elif t == "1":
                parts.append((sign, jtxt))
            else:
                parts.append((sign, t + "*" + jtxt))
        else:
            if all(s < 0 for s, _ in cterms):
                sign, inner = -1, _join([(1, t) for _, t in cterms])
            else:
                sign, inner = 1, _join(cterms)
            parts.append((sign, f"({inner})" + ("*" + jtxt if jtxt else "")))
    return _join(parts)


def to_text(e) -> str:
    """Canonical text of an :class:`Expr`."""
    ctx = e.ctx
    num = poly_text(ctx, e.num)
    if not e.den:
        return num
    den = poly_text(ctx, e.den_poly())
    return f"({num})/({den})"


def series_text(s, var: str = "h") -> str:
    parts = []
    for k, v in s.terms.items():
        t = to_text(v)
        if k == 0:
            parts.append(f"({t})")
        elif k == 1:
            parts.append(f"{var}*({t})")
        else:
            parts.append(f"{var}^{k}*({t})")
    return " + ".join(parts) if parts else "0"


# -- LaTeX ---------------------------------------------------------------------


def _frac_latex(q) -> str:
    q = Fraction(int(q.p), int(q.q))
    return str(q.numerator) if q.denominator == 1 else rf"\frac{{{q.numerator}}}{{{q.denominator}}}"


def _symbols_latex(ctx: Context, exps) -> list[str]:
    names = _symbols_text(ctx, exps)
    out = []
    for nm in names:
        base, _, p = nm.partition("^")
        lx = ctx.latex_name(ctx.index[base])
        if p:
            if ctx.kinds[ctx.index[base]][0] in ("V", "W") or "^" in lx or "'" in lx:
                lx = r"\left(" + lx + r"\right)"
            lx = f"{lx}^{{{p}}}"
        out.append(lx)
    return out


def _poly_terms_latex(ctx: Context, terms: dict) -> list[tuple[int, str]]:
    out = []
    for exps in sorted(terms, key=lambda e: _rest_key(ctx, e)):
        c = terms[exps]
        sign = -1 if c < 0 else 1
        c = abs(c)
        syms = _symbols_latex(ctx, exps)
        if not syms:
            out.append((sign, _frac_latex(c)))
        elif c == 1:
            out.append((sign, " ".join(syms)))
        else:
            out.append((sign, _frac_latex(c) + " " + " ".join(syms)))
    return out


def poly_latex(ctx: Context, poly) -> str:
    groups = group_by_jet(ctx, poly)
    if len(groups) == 1 and not groups[0][0]:
        return _join(_poly_terms_latex(ctx, groups[0][1]))
    parts = []
    for jexps, rest in groups:
        jtxt = " ".join(_symbols_latex(ctx, jexps))
        cterms = _poly_terms_latex(ctx, rest)
        if len(cterms) == 1:
            sign, t = cterms[0]
            if not jtxt:
                parts.append((sign, t))
            elif t == "1":
                parts.append((sign, jtxt))
            else:
                parts.append((sign, t + " " + jtxt))
        else:
            parts.append((1, r"\left(" + _join(cterms) + r"\right)" + (" " + jtxt if jtxt else "")))
    return _join(parts)


def to_latex(e) -> str:
    ctx = e.ctx
    num = poly_latex(ctx, e.num)
    if not e.den:
        return num
    return rf"\frac{{{num}}}{{{poly_latex(ctx, e.den_poly())}}}"


def series_latex(s) -> str:
    parts = []
    for k, v in s.terms.items():
        t = to_latex(v)
        pre = "" if k == 0 else "h " if k == 1 else f"h^{{{k}}} "
        parts.append(pre + r"\left(" + t + r"\right)")
    return " + ".join(parts) if parts else "0"


# -- LaTeX back to text ----------------------------------------------------------

_LATEX_TOKENS = [
    (r"\\frac", "FRAC"),
    (r"\\left\(", "("),
    (r"\\right\)", ")"),
    (r"\\alpha", "alpha"),
    (r"\\Delta t", "dt"),
    (r"\\Delta x", "dx"),
    (r"\\dot\\phi_\{(\d+)\}", "JET1"),
    (r"\\ddot\\phi_\{(\d+)\}", "JET2"),
    (r"\\phi\^\{\((\d+)\)\}_\{(\d+)\}", "JETK"),
    (r"\\phi_\{(\d+)\}", "JET0"),
    (r"V\^\{\((\d+)\)\}", "VK"),
    (r"V('*)", "VP"),
    (r"W_\{([\d,]+)\}", "WI"),
    (r"W", "W"),
    (r"\^\{(-?\d+)\}", "POW"),
    (r"\{", "{"),
    (r"\}", "}"),
    (r"\d+", "NUM"),
    (r"[A-Za-z_][A-Za-z0-9_]*", "ID"),
    (r"[+\-()]", "OP"),
    (r"\s+", None),
]
_LATEX_RE = re.compile("|".join(f"(?P<g{i}>{p})" for i, (p, _) in enumerate(_LATEX_TOKENS)))


def latex_to_text(s: str) -> str:
    """Translate printer-produced LaTeX back into the text grammar."""
    out: list[str] = []
    stack: list[str] = []  # pending actions on closing braces
    pos = 0
    prev_atom = False

    def emit(tok: str, atom: bool):
        nonlocal prev_atom
        if atom and prev_atom:
            out.append("*")
        out.append(tok)
        prev_atom = atom

    while pos < len(s):
        m = _LATEX_RE.match(s, pos)
        if not m:
            raise ValueError(f"cannot translate LaTeX at position {pos}: {s[pos:pos + 20]!r}")
        pos = m.end()
        idx = int(m.lastgroup[1:]) if m.lastgroup.startswith("g") else None
        # lastgroup may be an inner group; find the outer alternative
        for gi in range(len(_LATEX_TOKENS)):
            if m.group(f"g{gi}") is not None:
                idx = gi
                break
        kind = _LATEX_TOKENS[idx][1]
        text = m.group(f"g{idx}")
        if kind is None:
            continue
        if kind == "FRAC":
            emit("((", True)
            prev_atom = False
            stack.append("frac1")
            # expect '{' next
            m2 = re.compile(r"\s*\{").match(s, pos)
            pos = m2.end()
            continue
        if kind == "{":
            stack.append("group")
            emit("(", True)
            prev_atom = False
            continue
        if kind == "}":
            what = stack.pop()
            if what == "frac1":
                out.append(")/(")
                m2 = re.compile(r"\s*\{").match(s, pos)
                pos = m2.end()
                stack.append("frac2")
                prev_atom = False
            elif what == "frac2":
                out.append("))")
                prev_atom = True
            else:
                out.append(")")
                prev_atom = True
            continue
        if kind == "(":
            emit("(", True)
            prev_atom = False
            continue
        if kind == ")":
            out.append(")")
            prev_atom = True
            continue
        if kind == "OP":
            out.append(text)
            prev_atom = False
            continue
        if kind == "POW":
            out.append("^(" + re.match(r"\^\{(-?\d+)\}", text).group(1) + ")")
            prev_atom = True
            continue
        if kind in ("alpha", "dt", "dx"):
            emit(kind, True)
            continue
        if kind == "JET0":
            emit("phi" + re.search(r"\d+", text).group(0), True)
            continue
        if kind == "JET1":
            emit("d1phi" + re.search(r"\d+", text).group(0), True)
            continue
        if kind == "JET2":
            emit("d2phi" + re.search(r"\d+", text).group(0), True)
            continue
        if kind == "JETK":
            k, j = re.findall(r"\d+", text)
            emit(f"d{k}phi{j}", True)
            continue
        if kind == "VK":
            emit("V" + re.search(r"\d+", text).group(0), True)
            continue
        if kind == "VP":
            emit("V" + str(text.count("'")), True)
            continue
        if kind == "WI":
            emit("W_" + "_".join(re.search(r"[\d,]+", text).group(0).split(",")), True)
            continue
        if kind == "W":
            emit("W", True)
            continue
        emit(text, True)
    return "".join(out)
