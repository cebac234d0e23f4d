"""Exact symbolic kernel: expressions, coefficient field, h-series, parsing and printing."""
from .context import Context, JetOrderError, JetVar, Param, PotentialDeriv, WPartial
from .expr import Expr, SymbolicError, const, jet, param, var
from .series import HSeries, TruncationError, compose, series_arith
from .parser import DerivativeBoundError, ParseError, normalize, parse
from .printing import latex_to_text, series_latex, series_text, to_latex, to_text
