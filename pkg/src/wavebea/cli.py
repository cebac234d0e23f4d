"""Command-line front end: ``wavebea <subcommand>``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_GOLDEN, EXIT_NUMERIC = 0, 1, 2, 3, 4

PROBLEM_KEYS = {"kind", "dim", "alpha", "c", "dt", "dx", "potential", "trunc", "stencil"}


class UsageError(Exception):
    pass


# -- problem files -----------------------------------------------------------------


def load_problem(path: str | None, order: int | None):
    """Build a stencil problem from a YAML file (or the default rotating problem).

    Recognised keys: ``kind`` (rotating | travelling), ``dim``, ``alpha``,
    ``c``, ``dt``, ``dx`` (``symbolic``, a number or an expression text),
    ``potential`` (V | W) and ``trunc``.
    """
    from .stencil import StencilProblem

    data = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as e:
            raise UsageError(f"cannot read problem file: {e}") from None
        except yaml.YAMLError as e:
            raise ValueError(f"problem file is not valid YAML: {e}") from None
        if not isinstance(data, dict):
            raise ValueError("problem file must be a mapping")
        unknown = set(data) - PROBLEM_KEYS
        if unknown:
            raise ValueError(f"unknown problem keys: {', '.join(sorted(unknown))}")
    kind = data.pop("kind", "rotating")
    if kind not in ("rotating", "travelling"):
        raise ValueError(f"kind must be rotating or travelling, not {kind!r}")
    if kind == "travelling":
        data.setdefault("alpha", 0)
        data.setdefault("potential", "W")
        data.setdefault("dim", 1)
    if order is not None:
        data["trunc"] = order
    data.setdefault("trunc", 2)
    for k in ("alpha", "c", "dt", "dx"):
        v = data.get(k)
        if isinstance(v, float):
            data[k] = str(v)
    return StencilProblem(**data)


# -- output helpers ----------------------------------------------------------------


def _series_out(s, fmt: str) -> str:
    from .symcore import series_latex, series_text

    return series_latex(s) if fmt == "latex" else series_text(s)


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / name
    p.write_text(text if text.endswith("\n") else text + "\n")
    return p


def _emit(out_dir: Path | None, objects: dict, fmt: str, stem_meta: dict) -> dict:
    """Write one file per object (or one JSON document) and a manifest with content hashes."""
    from .numlab import content_hash

    if fmt == "csv":
        raise UsageError("csv output is only available for simulate")
    ext = {"text": "txt", "latex": "tex", "json": "json"}[fmt]
    rendered = {}
    for name, obj in objects.items():
        if isinstance(obj, list):
            rendered[name] = [_series_out(s, fmt) if hasattr(s, "terms") else str(s) for s in obj]
        elif hasattr(obj, "terms"):
            rendered[name] = _series_out(obj, fmt)
        else:
            rendered[name] = str(obj)
    texts = {}
    if fmt == "json":
        texts["result.json"] = json.dumps(rendered, indent=2, sort_keys=True)
    else:
        for name, v in rendered.items():
            texts[f"{name}.{ext}"] = "\n".join(v) if isinstance(v, list) else v
    manifest = dict(stem_meta)
    manifest["files"] = {k: content_hash([t]) for k, t in sorted(texts.items())}
    if out_dir is None:
        for k, t in texts.items():
            print(f"== {k}")
            print(t)
    else:
        for k, t in texts.items():
            _write(out_dir, k, t)
        _write(out_dir, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def _meta(args, problem=None) -> dict:
    from . import __version__

    m = {"command": args.command, "version": __version__}
    if problem is not None:
        m["problem"] = {
            "dim": problem.dim, "alpha": str(problem.alpha), "c": str(problem.c), "dt": str(problem.dt),
            "dx": str(problem.dx), "potential": problem.potential, "trunc": problem.trunc,
        }
    return m


def _out_dir(args):
    return Path(args.out_dir) if args.out_dir else None


# -- subcommands -------------------------------------------------------------------


def cmd_derive(args) -> int:
    from .modeq import modified_equation
    from .stencil import expand_discrete_lagrangian

    p = load_problem(args.problem, args.order)
    res, ode, red, _ = modified_equation(p)
    L = expand_discrete_lagrangian(p)
    _emit(_out_dir(args), {
        "lagrangian": L.L, "high_order_ode": ode.rhs, "reduced_ode": red.rhs,
    }, args.format, _meta(args, p))
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    from .hamstruct import closedness_defects, hamiltonian_flow_check, modified_hamiltonian_structure

    p = load_problem(args.problem, args.order)
    pipe = modified_hamiltonian_structure(p)
    hs = pipe.hs
    rep = hamiltonian_flow_check(hs, pipe.reduced)
    omega = [f"omega[{a}][{b}] = {_series_out(hs.omega[a][b], args.format)}"
             for a in range(len(hs.omega)) for b in range(a + 1, len(hs.omega))]
    checks = f"closed: {not closedness_defects(hs)}\nflow check: {rep.ok}"
    _emit(_out_dir(args), {
        "ostrogradsky_hamiltonian": pipe.ostro.H, "hamiltonian": hs.H, "omega": omega, "checks": checks,
    }, args.format, _meta(args, p))
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_invariant(args) -> int:
    from .hamstruct import modified_hamiltonian_structure
    from .noether import conservation_defect, rotation_invariant

    p = load_problem(args.problem, args.order)
    if p.dim != 2 or p.potential != "V":
        raise ValueError("the rotation invariant needs a planar problem with a radial potential")
    pipe = modified_hamiltonian_structure(p)
    I, Ir = rotation_invariant(pipe)
    ok = conservation_defect(pipe.hs, Ir, pipe.reduced).is_zero()
    _emit(_out_dir(args), {
        "noether_current": I, "rotation_invariant": Ir, "checks": f"conserved on-shell: {ok}",
    }, args.format, _meta(args, p))
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_fit_pseries(args) -> int:
    from .modeq import modified_equation
    from .ptrees import STANDARD_LISTING, fit_coefficients
    from .stencil import travelling_problem
    from .symcore import to_latex, to_text

    N = args.order if args.order is not None else 6
    if N % 2 or N < 2 or N > 6:
        raise UsageError("--order must be 2, 4 or 6")
    p = travelling_problem(dim=args.dim, trunc=N)
    _, _, red, _ = modified_equation(p)
    a = fit_coefficients(red, p.values["c"], orders=tuple(range(2, N + 1, 2)))
    show = to_latex if args.format == "latex" else to_text
    rows = [f"a_{j},{k}  {STANDARD_LISTING[j][k - 1]}  {show(v)}" for (j, k), v in sorted(a.items())]
    _emit(_out_dir(args), {"pseries_coefficients": "\n".join(rows)}, args.format,
          dict(_meta(args), order=N, dim=args.dim))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .numlab import PRESETS, preset_binding, run_preset, write_manifest

    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
    if args.format not in ("csv", "text"):
        raise UsageError("simulate writes csv")
    b, cfg = preset_binding(args.preset)
    over = {}
    if args.tol is not None and cfg["mode"] == "midpoint":
        over["fp_tol"] = args.tol
    tr = run_preset(args.preset, **over)
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    tr.to_csv(out / f"{args.preset}.csv")
    settings = {k: v for k, v in cfg.items()}
    settings.update(over)
    settings["drift"] = {k: tr.drift(k) for k in sorted(tr.channels)}
    if "max_relative_residual" in tr.meta:
        settings["max_relative_residual"] = tr.meta["max_relative_residual"]
    write_manifest(out / f"{args.preset}.manifest.json", b, settings, tr.meta.get("symbolic_hash", ""))
    for k in sorted(tr.channels):
        print(f"{k}: drift {tr.drift(k):.3e}  amplitude {tr.amplitude(k):.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .golden import run_all

    results = run_all(args.order if args.order is not None else 6)
    for r in results:
        print(r.line())
    k = sum(r.ok for r in results)
    print(f"{k}/{len(results)} golden identities matched")
    return EXIT_OK if k == len(results) else EXIT_GOLDEN


COMMANDS = {
    "derive": cmd_derive,
    "hamiltonian": cmd_hamiltonian,
    "invariant": cmd_invariant,
    "fit-pseries": cmd_fit_pseries,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wavebea", description="Modified equations, Hamiltonians and invariants of stencil discretisations.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--order", type=int, default=None, help="truncation order in h")
        sp.add_argument("--problem", default=None, help="YAML problem file")
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--format", choices=["text", "latex", "json", "csv"], default="text")
        sp.add_argument("--tol", type=float, default=None, help="fixed-point tolerance override")
        if name == "simulate":
            sp.add_argument("--preset", required=True)
        if name == "fit-pseries":
            sp.add_argument("--dim", type=int, default=2)
    return ap


def main(argv=None) -> int:
    from .modeq import RegularityError
    from .numlab import NumericFailure, UnboundParameterError
    from .stencil import ProblemError
    from .symcore import ParseError, SymbolicError

    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"wavebea: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, FloatingPointError) as e:
        print(f"wavebea: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ProblemError, ParseError, RegularityError, UnboundParameterError, SymbolicError, ValueError, TypeError) as e:
        print(f"wavebea: validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
