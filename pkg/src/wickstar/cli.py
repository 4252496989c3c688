"""Command-line driver: build jets, run products, seminorms and Fock computations.

Every subcommand writes one artifact (JSON or CSV) to ``--out`` or stdout.
Malformed input exits 2 with a JSON error object on stderr; a diverging
value where a number was asked for exits 3.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import scalars as sc
from .fock import expectation_sweep, ladder_ops, pi_matrix, sweep_to_csv
from .jet import Jet, TruncationError, badguy, coordinate, decoy, exponential, jet_from_json, jet_to_dict
from .multiindex import DimensionError, format_index, parse_index
from .seminorm import (
    SeminormParams,
    divergence_probe,
    fmt_float,
    inequality_suite,
    seminorm,
    seminorm_table,
    table_to_csv,
)
from .wick import HeisenbergElement, star_exp_partial, unitary_u, wick_star, wick_star_graded

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DIVERGING = 3


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# parsing


def _exact_mode(args) -> bool:
    return bool(getattr(args, "exact", False)) or sc.default_exact()


def parse_hbar(text: str, exact: bool):
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad hbar {text!r}") from e
    if v < 0:
        raise UsageError("hbar must be >= 0")
    return v if exact else float(v)


def parse_hbar_list(text: str, exact: bool) -> list:
    return [parse_hbar(t, exact) for t in text.split(",") if t.strip()]


def parse_w(text: str) -> tuple:
    """``re,im[;re,im]`` -> one complex number per coordinate."""
    try:
        return tuple(sc.parse_complex(part) for part in text.split(";") if part.strip())
    except ValueError as e:
        raise UsageError(f"bad w {text!r}") from e


def parse_points(text: str) -> list:
    """Points for one-dimensional sweeps, ``re,im;re,im;...``."""
    return [w for w in parse_w(text)]


def parse_grid(text: str) -> list:
    """``radius,steps`` -> a steps x steps square grid of points in [-radius, radius]^2."""
    try:
        r, k = text.split(",")
        r, k = float(r), int(k)
    except ValueError as e:
        raise UsageError(f"bad grid {text!r}, expected radius,steps") from e
    if k < 1:
        raise UsageError("grid needs at least one step")
    ticks = [0.0] if k == 1 else [-r + 2 * r * i / (k - 1) for i in range(k)]
    return [complex(x, y) for y in ticks for x in ticks]


def _index(text: str, n: int) -> tuple:
    try:
        I = tuple(parse_index(text))
    except ValueError as e:
        raise UsageError(f"bad multi-index {text!r}") from e
    if len(I) == 1 and n > 1 and I[0] == 0:
        I = (0,) * n
    if len(I) != n:
        raise UsageError(f"multi-index {text!r} has {len(I)} entries, expected n={n}")
    return I


def build_jet(spec: str, hbar, n: int = 1, exact: bool = False, w=None, c=0.0) -> Jet:
    """Named jets (z, zbar, z:k, zbar:k, badguy, decoy, exp:a,b, uw[:w]) or a JSON file."""
    name, _, arg = spec.partition(":")
    if name in ("z", "zbar"):
        k = int(arg) if arg else 0
        if not 0 <= k < n:
            raise UsageError(f"coordinate {k} out of range for n={n}")
        return coordinate(k, n, None, hbar, exact, bar=name == "zbar")
    if name == "badguy":
        return badguy(float(hbar))
    if name == "decoy":
        return decoy(float(hbar))
    if name == "exp":
        parts = arg.split(";") if ";" in arg else arg.split(",")
        if len(parts) != 2:
            raise UsageError("exp:a,b or exp:re,im;re,im expected")
        a, b = (sc.parse_complex(x) for x in parts)
        return exponential([a] * n, [b] * n, None, float(hbar))
    if name == "uw":
        ww = parse_w(arg) if arg else w
        if not ww:
            raise UsageError("uw needs w, as uw:re,im or via --w")
        return unitary_u(HeisenbergElement(ww, float(c)), float(hbar))
    if not os.path.exists(spec):
        raise UsageError(f"unknown jet {spec!r}: not a built-in name or an existing file")
    with open(spec) as fh:
        return jet_from_json(fh.read())


def _jet_args(args, key: str) -> Jet:
    exact = _exact_mode(args)
    hbar = parse_hbar(args.hbar.split(",")[0], exact)
    w = parse_w(args.w) if args.w else None
    return build_jet(getattr(args, key), hbar, args.dim_n, exact, w, args.c)


# --------------------------------------------------------------------------
# output


def emit_plotdata(header: Sequence[str], rows: Sequence[Sequence], path: Optional[str] = None,
                  comments: Sequence[str] = ()) -> str:
    """Write a CSV with a header row; floats get 17 significant digits."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_float(x) if isinstance(x, float) else x for x in row])
    text = buf.getvalue()
    _write(text, path)
    return text


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, path: Optional[str]) -> None:
    _write(json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n", path)


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(x: float):
    return x if math.isfinite(x) else None


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


# --------------------------------------------------------------------------
# commands


def cmd_star(args) -> int:
    f, g = _jet_args(args, "f"), _jet_args(args, "g")
    if args.alpha is None:
        alpha = None
    else:
        alpha = parse_hbar(args.alpha, f.exact)
    if args.graded is not None:
        gj = wick_star_graded(f, g, args.graded, args.degree)
        out = {"command": "star", "graded": True,
               "components": [jet_to_dict(c) for c in gj.components]}
    else:
        res = wick_star(f, g, alpha, D_out=args.degree, N_cut=args.ncut)
        out = {"command": "star", "status": res.status, "jet": jet_to_dict(res)}
    _emit_json(out, args.out)
    return 0


def cmd_seminorm(args) -> int:
    f = _jet_args(args, "f")
    hbar = parse_hbar(args.hbar, False)
    R, S = _index(args.R, f.n), _index(args.S, f.n)
    ev = seminorm(f, SeminormParams(args.m, args.l, R, S, hbar), adaptive=args.adaptive)
    out = {"command": "seminorm", "m": args.m, "l": args.l, "R": format_index(R), "S": format_index(S),
           "hbar": hbar, "value": _finite(ev.value), "status": ev.status, "terms_used": ev.terms_used,
           "last_term": _finite(ev.last_term), "partial_sum": _finite(ev.partial_sum)}
    if args.format == "csv":
        _write(table_to_csv([(args.m, args.l, R, S, hbar, ev)]), args.out)
    else:
        _emit_json(out, args.out)
    if ev.status == "diverging":
        return _error("diverging", "seminorm series diverges", EXIT_DIVERGING)
    return 0


def _table_grid(n: int, m_max: int, rs_max: int, hbars: list) -> list:
    from .multiindex import box_indices

    idx = list(box_indices((rs_max,) * n))
    grid = []
    for hbar in hbars:
        for m in range(m_max + 1):
            for ell in range(2**m):
                for R in idx:
                    for S in idx:
                        grid.append((m, ell, R, S, hbar))
    return grid


def cmd_table(args) -> int:
    f = _jet_args(args, "f")
    hbars = parse_hbar_list(args.hbar, False)
    grid = _table_grid(f.n, args.m, args.rs_max, hbars)
    rows = seminorm_table(f, grid, adaptive=args.adaptive)
    if args.format == "json":
        _emit_json([{"m": m, "l": ell, "R": format_index(R), "S": format_index(S), "hbar": h,
                     "value": _finite(ev.value), "status": ev.status} for m, ell, R, S, h, ev in rows], args.out)
    else:
        _write(table_to_csv(rows), args.out)
    return 0


def cmd_inequalities(args) -> int:
    f = _jet_args(args, "f")
    g = _jet_args(args, "g")
    hbar = parse_hbar(args.hbar, False)
    alphas = [float(parse_hbar(a, False)) for a in args.alphas.split(",")] if args.alphas else ()
    rows = inequality_suite(f, g, hbar, args.m, args.rs_max, alphas=alphas)
    failures = sum(r.status == "fail" for r in rows)
    if args.format == "csv":
        emit_plotdata(["name", "m", "l", "R", "S", "lhs", "rhs", "margin", "status"],
                      [[r.name, r.m, r.l, format_index(r.R), format_index(r.S), float(r.lhs), float(r.rhs),
                        float(r.margin), r.status] for r in rows], args.out)
    else:
        _emit_json({"command": "inequalities", "rows": len(rows), "failures": failures,
                    "results": [{k: (_finite(v) if isinstance(v, float) else v) for k, v in r.to_dict().items()}
                                for r in rows]}, args.out)
    return EXIT_FAIL if failures else 0


def cmd_diverge(args) -> int:
    hbar = parse_hbar(args.hbar, False)
    spec = args.example or args.f
    f = build_jet(spec, hbar if hbar > 0 else 0.5)
    rep = divergence_probe(f, hbar, N_max=args.ncut or 100)
    out = {"command": "diverge", "jet": spec, **rep.to_dict()}
    if args.format == "csv":
        emit_plotdata(["r", "log_term"], [[r, float(t)] for r, t in enumerate(rep.log_terms)], args.out,
                      comments=[f"verdict={rep.verdict}", f"first_increasing={rep.first_increasing}"])
    else:
        _emit_json(out, args.out)
    if args.out or args.format == "csv":
        sys.stderr.write(f"verdict {rep.verdict}, first increasing term {rep.first_increasing}\n")
    return 0


def cmd_fock(args) -> int:
    D = args.dim
    hbar = parse_hbar(args.hbar, _exact_mode(args))
    if args.op in ("a", "adag"):
        ops = ladder_ops(args.dim_n, hbar, D)
        blocks = ops.a if args.op == "a" else ops.adag
        out = {"command": "fock", "op": args.op, "modes": [op.to_dict() for op in blocks]}
    else:
        if not args.f:
            raise UsageError("fock --op pi needs --f")
        f = _jet_args(args, "f")
        out = {"command": "fock", "op": "pi", **pi_matrix(f, D).to_dict()}
    _emit_json(out, args.out)
    return 0


def cmd_coherent(args) -> int:
    f = _jet_args(args, "f")
    if f.n != 1:
        raise UsageError("coherent sweeps work in one complex dimension")
    hbar = parse_hbar(args.hbar, False)
    points = parse_grid(args.grid) if args.grid else parse_points(args.w or "0,0")
    rows = expectation_sweep(f, points, hbar, args.dim)
    if args.format == "json":
        _emit_json([{"w": [w.real, w.imag], "value": [v.real, v.imag]} for w, v in rows], args.out)
    else:
        _write(sweep_to_csv(rows), args.out)
    return 0


def cmd_exp(args) -> int:
    w = parse_w(args.w or "0.5,0")
    hbar = parse_hbar(args.hbar, False)
    g = HeisenbergElement(w, float(args.c))
    rows = []
    for K in range(1, args.kmax + 1):
        res = star_exp_partial(g, args.t, K, hbar, D_out=args.degree if args.degree is not None else 4)
        rows.append([K, float(res.deviation)])
    if args.format == "json":
        _emit_json({"command": "exp", "t": args.t, "w": list(w), "curve": rows}, args.out)
    else:
        emit_plotdata(["K", "deviation"], rows, args.out)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    only = {int(x) for x in args.only.split(",")} if args.only else None

    def progress(res):
        sys.stderr.write(res.line() + "\n")
        sys.stderr.flush()

    results = run_all(args.seed, only, progress)
    ok = all(r.passed for r in results)
    if args.format == "csv":
        emit_plotdata(["criterion", "passed", "checks", "failures", "summary"],
                      [[r.number, r.passed, r.checks, r.failures, r.summary] for r in results], args.out,
                      comments=[f"seed={args.seed}"])
    else:
        _emit_json({"command": "verify", "seed": args.seed, "passed": ok,
                    "criteria": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results]},
                   args.out)
    return 0 if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# argument parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hbar", default="0.5", help="Planck constant, e.g. 0.5 or 1/2")
    p.add_argument("--dim-n", type=int, default=1, help="number of complex dimensions for built-in jets")
    p.add_argument("--w", default=None, help="re,im[;re,im]")
    p.add_argument("--c", type=float, default=0.0, help="central coordinate of a Heisenberg element")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--exact", action="store_true", help="exact rational scalars (also WICKSTAR_EXACT=1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wickstar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("star", help="Wick star product of two jets")
    _common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--alpha", default=None, help="deformation parameter (default hbar)")
    p.add_argument("--degree", type=int, default=None, help="output degree D_out")
    p.add_argument("--ncut", type=int, default=None, help="shell cutoff for non-terminating sums")
    p.add_argument("--graded", type=int, default=None, help="emit the alpha^r components r <= GRADED")
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("seminorm", help="one seminorm evaluation")
    _common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--R", default="0")
    p.add_argument("--S", default="0")
    p.add_argument("--adaptive", action="store_true")
    p.set_defaults(func=cmd_seminorm)

    p = sub.add_parser("table", help="seminorm grid sweep to CSV")
    _common(p)
    p.set_defaults(format="csv")
    p.add_argument("--f", required=True)
    p.add_argument("--m", type=int, default=1, help="largest m")
    p.add_argument("--rs-max", type=int, default=1, help="largest entry of R and S")
    p.add_argument("--adaptive", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("inequalities", help="estimate report for a pair of jets")
    _common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--g", default=None)
    p.add_argument("--m", type=int, default=1, help="largest m")
    p.add_argument("--rs-max", type=int, default=1)
    p.add_argument("--alphas", default=None, help="comma list of alphas for the star bound")
    p.set_defaults(func=cmd_inequalities)

    p = sub.add_parser("diverge", help="divergence probe of delta_0(f * conj f)")
    _common(p)
    p.add_argument("--example", default=None, choices=("badguy", "decoy"))
    p.add_argument("--f", default=None)
    p.add_argument("--ncut", type=int, default=None, help="number of terms (default 100)")
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("fock", help="Fock-space matrices")
    _common(p)
    p.add_argument("--op", choices=("pi", "a", "adag"), default="pi")
    p.add_argument("--f", default=None)
    p.add_argument("--dim", type=int, default=6, help="Fock cutoff D")
    p.set_defaults(func=cmd_fock)

    p = sub.add_parser("coherent", help="coherent-state expectation sweep")
    _common(p)
    p.set_defaults(format="csv")
    p.add_argument("--f", required=True)
    p.add_argument("--dim", type=int, default=30, help="Fock cutoff D")
    p.add_argument("--grid", default=None, help="radius,steps square grid")
    p.set_defaults(func=cmd_coherent)

    p = sub.add_parser("exp", help="star exponential convergence curve")
    _common(p)
    p.set_defaults(format="csv")
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--degree", type=int, default=None)
    p.set_defaults(func=cmd_exp)

    p = sub.add_parser("verify", help="run the invariant suites")
    _common(p)
    p.add_argument("--only", default=None, help="comma list of criteria numbers")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if getattr(args, "g", "x") is None and args.command == "inequalities":
            args.g = args.f
        if args.command == "diverge" and not (args.example or args.f):
            raise UsageError("diverge needs --example or --f")
        return args.func(args)
    except (UsageError, DimensionError, TruncationError, ValueError, KeyError, json.JSONDecodeError,
            OSError) as e:
        return _error(type(e).__name__, str(e), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
