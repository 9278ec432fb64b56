"""Command-line interface.

Data goes to stdout (or ``--output``) as CSV or JSON; diagnostics go to
stderr.  Exit codes: 0 success, 2 invalid input, 3 numerical failure,
4 vanishing on the line ``Im k = -c``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import asymptotics, convolution, heathbrown, numtheory, spectral, zeros
from .density import make_density, validate
from .errors import ConvAsymError, InvalidInputError
from .quadrature import QuadratureSpec


# -- parsing helpers ------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if not step > 0 or hi < lo:
                raise InvalidInputError(f"bad range {text!r}")
            n = int(math.floor((hi - lo) / step + 1e-9))
            return lo + step * np.arange(n + 1)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise InvalidInputError(f"bad number list {text!r}") from exc


def parse_complex_list(text: str) -> list[complex]:
    try:
        return [complex(v.strip().replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"bad complex list {text!r}") from exc


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def table_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit(args, header: Sequence[str], rows: Sequence[Sequence[Any]], json_obj: Any = None) -> None:
    if args.format == "json":
        obj = json_obj if json_obj is not None else [dict(zip(header, row)) for row in rows]
        text = json.dumps(_jsonable(obj), indent=2) + "\n"
    else:
        text = table_csv(header, rows)
    write_out(args, text)


def write_out(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def quad_spec(args) -> QuadratureSpec:
    return QuadratureSpec(args.panel_order, args.max_phase, args.abs_tol)


def density_of(args):
    return make_density(args.density, normalize=args.normalize)


def step_of(args, d) -> float:
    if args.h is not None:
        return args.h
    return (d.b - d.a) / args.divisions


def zero_records(rows) -> list[dict]:
    return [z.as_dict() for z in rows]


def load_zeros(path: str) -> list[zeros.ZeroRecord]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read zeros file {path!r}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("zeros", [])
    if not isinstance(data, list):
        raise InvalidInputError("zeros file must hold a JSON array")
    return [zeros.ZeroRecord.from_dict(obj) for obj in data]


# -- subcommands -----------------------------------------------------------------


def cmd_ft(args) -> int:
    d = density_of(args)
    ks = np.array(parse_complex_list(args.k))
    q = quad_spec(args)
    val = spectral.ft(d, ks, q)
    der = spectral.ft_derivative(d, ks, q)
    header = ["k_re", "k_im", "ft_re", "ft_im", "dft_re", "dft_im"]
    rows = [(k.real, k.imag, v.real, v.imag, w.real, w.imag) for k, v, w in zip(ks, val, der)]
    emit(args, header, rows)
    return 0


def _strip_zeros(args, d) -> list[zeros.ZeroRecord]:
    R = args.rmax if args.rmax is not None else zeros.zero_free_radius(d, args.c)
    strip = zeros.StripSpec(c=args.c, R=R, guard_eps=args.guard, cell_cap=args.cell_cap)
    return zeros.enumerate_strip(d, strip, quad_spec(args))


def cmd_zeros(args) -> int:
    d = density_of(args)
    found = _strip_zeros(args, d)
    header = ["re", "im", "multiplicity", "residual", "newton_iterations", "provenance"]
    rows = [tuple(z.as_dict()[h] for h in header) for z in found]
    emit(args, header, rows, zero_records(found))
    return 0


def cmd_fd(args) -> int:
    d = density_of(args)
    xs = parse_grid(args.x)
    if args.route == "log":
        vals = spectral.log_inversion_fd(d, xs, args.U, quad_spec(args)) + np.asarray(d(xs))
    else:
        vals = convolution.f_direct(d, xs, step_of(args, d), richardson=args.richardson)
    emit(args, ["x", "f"], list(zip(xs, np.atleast_1d(vals))))
    return 0


def cmd_compare(args) -> int:
    d = density_of(args)
    xs = parse_grid(args.x)
    zs = load_zeros(args.zeros_file) if args.zeros_file else None
    if zs is None:
        R = args.rmax if args.rmax is not None else None
        zs = asymptotics.strip_zeros(d, args.c, R, quad_spec(args))
    report = asymptotics.compare_direct_vs_expansion(d, args.c, xs, step_of(args, d), zs, q=quad_spec(args))
    print(
        f"slope {report.fit.slope:.6g} over [{report.fit.window[0]:.4g}, {report.fit.window[1]:.4g}] "
        f"({report.fit.points} points), noise {report.noise:.3g}, zeros used {len(report.zeros)}",
        file=sys.stderr,
    )
    if args.format == "json":
        obj = {
            "c": args.c,
            "h": report.h,
            "slope": report.fit.slope,
            "noise": report.noise,
            "zeros": zero_records(report.zeros),
            "rows": [dict(zip(["x", "f_direct", "expansion", "residual", "scaled_residual"], r)) for r in report.rows()],
        }
        write_out(args, json.dumps(_jsonable(obj), indent=2) + "\n")
    else:
        write_out(args, report.to_csv())
    return 0


def cmd_hb(args) -> int:
    if args.hb_cmd == "delta":
        th = parse_grid(args.theta)
        emit(args, ["theta", "delta"], list(zip(th, np.atleast_1d(heathbrown.delta_burgess(th, args.lam)))))
        return 0
    if args.hb_cmd == "check":
        if args.k:
            ks = parse_complex_list(args.k)
        else:
            rng = np.random.default_rng(args.seed)
            r = rng.uniform(0.1, 50.0, args.samples)
            t = rng.uniform(0.0, 2 * math.pi, args.samples)
            ks = list(r * np.exp(1j * t))
        rows = [(k.real, k.imag, heathbrown.mapping_residual(k)) for k in ks]
        emit(args, ["k_re", "k_im", "residual"], rows)
        return 0
    # zeros of the reference density and their images under k -> -ik/4
    d = make_density("burgess:lambda=0.25")
    ref = _strip_zeros(args, d)
    found = heathbrown.burgess_zero_rescale(args.lam, ref)
    rows = []
    for r0, z in zip(ref, found):
        img = complex(heathbrown.h_image(r0.k))
        rows.append((z.k.real, z.k.imag, z.multiplicity, img.real, img.imag, abs(heathbrown.h_eval(img))))
    emit(args, ["re", "im", "multiplicity", "h_re", "h_im", "abs_h"], rows)
    return 0


def _limit_args(args) -> dict:
    return {"theta": args.theta} if args.theta is not None else {"xmax": args.xmax}


def cmd_nt(args) -> int:
    ctx = numtheory.PrimeContext(args.p)
    sub = args.nt_cmd
    if sub == "n0":
        obj = {"p": args.p, "n0": numtheory.n0(ctx)}
    elif sub == "count":
        obj = {"p": args.p, "x": args.x, "count": numtheory.count_nonresidues(ctx, args.x)}
    elif sub == "spj":
        obj = {"p": args.p, "j": args.j, "value": numtheory.s_pj(ctx, args.j, **_limit_args(args))}
    elif sub == "psi":
        obj = {"p": args.p, "x": args.x, "psi": numtheory.psi_p(ctx, args.x)}
    elif sub == "incexc":
        res = numtheory.inclusion_exclusion_identity(ctx, **_limit_args(args))
        obj = {"lhs": res.lhs, "rhs": res.rhs, "equal": res.equal}
    else:
        stats = numtheory.density_profile(ctx, parse_grid(args.theta_grid))
        if args.format == "json":
            obj = {
                "p": stats.p,
                "n0": stats.n0,
                "rows": [{"theta": t, "count": int(c), "density": v} for t, c, v in zip(stats.theta, stats.counts, stats.density)],
            }
        else:
            write_out(args, stats.to_csv())
            return 0
    if args.format == "json":
        write_out(args, json.dumps(_jsonable(obj), indent=2) + "\n")
    else:
        emit(args, list(obj.keys()), [list(obj.values())])
    return 0


def cmd_validate(args) -> int:
    d = density_of(args)
    report = validate(d)
    obj = report.as_dict()
    obj.update({"name": d.name, "a": d.a, "b": d.b, "d1": d.d1, "d2": d.d2})
    if args.format == "json":
        write_out(args, json.dumps(_jsonable(obj), indent=2) + "\n")
    else:
        emit(args, ["check", "passed", "detail"], [(c.name, c.passed, c.detail) for c in report.checks])
    return 0 if report.passed else 2


# -- parser --------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, density: bool = True) -> None:
    if density:
        p.add_argument("--density", default="burgess", help="burgess[:lambda=F] | uniform:a=F,b=F | file:PATH")
        p.add_argument("--normalize", action="store_true", help="rescale a file density to unit mass")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write data here instead of stdout")
    p.add_argument("--panel-order", type=int, default=16)
    p.add_argument("--max-phase", type=float, default=math.pi)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--max-grid", type=int, help="grid-size cap (overrides CONVASYM_MAX_GRID)")


def _grid_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h", type=float, help="lattice step; must divide b - a")
    p.add_argument("--divisions", type=int, default=convolution.DEFAULT_DIVISIONS, help="lattice cells in [a, b]")


def _strip_opts(p: argparse.ArgumentParser, c_default: float | None = None) -> None:
    p.add_argument("--c", type=float, required=c_default is None, default=c_default, help="strip depth")
    p.add_argument("--rmax", type=float, help="|Re k| bound (default: zero-free radius)")
    p.add_argument("--guard", type=float, default=1e-3)
    p.add_argument("--cell-cap", type=int, default=30)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convasym", description="Convolution series, transform zeros and nonresidue identities.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ft", help="characteristic function and its derivative")
    _common(p)
    p.add_argument("--k", required=True, help="comma-separated complex values, e.g. 2+0.5j,10")
    p.set_defaults(func=cmd_ft)

    p = sub.add_parser("zeros", help="zeros of ft - 1 in a strip")
    _common(p)
    _strip_opts(p)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("fd", help="the series F_d(x)")
    _common(p)
    _grid_opts(p)
    p.add_argument("--x", required=True, help="lo:hi:step or comma list")
    p.add_argument("--richardson", action="store_true")
    p.add_argument("--route", choices=("direct", "log"), default="direct")
    p.add_argument("--U", type=float, default=5000.0, help="truncation for the log route")
    p.set_defaults(func=cmd_fd)

    p = sub.add_parser("compare", help="direct series against the zero expansion")
    _common(p)
    _grid_opts(p)
    _strip_opts(p)
    p.add_argument("--x", required=True, help="lo:hi:step or comma list")
    p.add_argument("--zeros-file", help="JSON zeros as written by `zeros --format json`")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("hb", help="reciprocal-density special case")
    hb = p.add_subparsers(dest="hb_cmd", required=True)
    q = hb.add_parser("zeros", help="zeros for lambda, with their H-plane images")
    _common(q, density=False)
    _strip_opts(q)
    q.add_argument("--lambda", dest="lam", type=float, default=0.25)
    q = hb.add_parser("delta", help="the profile delta(theta)")
    _common(q, density=False)
    q.add_argument("--theta", required=True)
    q.add_argument("--lambda", dest="lam", type=float, default=0.25)
    q = hb.add_parser("check", help="residual of the H / transform identity")
    _common(q, density=False)
    q.add_argument("--k", help="comma-separated complex values (default: random sample)")
    q.add_argument("--samples", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hb, normalize=False)

    p = sub.add_parser("nt", help="finite-p nonresidue computations")
    nt = p.add_subparsers(dest="nt_cmd", required=True)
    for name in ("n0", "count", "spj", "psi", "incexc", "profile"):
        q = nt.add_parser(name)
        _common(q, density=False)
        q.add_argument("--p", type=int, required=True)
        if name in ("count", "psi"):
            q.add_argument("--x", type=float, required=True)
        if name == "spj":
            q.add_argument("--j", type=int, required=True)
        if name in ("spj", "incexc"):
            lim = q.add_mutually_exclusive_group(required=True)
            lim.add_argument("--theta", type=float)
            lim.add_argument("--xmax", type=float)
        if name == "profile":
            q.add_argument("--theta-grid", required=True, help="lo:hi:step or comma list")
    p.set_defaults(func=cmd_nt)

    p = sub.add_parser("density-validate", help="check that a density meets the input requirements")
    _common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    saved = os.environ.get("CONVASYM_MAX_GRID")
    if getattr(args, "max_grid", None) is not None:
        if args.max_grid <= 0:
            print("error: --max-grid must be positive", file=sys.stderr)
            return 2
        os.environ["CONVASYM_MAX_GRID"] = str(args.max_grid)
    try:
        return args.func(args)
    except ConvAsymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        # the cap is per invocation
        if saved is None:
            os.environ.pop("CONVASYM_MAX_GRID", None)
        else:
            os.environ["CONVASYM_MAX_GRID"] = saved


if __name__ == "__main__":
    sys.exit(main())
