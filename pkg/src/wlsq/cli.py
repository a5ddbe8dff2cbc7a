"""Command-line interface: ``wlsq <command> [options]``.

Exit status is 0 on success, 2 on invalid input and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .basis1d import Basis1D, eval_basis, get_family
from .bounds import BoundInputs, evaluate_bounds
from .errors import NumericalError, ResourceError
from .experiments import (
    ExperimentConfig,
    desk_1d,
    desk_5d,
    paper_1d,
    paper_5d,
    rows_to_csv,
    run_experiment_1d,
    run_experiment_5d,
)
from .lsq import DesignOperator, extreme_singular_values, solve_weighted_lsq
from .sampling import NoiseModel, add_noise, draw_samples, load_samples, measure_for, samples_to_csv
from .tensor import TensorBasis, build_cross, cross_to_text
from .testfn import b2cut_tensor

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

FAMILIES = ("legendre", "chebyshev", "h1", "h2")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _u64(text):
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _rows_out(rows, fmt, out):
    if fmt == "json":
        clean = [{k: _jsonable(v) for k, v in r.items()} for r in rows]
        _emit(json.dumps(clean, indent=2), out)
    else:
        _emit(rows_to_csv(rows), out)


def _noise(args) -> NoiseModel:
    if args.noise_var and args.noise_var > 0:
        return NoiseModel.truncated_gaussian(args.noise_var, args.noise_bound)
    if args.noise_bound:
        return NoiseModel.bounded_uniform(args.noise_bound)
    return NoiseModel.none()


# -- commands -----------------------------------------------------------------


def cmd_basis(args):
    fam = get_family(args.family)
    x = np.linspace(0.0, 1.0, args.grid)
    ks = [args.k] if args.k is not None else list(range(args.m))
    rows = []
    for i, xi in enumerate(x):
        row = {"x": float(xi)}
        for k in ks:
            row[f"eta_{k}"] = float(eval_basis(fam, k, np.array([xi]))[0])
        rows.append(row)
    _rows_out(rows, args.format, args.out)


def cmd_cross(args):
    if (args.R is None) == (args.m is None):
        raise ValueError("give exactly one of --R or --m")
    cross = build_cross(args.s, args.d, args.R, m=args.m)
    _emit(cross_to_text(cross), args.out)


def cmd_sample(args):
    measure = measure_for(args.family, args.sampler)
    samples = draw_samples(measure, args.n, args.d, args.seed).with_values(b2cut_tensor)
    samples = add_noise(samples, _noise(args))
    _emit(samples_to_csv(samples), args.out)


def _basis_for(family, m, d):
    fam = get_family(family)
    if d == 1:
        return Basis1D(fam, m)
    if fam.smoothness is None:
        raise ValueError("tensor bases need family h1 or h2")
    return TensorBasis(fam, build_cross(fam.smoothness, d, m=m))


def cmd_fit(args):
    samples = load_samples(args.samples, seed=args.seed)
    basis = _basis_for(args.family, args.m, samples.d)
    op = DesignOperator(basis, samples.points, samples.weights, threads=args.threads)
    fit = solve_weighted_lsq(op, samples.y, args.iters, seed=args.seed)
    if args.singular_values and samples.n >= args.m:
        sv = extreme_singular_values(op, seed=args.seed)
        fit.s_min, fit.s_max = sv.s_min, sv.s_max
    fit.basis = get_family(args.family).name
    _emit(fit.to_json(), args.out)


def cmd_bounds(args):
    if args.input in (None, "-"):
        data = json.load(sys.stdin)
    else:
        with open(args.input) as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("bounds input must be a JSON object")
    if args.t is not None:
        data["t"] = args.t
    report = evaluate_bounds(BoundInputs.from_dict(data))
    _emit(json.dumps({k: _jsonable(v) for k, v in report.to_dict().items()}, indent=2), args.out)


def _config(args, d):
    if d == 1:
        preset = paper_1d if args.preset == "paper" else desk_1d
        cfg = preset(args.family)
    else:
        cfg = paper_5d() if args.preset == "paper" else desk_5d()
    updates = {"seed": args.seed, "threads": args.threads, "out": args.out}
    for name in ("n", "t", "noise_var", "noise_bound", "iters"):
        val = getattr(args, name, None)
        if val is not None:
            updates[name] = val
    if args.m_grid:
        updates["m_grid"] = args.m_grid
    if d == 5:
        updates["christoffel"] = args.christoffel
    merged = {**cfg.to_dict(), **updates}
    return ExperimentConfig(**merged)


def cmd_experiment_1d(args):
    rows = run_experiment_1d(_config(args, 1))
    _rows_out(rows, args.format, args.out)


def cmd_experiment_5d(args):
    cfg = _config(args, 5)
    seeds = range(args.seed, args.seed + args.seeds)
    rows = run_experiment_5d(cfg, seeds)
    keep = ("seed", "sigma2", "m", "err_total", "bound", "condition_ok")
    _rows_out([{k: r[k] for k in keep} for r in rows], args.format, args.out)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wlsq", description="Weighted least squares approximation from random samples.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, seed=True, out=True, fmt=True):
        if seed:
            p.add_argument("--seed", type=_u64, default=0)
        if out:
            p.add_argument("--out", default=None, help="output path (stdout if omitted)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("basis", help="tabulate basis functions on a uniform grid")
    p.add_argument("--family", choices=FAMILIES, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int, help="single index")
    g.add_argument("--m", type=int, help="indices 0..m-1")
    p.add_argument("--grid", type=int, default=11, help="number of grid points")
    common(p, seed=False)
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("cross", help="build a hyperbolic cross")
    p.add_argument("--s", type=int, choices=(1, 2), required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--R", type=float)
    p.add_argument("--m", type=int)
    common(p, seed=False, fmt=False)
    p.set_defaults(func=cmd_cross)

    p = sub.add_parser("sample", help="draw samples of the test function")
    p.add_argument("--family", choices=FAMILIES, default="h2", help="selects the sampling measure")
    p.add_argument("--sampler", choices=("uniform", "arcsine"), default="uniform")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--noise-var", type=float, default=0.0)
    p.add_argument("--noise-bound", type=float, default=None)
    common(p, fmt=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a sample CSV by weighted least squares")
    p.add_argument("samples", help="CSV with columns x_1..x_d, weight, y, epsilon")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--singular-values", action="store_true")
    common(p, fmt=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="evaluate error bounds from a JSON object")
    p.add_argument("input", nargs="?", default="-", help="JSON file (stdin if omitted)")
    p.add_argument("--t", type=float, default=None, help="override the confidence parameter")
    common(p, seed=False, fmt=False)
    p.set_defaults(func=cmd_bounds)

    for name, func, d in (("experiment-1d", cmd_experiment_1d, 1), ("experiment-5d", cmd_experiment_5d, 5)):
        p = sub.add_parser(name, help=f"{d}D experiment")
        if d == 1:
            p.add_argument("--family", choices=FAMILIES, default="h2")
        else:
            p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
            p.add_argument("--christoffel", choices=("paper", "sup"), default="paper")
        p.add_argument("--preset", choices=("desk", "paper"), default="desk")
        p.add_argument("--n", type=int)
        p.add_argument("--m-grid", "--m", dest="m_grid", type=_int_list)
        p.add_argument("--noise-var", type=float)
        p.add_argument("--noise-bound", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--iters", type=int)
        p.add_argument("--threads", type=int, default=1)
        common(p)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"wlsq: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, ResourceError, OSError, KeyError, TypeError) as exc:
        print(f"wlsq: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
