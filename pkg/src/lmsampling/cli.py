"""Command-line interface.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, samplaw
from .config import T_MAX, config_from_mapping, load_config
from .covmap import predict_memory
from .errors import DomainError, NumericError, ResourceError
from .harness import (DEFAULT_GAMMAS, default_threads, repro_acf_figure, repro_dest_figure,
                      run_experiment, sampled_path)
from .memest import emp_acf, estimate
from .output import Panel, Series, csv_text, read_csv_column, svg_text, write_text
from .procgen import FarimaSpec, GegenbauerSpec, farima_ma_coeffs, gen_trajectory_ma
from . import specmap

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text):
    return tuple(float(v) for v in text.split(",")) if text else ()


def _add_model(p, with_d=True):
    p.add_argument("--model", choices=("farima", "gegenbauer"), default="farima")
    if with_d:
        p.add_argument("--d", type=float, default=0.35, help="memory parameter")
    p.add_argument("--ar", default="", help="AR coefficients a_1,...,a_p")
    p.add_argument("--ma", default="", help="MA coefficients b_1,...,b_q")
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--components", default="", help="Gegenbauer theta:d pairs, e.g. 2pi/3:0.3")


def _model(args):
    raw = {"model": args.model, "d": str(getattr(args, "d", 0.0)), "ar": args.ar, "ma": args.ma,
           "noise_var": str(args.noise_var), "components": args.components, "law": "dirac:1"}
    return config_from_mapping(raw).model


def _emit(args, name, header, rows, panels=None, note=""):
    text = csv_text(header, rows, args.seed, note)
    if args.out_dir:
        out = Path(args.out_dir)
        write_text(out / f"{name}.csv", text)
        if args.format == "svg" and panels:
            write_text(out / f"{name}.svg", svg_text(panels))
    elif args.format == "svg" and panels:
        sys.stdout.write(svg_text(panels))
    else:
        sys.stdout.write(text)


def _load_series(spec: str, column):
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        ref = resources.files("lmsampling") / "data" / f"{name}.csv"
        if not ref.is_file():
            raise DomainError(f"no bundled dataset {name!r}")
        with resources.as_file(ref) as p:
            return np.asarray(read_csv_column(p, column))
    if not Path(spec).is_file():
        raise DomainError(f"input file {spec} not found")
    try:
        return np.asarray(read_csv_column(spec, column))
    except ValueError as exc:
        raise DomainError(str(exc)) from None


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    model = _model(args)
    if not isinstance(model, FarimaSpec):
        raise DomainError("simulate supports FARIMA models; use sample for seasonal ones")
    traj = gen_trajectory_ma(farima_ma_coeffs(model, args.m), args.n, args.seed, model.describe())
    t = list(range(args.n))
    _emit(args, "simulate", ("t", "x"), zip(t, traj.values.tolist()),
          [Panel(model.describe(), [Series("x", t, traj.values.tolist())], "t")])


def cmd_sample(args):
    law = samplaw.parse_law(args.law)
    times = samplaw.walk(law, args.n, args.seed).times
    rows = [(j, int(t)) for j, t in enumerate(times)]
    header = ("j", "t")
    if args.with_values:
        model = _model(args)
        path = sampled_path(model, law, args.n + 1, args.seed, args.m, T_MAX, 0)
        rows = [(j, int(t), float(y)) for j, (t, y) in enumerate(zip(path.times, path.values))]
        header = ("j", "t", "y")
    _emit(args, "sample", header, rows)


def cmd_acf(args):
    if args.input:
        x = _load_series(args.input, args.column)
        label = args.input
    else:
        model = _model(args)
        x = gen_trajectory_ma(farima_ma_coeffs(model, args.m), args.n, args.seed).values
        label = model.describe()
    acf = emp_acf(x, args.maxlag).values
    lags = list(range(args.maxlag + 1))
    _emit(args, "acf", ("lag", "acf"), zip(lags, acf.tolist()),
          [Panel(label, [Series("acf", lags, acf.tolist())], "lag")])


def cmd_estimate(args):
    x = _load_series(args.input, args.column)
    r = estimate(x, args.method, args.tuning)
    _emit(args, "estimate", ("method", "tuning", "n", "d_hat", "stderr", "ci_lo", "ci_hi"),
          [(r.method, r.bandwidth_or_order, r.n, r.d_hat, r.stderr, r.ci95[0], r.ci95[1])])


def cmd_spectral(args):
    model = _model(args)
    dens = specmap.density_of(model)
    lo = args.lo if args.lo is not None else math.pi / args.points
    freqs = np.linspace(lo, math.pi * (1 - 1e-9), args.points)
    if args.kind == "model":
        vals = dens(freqs)
    elif args.kind == "alias":
        vals = specmap.alias_sd(dens, args.k, freqs)
    else:
        law = samplaw.parse_law(args.law)
        vals = [specmap.sampled_sd_limit(dens, law, float(t), tol=args.tol, method=args.method).value
                for t in freqs]
    vals = np.asarray(vals, dtype=float)
    _emit(args, "spectral", ("freq", "value"), zip(freqs.tolist(), vals.tolist()),
          [Panel(f"{args.kind} density", [Series("f", freqs.tolist(), vals.tolist())], "frequency")],
          note=f"kind={args.kind}")


def cmd_predict(args):
    p = predict_memory(args.d, samplaw.parse_law(args.law))
    if args.out_dir:
        _emit(args, "predict", ("d_in", "law", "regime", "d_out", "alpha_out"),
              [(p.d_in, args.law, p.regime, p.d_out, p.alpha_out)])
    print(p.summary())


def cmd_experiment(args):
    cfg = load_config(args.config)
    rec = run_experiment(cfg, args.threads)
    out = args.out_dir or cfg.outputs
    if out:
        write_text(Path(out) / "experiment_reps.csv", rec.csv())
        write_text(Path(out) / "experiment_summary.csv", rec.summary_csv())
    sys.stdout.write(rec.summary_csv())


def cmd_fig1(args):
    fig = repro_acf_figure(args.d, _floats(args.gammas), args.n, args.maxlag, args.seed, args.m)
    _write_figure(args, "fig1", fig)


def cmd_fig2(args):
    fig = repro_dest_figure(_floats(args.d_values), _floats(args.gammas), args.reps, args.n,
                            args.seed, args.method, args.m, args.threads)
    _write_figure(args, "fig2", fig)


def _write_figure(args, name, fig):
    if args.out_dir:
        write_text(Path(args.out_dir) / f"{name}.csv", fig.csv())
        if args.format == "svg":
            write_text(Path(args.out_dir) / f"{name}.svg", fig.svg())
    else:
        sys.stdout.write(fig.svg() if args.format == "svg" else fig.csv())


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the subcommand copies must not overwrite values given before the subcommand
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=dflt(0), help="master seed")
    g.add_argument("--threads", type=int, default=dflt(None),
                   help="worker threads (default: $LMSAMPLING_THREADS or 1)")
    g.add_argument("--out-dir", default=dflt(None), help="write files here instead of stdout")
    g.add_argument("--format", choices=("csv", "svg"), default=dflt("csv"))
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = _Parser(prog="lmsampling", parents=[_global_flags(suppress=False)],
                description="Random sampling of long-memory processes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="trajectory of X")
    _add_model(s)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--m", type=int, default=5000, help="MA truncation order")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sample", parents=[common], help="sampling walk, optionally with Y values")
    _add_model(s)
    s.add_argument("--law", required=True, help="dirac:k | pareto:g | table:p1,p2,...")
    s.add_argument("--n", type=int, default=10, help="number of steps")
    s.add_argument("--m", type=int, default=5000)
    s.add_argument("--with-values", action="store_true", help="also output Y_j = X_{T_j}")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("acf", parents=[common], help="empirical autocovariance")
    _add_model(s)
    s.add_argument("--input", default=None, help="CSV file or builtin:<name>")
    s.add_argument("--column", default=None)
    s.add_argument("--n", type=int, default=5000)
    s.add_argument("--m", type=int, default=5000)
    s.add_argument("--maxlag", type=int, default=100)
    s.set_defaults(func=cmd_acf)

    s = sub.add_parser("estimate", parents=[common], help="estimate d from a series")
    s.add_argument("--input", default="builtin:white_noise", help="CSV file or builtin:<name>")
    s.add_argument("--column", default=None)
    s.add_argument("--method", choices=("gph", "fexp"), default="fexp")
    s.add_argument("--tuning", type=int, default=None, help="GPH bandwidth or FEXP order")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("spectral", parents=[common], help="spectral density grid")
    _add_model(s)
    s.add_argument("--kind", choices=("model", "alias", "sampled"), default="model")
    s.add_argument("--k", type=int, default=3, help="decimation factor for --kind alias")
    s.add_argument("--law", default="pareto:2.8", help="sampling law for --kind sampled")
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--lo", type=float, default=None, help="lowest frequency")
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("--method", choices=("extrapolate", "direct"), default="extrapolate")
    s.set_defaults(func=cmd_spectral)

    s = sub.add_parser("predict", parents=[common], help="memory regime after sampling")
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--law", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("experiment", parents=[common], help="run a configured experiment")
    s.add_argument("--config", required=True, help="key = value configuration file")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("repro-fig1", parents=[common], help="autocovariances of X and two sampled processes")
    s.add_argument("--d", type=float, default=0.35)
    s.add_argument("--gammas", default="2.8,1.9")
    s.add_argument("--n", type=int, default=5000)
    s.add_argument("--maxlag", type=int, default=100)
    s.add_argument("--m", type=int, default=5000)
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("repro-fig2", parents=[common], help="estimated d against gamma")
    s.add_argument("--d-values", default="0.1,0.35")
    s.add_argument("--gammas", default=",".join(f"{g:g}" for g in DEFAULT_GAMMAS))
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--n", type=int, default=5000)
    s.add_argument("--m", type=int, default=5000)
    s.add_argument("--method", choices=("gph", "fexp"), default="fexp")
    s.set_defaults(func=cmd_fig2)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = default_threads()
    try:
        args.func(args)
    except (NumericError, ResourceError, ArithmeticError) as exc:
        print(f"lmsampling: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError, OSError) as exc:
        print(f"lmsampling: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
