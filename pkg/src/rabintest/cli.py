"""Command-line front end: analyze, test, bound, generate, slope."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import generators
from .analyzer import progress_profile
from .bounds import BoundInputs, all_bounds
from .harness import (ChainTarget, ExperimentConfig, MajorityTarget, RawChainTarget,
                      experiment, experiment_csv, loglog_slope)
from .model import ModelError, format_model, parse_model
from .rabin import AutomatonError, parse_dra, product
from .strategy import ConstGrowth, PolyGrowth


class DomainError(Exception):
    pass


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None


def _load_chain(path):
    return parse_model(_read(path))


def _load_dra(path):
    return parse_dra(_read(path)) if path else None


def _json_default(v):
    return str(v)


def _dump(obj):
    # inf is not valid JSON; emit it as a string like "undef"
    def clean(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        return v
    return json.dumps({k: clean(v) for k, v in obj.items()}, indent=2, default=_json_default)


# --------------------------------------------------------------------------
# subcommands


def cmd_analyze(args):
    chain = _load_chain(args.model)
    dra = _load_dra(args.dra)
    if dra is not None:
        chain = product(chain, dra)
    elif not chain.marker_labeled:
        raise DomainError("raw-labeled chain: pass --dra to analyze it through an automaton")
    print(progress_profile(chain).to_json(indent=2))


def _parse_majority(arg):
    try:
        a, b = arg.split(",")
        return int(a), int(b)
    except ValueError:
        raise DomainError(f"expected majority:NA,NB, got majority:{arg}") from None


def cmd_test(args):
    if args.model.startswith("majority:"):
        if args.dra:
            raise DomainError("--dra does not apply to the majority protocol")
        n_a, n_b = _parse_majority(args.model[len("majority:"):])
        try:
            target = MajorityTarget(n_a, n_b)
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        family, params = "majority", f"{n_a},{n_b}"
        print("note: majority verdicts use the quiet-window heuristic", file=sys.stderr)
    else:
        chain = _load_chain(args.model)
        dra = _load_dra(args.dra)
        if dra is not None:
            target = RawChainTarget(chain, dra)
        elif chain.marker_labeled:
            target = ChainTarget(chain)
        else:
            raise DomainError("raw-labeled chain: pass --dra")
        family, params = "model", os.path.basename(args.model)

    if args.const_growth is not None:
        growth, label = ConstGrowth(args.const_growth), f"const{args.const_growth}"
    else:
        growth, label = PolyGrowth(args.c), str(args.c)
    quiet = args.quiet if args.quiet > 0 else None
    try:
        config = ExperimentConfig(target, growth, trials=args.trials, step_cap=args.step_cap,
                                  quiet=quiet, base_seed=args.seed, family=family,
                                  params=params, label=label)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    records, summary = experiment(config, jobs=args.jobs)
    sys.stdout.write(experiment_csv(config, records, summary))


def cmd_bound(args):
    try:
        inputs = BoundInputs(args.rm, args.pm, args.pgamma, args.pgood, args.c)
        out = all_bounds(inputs, args.n)
    except (ValueError, OverflowError) as exc:
        raise DomainError(str(exc)) from None
    print(_dump(out))


_FAMILY_ARGS = {
    "fig4": ("p", "q"),
    "top": ("m", "p", "q"),
    "bottom": ("m", "p"),
    "path": ("b",),
}


def cmd_generate(args):
    names = _FAMILY_ARGS[args.family]
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise DomainError(f"{args.family} needs " + ", ".join("--" + n for n in missing))
    extra = [n for n in ("p", "q", "m", "b") if n not in names and getattr(args, n) is not None]
    if extra:
        raise DomainError(f"{args.family} does not take " + ", ".join("--" + n for n in extra))
    kwargs = [getattr(args, n) for n in names]
    try:
        chain = generators.FAMILIES[args.family](*kwargs)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    text = format_model(chain)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise DomainError(f"cannot write {args.out}: {exc.strerror}") from None


def cmd_slope(args):
    reader = csv.reader(_read(args.csv).splitlines())
    header = next(reader, None)
    if header is None:
        raise DomainError("empty CSV")
    for col in (args.x, args.y):
        if col not in header:
            raise DomainError(f"no column {col!r} in {args.csv}")
    ix, iy = header.index(args.x), header.index(args.y)
    points = []
    for lineno, row in enumerate(reader, start=2):
        if not row or row[0] == "SUMMARY":
            continue
        try:
            points.append((float(row[ix]), float(row[iy])))
        except (ValueError, IndexError):
            raise DomainError(f"line {lineno}: non-numeric value") from None
    try:
        print(repr(loglog_slope(points)))
    except ValueError as exc:
        raise DomainError(str(exc)) from None


# --------------------------------------------------------------------------


def _positive(v):
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return n


def _nonneg(v):
    n = int(v)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabintest",
        description="Black-box restart testing of Markov chains against Rabin specifications.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("analyze", help="print the progress profile of a chain as JSON")
    p.add_argument("model", help=".lmc file")
    p.add_argument("--dra", help=".dra file; the product chain is analyzed")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("test", help="run the restart strategy and print per-trial CSV")
    p.add_argument("model", help=".lmc file, or majority:NA,NB")
    p.add_argument("--dra", help=".dra file for raw-labeled chains")
    p.add_argument("-c", type=_positive, default=1, help="growth exponent, f(n)=n^c (default 1)")
    p.add_argument("--const-growth", type=_positive, metavar="B",
                   help="use the constant growth f(n)=B instead of n^c")
    p.add_argument("--trials", type=_positive, default=300)
    p.add_argument("--seed", type=_nonneg, default=0, help="base seed (default 0)")
    p.add_argument("--step-cap", type=_positive, default=10 ** 6)
    p.add_argument("--quiet", type=_nonneg, default=10 ** 4,
                   help="restart-free steps that end a trial; 0 disables (default 10000)")
    p.add_argument("--jobs", type=_positive, default=None,
                   help="worker processes (default: available CPUs)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bound", help="evaluate the closed-form bounds as JSON")
    p.add_argument("--rm", type=int, required=True)
    p.add_argument("--pm", type=float, required=True)
    p.add_argument("--pgamma", type=float, required=True)
    p.add_argument("--pgood", type=float, required=True)
    p.add_argument("-c", type=int, required=True)
    p.add_argument("--n", type=_positive, help="restart count for the per-segment bounds")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("generate", help="write a chain from one of the built-in families")
    p.add_argument("family", choices=sorted(_FAMILY_ARGS))
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("slope", help="log-log slope of two CSV columns")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_slope)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        args.func(args)
    except (DomainError, ModelError, AutomatonError) as exc:
        print(f"rabintest: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
