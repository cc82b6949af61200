"""``ujack`` command line: test, simulate, oracle, bootstrap-draws.

Exit codes: 0 completed, 2 input error, 3 degenerate configuration.
"""

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext

import numpy as np

from ujack import hoeffding, jmb, stattests
from ujack.errors import DegenerateConfiguration, InputError, UjackError
from ujack.kernels import METHODS, SMOOTHING_KERNELS, method_order
from ujack.sample import load_csv
from ujack.sim import emit_rejection_curve, load_config, run_size_study

log = logging.getLogger("ujack")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _columns(values):
    out = []
    for v in values:
        out.extend(c.strip() for c in v.split(",") if c.strip())
    return out


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_data_flags(p):
    p.add_argument("--method", required=True, help=f"one of: {', '.join(METHODS)}")
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--x-cols", nargs="+", required=True, help="covariate column names")
    p.add_argument("--y-col", required=True, help="response column name")
    bw = p.add_mutually_exclusive_group(required=True)
    bw.add_argument("--bandwidth", type=float)
    bw.add_argument("--bandwidth-set", type=_float_list)
    p.add_argument("--grid-min", type=float, default=0.05)
    p.add_argument("--grid-max", type=float, default=0.95)
    p.add_argument("--grid-points", type=_positive_int, default=19)
    p.add_argument("--y-grid", type=_float_list, help="llw response thresholds; write --y-grid=-0.1,0,0.1 when the list starts with a minus")
    p.add_argument("--smoothing", default="epanechnikov", choices=sorted(SMOOTHING_KERNELS))
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--incomplete-terms", type=_positive_int)
    p.add_argument("--boot", type=_positive_int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=_positive_int)


def build_parser():
    parser = _Parser(prog="ujack", description="Jackknife multiplier bootstrap tests for U-processes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="run a sup test on a data file")
    _add_data_flags(p)
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.add_argument("--emit-draws", help="write the sorted bootstrap draws, one per line")

    p = sub.add_parser("bootstrap-draws", help="emit the bootstrap supremum draws")
    _add_data_flags(p)
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("simulate", help="Monte Carlo size study")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--out", required=True)
    p.add_argument("--curve", help="CSV path for the rejection curve")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=_positive_int)

    p = sub.add_parser("oracle", help="exact Hoeffding / jackknife identity suites")
    p.add_argument("--suite", choices=["hoeffding", "jackknife", "all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=_positive_int, default=20)
    p.add_argument("--out")
    return parser


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("UJACK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"UJACK_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _run_data_test(args):
    if args.method not in METHODS:
        raise InputError(f"unknown method {args.method!r}; valid methods: {', '.join(METHODS)}")
    x_cols = _columns(args.x_cols)
    sample = load_csv(args.data, x_cols, x_cols + [args.y_col])
    m = sample.m
    method_order(args.method, m)
    design = stattests.design_grid(args.grid_min, args.grid_max, args.grid_points, m)
    bandwidths = [args.bandwidth] if args.bandwidth is not None else args.bandwidth_set
    y_grid = args.y_grid
    if args.method == "llw" and not y_grid:
        y_grid = [float(q) for q in np.quantile(sample.V[:, -1], np.arange(1, 10) / 10)]
    grid = stattests.ThetaGrid(design, args.method, bandwidths, y_grid, args.two_sided)
    plan = jmb.MultiplierDrawPlan(args.boot, args.seed)
    threads = _threads(args)
    with ThreadPoolExecutor(threads) if threads > 1 else nullcontext() as pool:
        return stattests.run_test(
            sample,
            args.method,
            grid,
            plan,
            args.alpha,
            smoothing=args.smoothing,
            incomplete_terms=args.incomplete_terms,
            executor=pool,
        )


def _draws_text(draws):
    return "".join(f"{v!r}\n" for v in draws.values.tolist())


def cmd_test(args):
    report = _run_data_test(args)
    _write(args.out, dumps(report.to_dict()))
    if args.emit_draws:
        _write(args.emit_draws, _draws_text(report.draws))
    return EXIT_OK


def cmd_bootstrap_draws(args):
    report = _run_data_test(args)
    _write(args.out, _draws_text(report.draws))
    return EXIT_OK


def cmd_simulate(args):
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    elif not _config_has_seed(args.config):
        raise InputError("simulate needs a seed (config key 'seed' or --seed)")
    result = run_size_study(config, workers=_threads(args))
    log.info("size study finished in %.1f s", result.runtime)
    _write(args.out, dumps(result.to_dict()))
    if args.curve:
        emit_rejection_curve(result, args.curve)
    return EXIT_OK


def _config_has_seed(path):
    with open(path) as fh:
        return any(line.split("#", 1)[0].strip().startswith("seed") for line in fh)


def cmd_oracle(args):
    out = {"suite": args.suite, "seed": args.seed}
    if args.suite in ("hoeffding", "all"):
        out["hoeffding"] = hoeffding.run_oracle_suite(args.seed, args.instances)
    if args.suite in ("jackknife", "all"):
        from ujack.oracles import jackknife_suite

        out["jackknife"] = jackknife_suite(args.seed, args.instances)
    _write(args.out, dumps(out))
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "bootstrap-draws": cmd_bootstrap_draws,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def dispatch(argv):
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except DegenerateConfiguration as exc:
        print(f"ujack: degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, UjackError, OSError, ValueError) as exc:
        print(f"ujack: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv=None):
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
