"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 configuration, I/O or runtime error.
"""

import argparse
import sys

from . import harness

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", required=True, help="experiment file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the base seed of the experiment file")
    p.add_argument("--out", default="-",
                   help="output CSV path ('-' for stdout, the default)")
    p.add_argument("--parallel", type=int, default=1,
                   help="number of worker processes")
    p.add_argument("--format", choices=("csv",), default="csv")


def build_parser():
    parser = _Parser(prog="hlisa",
                     description="Wideband hybrid LISA experiments.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    p = sub.add_parser("sweep", help="sum rate versus SNR per method")
    _common(p)
    p.add_argument("--timing", action="store_true",
                   help="append a wall_time_ms column (not reproducible)")
    p.add_argument("--mean-out", default=None,
                   help="path of the per-(method, SNR) mean CSV; defaults to "
                        "<out stem>_mean.csv when --out is a file")
    for name, text in (("gains", "normalized gain per subcarrier"),
                       ("cdf", "switch-off CDF over subcarriers"),
                       ("rank", "average effective rank table")):
        _common(sub.add_parser(name, help=text))
    return parser


def _mean_path(out):
    stem, dot, ext = out.rpartition(".")
    return f"{stem}_mean.{ext}" if dot and "/" not in ext else f"{out}_mean.csv"


def _emit(text, path):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _run(args):
    spec = harness.load_spec(args.config)
    if args.seed is not None:
        spec = harness.replace_seed(spec, args.seed)
    par = args.parallel
    if args.command == "sweep":
        res = harness.run_sweep(spec, par)
        header = harness.RESULT_HEADER + (("wall_time_ms",) if args.timing
                                          else ())
        _emit(harness.csv_text(res.rows, header), args.out)
        mean_out = args.mean_out or (None if args.out == "-"
                                     else _mean_path(args.out))
        if mean_out:
            _emit(harness.csv_text(res.aggregate, harness.AGGREGATE_HEADER),
                  mean_out)
    elif args.command == "gains":
        _emit(harness.csv_text(harness.run_gains(spec, par),
                               harness.GAINS_HEADER), args.out)
    elif args.command == "cdf":
        _emit(harness.csv_text(harness.run_cdf(spec, par),
                               harness.CDF_HEADER), args.out)
    else:
        _emit(harness.csv_text(harness.run_rank(spec, par),
                               harness.RANK_HEADER), args.out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.parallel < 1:
        print("hlisa: error: --parallel must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        _run(args)
    except harness.ConfigError as exc:
        print(f"hlisa: config error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"hlisa: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"hlisa: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
