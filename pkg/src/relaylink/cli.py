"""Command-line entry point: ``relaylink {analytic,simulate,sweep,figure,selftest}``.

Exit status is 0 on success, 1 for invalid arguments or infeasible
configurations and 2 for numerical failures. Data goes to stdout (or
``--out``), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import analytic, experiments, montecarlo
from .errors import InvalidParameterError, NumericalError, RelayLinkError
from .model import Scheme, SystemParams

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _grid(text):
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
        return [float(x) for x in np.arange(start, stop + step / 2, step)]
    return _float_list(text)


def _add_link(p, sweep=False):
    p.add_argument("--n", type=_grid if sweep else int, required=True, help="relay antennas N")
    p.add_argument("--m", type=int, required=True, help="interferers M")
    p.add_argument("--rho1-db", type=_grid if sweep else float, required=True, help="source SNR in dB")
    p.add_argument("--mu", type=float, default=1.0, help="rho2 = mu * rho1 (default 1)")
    p.add_argument("--rho2-db", type=float, default=None, help="relay SNR in dB; overrides --mu")
    p.add_argument("--rho-i-db", type=_float_list, default=[0.0],
                   help="interference INR(s) in dB, comma list; one value is broadcast to M")
    p.add_argument("--gamma-th-db", type=float, default=0.0, help="outage threshold in dB (default 0)")


def _add_output(p):
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_mc(p):
    p.add_argument("--trials", type=int, default=experiments.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default RELAYLINK_WORKERS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaylink", description="Outage analysis of multi-antenna AF relaying with CCI.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analytic", help="evaluate one analytic expression")
    a.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    a.add_argument("--method", choices=[m.value for m in analytic.AnalyticMethod], default="exact")
    _add_link(a)
    a.add_argument("--tol", type=float, default=analytic.DEFAULT_TOL)
    _add_output(a)

    s = sub.add_parser("simulate", help="Monte Carlo outage estimate")
    s.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    s.add_argument("--method", choices=[experiments.MONTE_CARLO], default=experiments.MONTE_CARLO)
    _add_link(s)
    _add_mc(s)
    _add_output(s)

    w = sub.add_parser("sweep", help="sweep rho1 (start:stop:step) or N over a grid")
    w.add_argument("--scheme", type=lambda t: t.split(","), required=True, help="comma list of schemes")
    w.add_argument("--method", type=lambda t: t.split(","), default=["exact"], help="comma list of methods")
    _add_link(w, sweep=True)
    w.add_argument("--tol", type=float, default=analytic.DEFAULT_TOL)
    _add_mc(w)
    _add_output(w)

    f = sub.add_parser("figure", help="reproduce the data behind one figure")
    f.add_argument("--id", required=True, choices=experiments.FIGURES)
    _add_mc(f)
    _add_output(f)

    t = sub.add_parser("selftest", help="fast acceptance subset")
    t.add_argument("--workers", type=int, default=None)
    return parser


def _params(args, n=None, rho1_db=None) -> SystemParams:
    n = args.n if n is None else n
    rho1_db = args.rho1_db if rho1_db is None else rho1_db
    rho_i = list(args.rho_i_db)
    if len(rho_i) == 1:
        rho_i = rho_i * args.m
    elif len(rho_i) != args.m:
        raise InvalidParameterError(f"--rho-i-db has {len(rho_i)} values but M = {args.m}")
    if args.m == 0:
        rho_i = []
    return SystemParams.from_db(n, args.m, rho1_db, args.mu, args.gamma_th_db, rho_i, args.rho2_db)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _rows_text(rows, fmt):
    if fmt == "json":
        records = [dict(zip(experiments.CSV_HEADER, r)) for r in rows]
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(experiments.CSV_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_analytic(args):
    p = _params(args)
    value = analytic.outage(args.scheme, args.method, p, tol=args.tol)
    row = experiments.csv_row(args.scheme, args.method, p, value.probability, rho1_db=args.rho1_db)
    _emit(_rows_text([row], args.format), args.out)


def _cmd_simulate(args):
    p = _params(args)
    est = montecarlo.estimate_outage(p, args.scheme, args.trials, args.seed, args.workers)
    if est.unreliable:
        print(f"warning: only {est.count} outage events; the standard error is unreliable",
              file=sys.stderr)
    row = experiments.csv_row(args.scheme, experiments.MONTE_CARLO, p, est.probability,
                              est.std_error, est.trials, est.seed, rho1_db=args.rho1_db)
    _emit(_rows_text([row], args.format), args.out)


def _curves_text(curves, fmt):
    return experiments.curves_to_json(curves) if fmt == "json" else experiments.curves_to_csv(curves)


def _report_failures(curves):
    failed = [(c.label, pt) for c in curves for pt in c.failures]
    for label, pt in failed:
        print(f"error: {label} at x={pt.x:g}: {pt.error}", file=sys.stderr)
    return bool(failed)


def _cmd_sweep(args):
    ns, rhos = args.n, args.rho1_db
    if len(ns) > 1 and len(rhos) > 1:
        raise InvalidParameterError("sweep either --n or --rho1-db, not both")
    if len(ns) > 1:
        if any(v != int(v) for v in ns):
            raise InvalidParameterError("antenna counts must be integers")
        abscissa, values = "n_antennas", [int(v) for v in ns]
        template = _params(args, n=int(values[0]), rho1_db=rhos[0])
    else:
        abscissa, values = "rho1_db", rhos
        template = _params(args, n=int(ns[0]), rho1_db=rhos[0])
    cfg = experiments.SweepConfig(tuple(args.scheme), tuple(args.method), abscissa, tuple(values),
                                  (("", template),), args.trials, args.seed, args.tol)
    curves = experiments.run_sweep(cfg, workers=args.workers)
    _emit(_curves_text(curves, args.format), args.out)
    return EXIT_NUMERICAL if _report_failures(curves) else EXIT_OK


def _cmd_figure(args):
    cfg = experiments.figure_recipe(args.id, args.trials, args.seed)
    curves = experiments.run_sweep(cfg, workers=args.workers)
    _emit(_curves_text(curves, args.format), args.out)
    print(experiments.compare_report(curves).to_text(), file=sys.stderr)
    return EXIT_NUMERICAL if _report_failures(curves) else EXIT_OK


def _cmd_selftest(args):
    from . import selftest
    return EXIT_OK if selftest.run(workers=args.workers, stream=sys.stderr) else EXIT_NUMERICAL


_COMMANDS = {"analytic": _cmd_analytic, "simulate": _cmd_simulate, "sweep": _cmd_sweep,
             "figure": _cmd_figure, "selftest": _cmd_selftest}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    try:
        code = _COMMANDS[args.command](args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RelayLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
