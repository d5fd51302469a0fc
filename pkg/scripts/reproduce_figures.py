"""Regenerate the data behind every outage figure.

Writes <out>/<fig>.csv, <fig>.json and <fig>_report.json per figure.

    python3 scripts/reproduce_figures.py --out results --trials 1000000
"""

import argparse
import pathlib
import sys
import time

from relaylink import experiments as ex


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=ex.DEFAULT_TRIALS)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("figures", nargs="*", default=list(ex.FIGURES))
    args = parser.parse_args(argv)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = False
    for fig in args.figures:
        start = time.perf_counter()
        curves = ex.run_sweep(ex.figure_recipe(fig, args.trials, args.seed), workers=args.workers)
        ex.save_curves(curves, out / f"{fig}.csv", fmt="csv")
        ex.save_curves(curves, out / f"{fig}.json")
        report = ex.compare_report(curves)
        (out / f"{fig}_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        failed |= any(c.failures for c in curves)
        print(f"{fig}: {len(curves)} curves in {time.perf_counter() - start:.0f} s", file=sys.stderr)
        print(report.to_text(), file=sys.stderr)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
