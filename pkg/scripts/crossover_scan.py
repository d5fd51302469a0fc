"""Locate the MRC/ZF crossover of the exact outage curves at N=3, M=2.

For strong interference the ZF curve (diversity N-M) starts below MRC and
is overtaken once the MRC diversity N wins; this prints where that happens.

    python3 scripts/crossover_scan.py --rho-i-db 30 --stop 60
"""

import argparse

import numpy as np

from relaylink import analytic
from relaylink import experiments as ex
from relaylink.model import SystemParams


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=3)
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--rho-i-db", type=float, default=30.0)
    parser.add_argument("--stop", type=float, default=60.0)
    parser.add_argument("--step", type=float, default=2.5)
    args = parser.parse_args(argv)

    xs = np.arange(0.0, args.stop + args.step / 2, args.step)
    mrc, zf = [], []
    for db in xs:
        p = SystemParams.from_db(args.n, args.m, db, rho_i_db=args.rho_i_db)
        mrc.append(analytic.outage_mrc_exact(p).probability)
        zf.append(analytic.outage_zf_exact(p).probability)
        print(f"{db:6.1f} dB  MRC {mrc[-1]:.4e}  ZF {zf[-1]:.4e}")
    print("crossovers (dB):", ex.find_crossovers(xs, mrc, zf))


if __name__ == "__main__":
    main()
