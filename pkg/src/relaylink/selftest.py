"""Quick end-to-end checks run by ``relaylink selftest`` (well under two minutes)."""

from __future__ import annotations

import math
import sys

import mpmath
import numpy as np

from . import analytic, montecarlo
from .model import Scheme, SystemParams
from .specfun import bessel_k_int, gauss_2f1_family, integrate_semi_infinite


def _dual_path():
    rng = np.random.default_rng(11)
    p = SystemParams.from_mu(4, 2, 10.0, rho_i=1.0)
    worst = 0.0
    for _ in range(500):
        d = montecarlo.draw_channel(rng, 4, 2)
        for s in Scheme:
            a = montecarlo.sinr_generic(d, montecarlo.combiner(s, d, p), p, s).sinr
            b = montecarlo.sinr_scheme(d, p, s).sinr
            worst = max(worst, abs(a - b) / b)
    return worst <= 1e-10, f"max relative SINR gap {worst:.2e}"


def _analytic_vs_mc(workers):
    worst = 0.0
    for n, m in ((2, 1), (3, 2)):
        p = SystemParams.from_mu(n, m, 10.0)
        for s in Scheme:
            exact = analytic.outage(s, "exact", p).probability
            est = montecarlo.estimate_outage(p, s, 200_000, seed=5, workers=workers)
            worst = max(worst, abs(exact - est.probability) / est.std_error)
    return worst <= 4.0, f"max gap {worst:.2f} SE at 2e5 trials"


def _special_functions():
    worst = 0.0
    for v in range(0, 11):
        for x in (0.01, 0.5, 3.0, 20.0):
            worst = max(worst, abs(bessel_k_int(v, x) / float(mpmath.besselk(v, x)) - 1))
    for a, b, z in ((4, 2, 1.7), (6, 3, 100.0), (13, 2, 5.0)):
        ref = float(mpmath.hyp2f1(a, b, b + 1, -z))
        worst = max(worst, abs(gauss_2f1_family(a, b, z) / ref - 1))
    q = integrate_semi_infinite(lambda x: np.exp(-x))
    ok = worst <= 1e-10 and abs(q.value - 1) <= 1e-6
    return ok, f"worst relative error {worst:.1e}"


def _high_snr():
    p = SystemParams.from_mu(3, 2, 10 ** 3.5)
    worst = 0.0
    for s in Scheme:
        e = analytic.outage(s, "exact", p).probability
        h = analytic.outage(s, "highsnr", p).probability
        worst = max(worst, abs(h - e) / e)
    return worst <= 0.1, f"max relative gap {worst:.2e} at 35 dB"


def _zf_invariance():
    a = analytic.outage_zf_exact(SystemParams.from_mu(3, 2, 10.0, rho_i=1.0)).probability
    b = analytic.outage_zf_exact(SystemParams.from_mu(3, 2, 10.0, rho_i=1000.0)).probability
    e1 = montecarlo.estimate_outage(SystemParams.from_mu(3, 2, 10.0, rho_i=1.0), "zf", 20_000, 3, 1)
    e2 = montecarlo.estimate_outage(SystemParams.from_mu(3, 2, 10.0, rho_i=1000.0), "zf", 20_000, 3, 1)
    return a == b and e1.count == e2.count, f"analytic {a!r}, MC counts {e1.count}/{e2.count}"


CHECKS = (("dual-path SINR", lambda w: _dual_path()),
          ("analytic vs Monte Carlo", _analytic_vs_mc),
          ("special functions", lambda w: _special_functions()),
          ("high-SNR approximations", lambda w: _high_snr()),
          ("ZF interference invariance", lambda w: _zf_invariance()))


def run(workers=None, stream=sys.stderr) -> bool:
    ok = True
    for name, check in CHECKS:
        passed, detail = check(workers)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}", file=stream)
    return ok
