"""Independent reference computations used by the tests.

None of these call into the package: they rebuild quantities from their
defining integrals or linear systems with mpmath or plain numpy.
"""

import math

import mpmath
import numpy as np


def bessel_k_integral(v, x):
    """K_v(x) = ∫_0^∞ exp(-x cosh t) cosh(v t) dt."""
    with mpmath.workdps(30):
        x = mpmath.mpf(x)
        # the integrand is below e^{-700} once x cosh t > 700
        top = float(mpmath.acosh(max(750 / x, 1.5))) + 1
        cuts = [0] + [top * k / 8 for k in range(1, 9)]
        return float(mpmath.quad(lambda t: mpmath.exp(-x * mpmath.cosh(t)) * mpmath.cosh(v * t), cuts))


def f21_euler(a, b, z):
    """2F1(a, b; b+1; -z) = b ∫_0^1 t^(b-1) (1 + z t)^(-a) dt."""
    with mpmath.workdps(30):
        z = mpmath.mpf(z)
        cuts = [0, 1] if z < 10 else [0, 1 / z, 1]
        return float(b * mpmath.quad(lambda t: t ** (b - 1) * (1 + z * t) ** (-a), cuts))


def upper_gamma_integral(n, x):
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: t ** (n - 1) * mpmath.exp(-t), [x, x + 10, mpmath.inf]))


def partial_fraction_linear(powers):
    """χ for distinct powers, from the identity evaluated at sample points.

    Solves Σ_i χ_i / (1 + p_i s) = Π_k 1/(1 + p_k s) at len(powers) points.
    """
    powers = np.asarray(powers, dtype=float)
    s = np.linspace(0.1, 1.0, len(powers))
    a = 1.0 / (1.0 + np.outer(s, powers))
    rhs = np.prod(a, axis=1)
    return np.linalg.solve(a, rhs)


def partial_fraction_repeated(powers, multiplicities):
    """χ[i][j-1] for repeated powers from a least-squares fit of the identity."""
    cols, index = [], []
    for i, (p, tau) in enumerate(zip(powers, multiplicities)):
        for j in range(1, tau + 1):
            index.append((i, j))
            cols.append(p)
    s = np.linspace(0.05, 2.0, 4 * len(cols))
    a = np.column_stack([(1.0 + p * s) ** (-j) for (i, j), p in zip(index, cols)])
    rhs = np.ones_like(s)
    for p, tau in zip(powers, multiplicities):
        rhs = rhs * (1.0 + p * s) ** (-tau)
    sol = np.linalg.lstsq(a, rhs, rcond=None)[0]
    rows = [[0.0] * tau for tau in multiplicities]
    for (i, j), v in zip(index, sol):
        rows[i][j - 1] = v
    return rows


def composite_reference(f, a, b, n=1_000_000):
    """Composite Simpson rule on [a, b] with n (even) panels."""
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def dual_hop_outage_integral(n_x, n, rho1, rho2, gamma):
    """Prob(ρ1ρ2 X Y / (ρ1 X + ρ2 Y + 1) < γ), X ~ Gamma(n_x), Y ~ Gamma(n),
    by conditioning on Y."""
    with mpmath.workdps(30):
        r1, r2, g = mpmath.mpf(rho1), mpmath.mpf(rho2), mpmath.mpf(gamma)

        def cond(y):
            if r2 * y <= g:
                return mpmath.mpf(1)
            t = g * (r2 * y + 1) / (r1 * (r2 * y - g))
            return mpmath.gammainc(n_x, 0, t, regularized=True)

        def dens(y):
            return cond(y) * y ** (n - 1) * mpmath.exp(-y) / math.factorial(n - 1)
        knot = g / r2
        return float(mpmath.quad(dens, [0, knot, 2 * knot + 1, n + 10, mpmath.inf]))


def _second_hop_average(p, first_hop_cdf):
    """Prob(ρ2 Y Z / (1 + ρ2 Y + Z) < γ) for Y ~ Gamma(N) given the c.d.f. of Z.

    For ρ2 y > γ the event is Z < γ (1 + ρ2 y) / (ρ2 y - γ); below that it is sure.
    """
    n, g, r2 = p.n_relay_antennas, p.gamma_th, p.rho2
    knot = g / r2
    with mpmath.workdps(20):
        def dens(y):
            return y ** (n - 1) * mpmath.exp(-y) / math.factorial(n - 1)

        def tail(y):
            if r2 * y <= g:
                return mpmath.mpf(0)
            z = g * (1 + r2 * y) / (r2 * y - g)
            return (1 - first_hop_cdf(float(z))) * dens(y)
        above = mpmath.quad(tail, [knot, knot * 1.01 + 1e-9, knot + 1, n + 5, n + 40, mpmath.inf])
        return float(1 - above)


def _survival(n, x):
    """e^{-x} Σ_{k<n} x^k/k!, summed in log space so huge x gives 0."""
    x = np.maximum(np.asarray(x, dtype=float), 1e-300)
    k = np.arange(n)
    logs = -x[..., None] + k * np.log(x)[..., None] - np.array([math.lgamma(i + 1) for i in k])
    return np.exp(logs).sum(axis=-1)


def mrc_first_hop_cdf(p, order=120):
    """c.d.f. of Z = ρ1 y1 / (1 + U) averaging over the hyper-exponential U
    by Gauss-Laguerre quadrature per (power, multiplicity) term."""
    t, w = np.polynomial.laguerre.laggauss(order)
    powers = sorted(set(p.rho_i), reverse=True)
    counts = [p.rho_i.count(r) for r in powers]
    n = p.n_relay_antennas

    def lower_gamma_reg(x):
        return 1 - _survival(n, x)

    if not powers:
        return lambda z: float(lower_gamma_reg(z / p.rho1))
    chi = partial_fraction_repeated(powers, counts)

    def cdf(z):
        total = 0.0
        for r, row in zip(powers, chi):
            for j, c in enumerate(row, start=1):
                if c == 0:
                    continue
                vals = lower_gamma_reg(z * (1 + r * t) / p.rho1)
                total += c / math.factorial(j - 1) * np.sum(w * t ** (j - 1) * vals)
        return total
    return cdf


def mmse_first_hop_cdf(p):
    """Piecewise c.d.f. of the MMSE first-hop SINR for equal powers."""
    n, m, rho = p.n_relay_antennas, p.n_interferers, p.rho_i[0] if p.rho_i else 1.0

    def cdf(z):
        x = z / p.rho1
        if x > 700:
            return 1.0
        u = rho * x
        s = 0.0
        for k in range(1, n + 1):
            if n >= m + k:
                a = 1.0
            else:
                a = (1 + sum(math.comb(m, i) * u ** i for i in range(1, n - k + 1))) / (1 + u) ** m
            s += a * x ** (k - 1) / math.factorial(k - 1)
        return 1 - math.exp(-x) * s
    return cdf


def zf_first_hop_cdf(p):
    d = p.n_relay_antennas - p.n_interferers

    def cdf(z):
        return 1 - float(_survival(d, z / p.rho1))
    return cdf


def outage_oracle(p, scheme):
    cdf = {"mrc": mrc_first_hop_cdf, "zf": zf_first_hop_cdf, "mmse": mmse_first_hop_cdf}[scheme](p)
    return _second_hop_average(p, cdf)
