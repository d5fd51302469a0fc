"""Closed-form and single-integral outage probabilities of the three schemes.

Every exact expression has the shape ``1 - S`` with S a sum of positive
terms, so in double precision the result is only good to ~1e-15 absolute.
Each formula is therefore written once against a small numeric context:
:data:`DOUBLE` (numpy + :mod:`relaylink.specfun`) or :data:`EXTENDED`
(mpmath at 40 digits). With ``precision="auto"`` the double result is
recomputed in extended precision whenever it falls below
:data:`EXTENDED_BELOW`, which keeps high-SNR values meaningful.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import mpmath
import numpy as np

from .errors import (ConsistencyError, FeasibilityError, InvalidParameterError,
                     QuadratureError, UnsupportedProfileError)
from .model import (InterferenceProfile, Scheme, SystemParams, build_profile,
                    characteristic_coefficients)
from .specfun import (QuadratureResult, gauss_2f1_family, integrate_semi_infinite,
                      q_regularized, scaled_k_orders)

DEFAULT_TOL = 1e-6
EXTENDED_BELOW = 1e-7
EXTENDED_DPS = 40
MAX_DPS = 320
CLAMP_SLACK = 1e-5


class AnalyticMethod(str, enum.Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower"
    HIGH_SNR = "highsnr"
    LARGE_N = "largen"


@dataclass(frozen=True)
class OutageValue:
    """An analytic outage probability.

    ``quadrature`` is present for the single-integral expressions; its value
    is the raw (pre-clamp) probability and its error estimate the propagated
    bound from all inner integrals. ``precision`` records which arithmetic
    produced the number.
    """

    probability: float
    quadrature: Optional[QuadratureResult] = None
    precision: str = "double"


# ---------------------------------------------------------------------------
# numeric contexts
# ---------------------------------------------------------------------------

class _Double:
    name = "double"

    num = staticmethod(float)
    exp = staticmethod(np.exp)
    log = staticmethod(np.log)
    log1p = staticmethod(np.log1p)
    fsum = staticmethod(math.fsum)

    @staticmethod
    def g_order(v, y):
        # y^{v/2} K_v(2 sqrt(y)) with K_{-v} = K_v
        g = scaled_k_orders(abs(v), y)[abs(v)]
        return g if v >= 0 else g * np.power(y, float(v))

    @staticmethod
    def f21(a, b, z):
        return gauss_2f1_family(a, b, z)

    @staticmethod
    def q_reg(n, x):
        return q_regularized(n, x)

    @staticmethod
    def chi(profile):
        return profile.char_coeffs, profile.distinct_powers

    @staticmethod
    def integrate(f, tol, scale, hint):
        r = integrate_semi_infinite(f, abs_tol=tol, scale=scale, rel_tol=1e-12)
        return float(r.value), r.abs_error_estimate, r.evaluations


class _Extended:
    name = "extended"

    num = staticmethod(mpmath.mpf)
    exp = staticmethod(mpmath.exp)
    log = staticmethod(mpmath.log)
    log1p = staticmethod(mpmath.log1p)
    fsum = staticmethod(mpmath.fsum)

    @staticmethod
    def g_table(vmax, y):
        root = mpmath.sqrt(y)
        table = [mpmath.besselk(0, 2 * root), root * mpmath.besselk(1, 2 * root)]
        for k in range(1, vmax):
            table.append(k * table[k] + y * table[k - 1])
        return table[: vmax + 1]

    def g_order(self, v, y):
        g = self.g_table(abs(v), y)[abs(v)]
        return g if v >= 0 else g * y ** v

    @staticmethod
    def f21(a, b, z):
        return mpmath.hyp2f1(a, b, b + 1, -z)

    @staticmethod
    def q_reg(n, x):
        term = total = mpmath.mpf(1)
        for k in range(1, n):
            term = term * x / k
            total += term
        return mpmath.exp(-x) * total

    @staticmethod
    def chi(profile):
        powers = tuple(mpmath.mpf(p) for p in profile.distinct_powers)
        return characteristic_coefficients(powers, profile.multiplicities, mpmath.mpf(1)), powers

    @staticmethod
    def integrate(f, tol, scale, hint):
        points = sorted({mpmath.mpf(0), mpmath.mpf(hint), mpmath.mpf(scale)}) + [mpmath.inf]
        value, err = mpmath.quad(f, points, error=True, maxdegree=10)
        return value, abs(err), 0


DOUBLE = _Double()
EXTENDED = _Extended()


def _finish(raw, quad=None, ctx=DOUBLE, strict=True):
    """Clamp to [0, 1]. ``strict`` rejects excursions beyond CLAMP_SLACK;
    the high-SNR approximations are not probabilities at low SNR and pass
    ``strict=False``."""
    raw = float(raw)
    if not math.isfinite(raw):
        raise ConsistencyError(f"outage evaluated to {raw}")
    if strict and (raw < -CLAMP_SLACK or raw > 1 + CLAMP_SLACK):
        raise ConsistencyError(f"outage {raw:.3e} lies outside [0, 1] beyond {CLAMP_SLACK}")
    return OutageValue(min(1.0, max(0.0, raw)), quad, ctx.name)


def _extended(evaluate):
    # 1 - S cancels about log10(1/P) digits: keep 12 spare at the final dps
    dps = EXTENDED_DPS
    while True:
        with mpmath.workdps(dps):
            value = evaluate(EXTENDED)
        if value.probability > 10.0 ** (12 - dps) or dps >= MAX_DPS:
            return value
        dps *= 2


def _run(evaluate, precision):
    """Evaluate ``evaluate(ctx)`` honouring the precision policy."""
    if precision == "extended":
        return _extended(evaluate)
    if precision not in ("auto", "double"):
        raise InvalidParameterError(f"unknown precision {precision!r}")
    try:
        value = evaluate(DOUBLE)
    except (ConsistencyError, OverflowError, FloatingPointError):
        if precision == "double":
            raise
        value = None
    if precision == "auto" and (value is None or value.probability < EXTENDED_BELOW):
        return _extended(evaluate)
    return value


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _link_constants(ctx, p):
    """a = γ/ρ2, b = 1/ρ2, c = γ/ρ1 and β = c (a + b)."""
    g = ctx.num(p.gamma_th)
    a = g / ctx.num(p.rho2)
    b = 1 / ctx.num(p.rho2)
    c = g / ctx.num(p.rho1)
    return a, b, c, c * (a + b)


def _dual_hop_coeffs(ctx, n_x, n, a, b, c):
    """Weights of the Bessel factors in Prob(X (Y-a)/(Y+b) > c).

    X ~ Gamma(n_x), Y ~ Gamma(n). Returns {(k, m): weight}, where the factor
    attached to (k, m) is β^{(k-m+1)/2} K_{k-m+1}(2√β) or its average over
    the interference. All weights are positive.
    """
    pre = 2 * ctx.exp(-c - a) / math.factorial(n - 1)
    out = {}
    for m in range(n_x):
        outer = pre * c ** m / math.factorial(m)
        for j in range(m + 1):
            mid = outer * math.comb(m, j) * b ** (m - j)
            top = n + j - 1
            for k in range(top + 1):
                w = mid * math.comb(top, k) * a ** (top - k)
                out[(k, m)] = out[(k, m)] + w if (k, m) in out else w
    return out


def _dual_hop_sum(ctx, n_x, n, a, b, c, kernel):
    """Complement of Prob(X (Y-a)/(Y+b) <= c) given ``kernel(k, m)``."""
    coeffs = _dual_hop_coeffs(ctx, n_x, n, a, b, c)
    return ctx.fsum([w * kernel(k, m) for (k, m), w in coeffs.items()])


def _bessel_kernel(ctx, beta):
    cache = {}

    def kernel(k, m):
        v = k - m + 1
        if v not in cache:
            cache[v] = ctx.g_order(v, beta)
        return cache[v]
    return kernel


def _require_zf(p):
    if p.n_relay_antennas <= p.n_interferers:
        raise FeasibilityError(
            f"ZF needs N > M (N={p.n_relay_antennas}, M={p.n_interferers})")


def _equal_power(p, profile=None):
    if p.n_interferers == 0:
        return 1.0
    profile = profile or build_profile(p.rho_i)
    if not profile.is_equal_power:
        raise UnsupportedProfileError("the MMSE expressions need equal interference powers")
    return profile.distinct_powers[0]


def _mmse_weights(ctx, n, m_int, rho_i):
    """(m, ρ_I^{N-m+1} / (Γ(m) Γ(N-m+2) Γ(m-N+M))) for m = m1..N."""
    m1 = max(0, n - m_int) + 1
    out = []
    for m in range(m1, n + 1):
        den = math.factorial(m - 1) * math.factorial(n - m + 1) * math.factorial(m - n + m_int - 1)
        out.append((m, ctx.num(rho_i) ** (n - m + 1) / den))
    return out


def _z_survival(ctx, p, rho_i, z):
    """1 - F_Z(z) from the unified c.d.f."""
    n, m_int = p.n_relay_antennas, p.n_interferers
    x = ctx.num(z) / ctx.num(p.rho1)
    head = ctx.q_reg(n, x)
    if m_int == 0:
        return head
    arg = ctx.num(rho_i) * x
    tail = ctx.fsum([w * ctx.f21(m_int + 1, n - m + 1, arg) for m, w in _mmse_weights(ctx, n, m_int, rho_i)])
    return head - math.factorial(m_int) * ctx.exp(-x) * x ** n * tail


# ---------------------------------------------------------------------------
# MRC/MRT
# ---------------------------------------------------------------------------

def outage_mrc_exact(p: SystemParams, prof: InterferenceProfile | None = None,
                     tol: float = DEFAULT_TOL, precision: str = "auto") -> OutageValue:
    """Exact MRC/MRT outage: one semi-infinite integral per Bessel term,
    averaging the interference-conditioned outage over the hyper-exponential
    interference sum."""
    if p.gamma_th == 0:
        return OutageValue(0.0)
    prof = prof if prof is not None else build_profile(p.rho_i)
    n = p.n_relay_antennas

    def evaluate(ctx):
        a, b, c, beta = _link_constants(ctx, p)
        if p.n_interferers == 0:
            return _finish(1 - _dual_hop_sum(ctx, n, n, a, b, c, _bessel_kernel(ctx, beta)), ctx=ctx)
        chis, powers = ctx.chi(prof)
        mixture = []
        for i, (power, row) in enumerate(zip(powers, chis)):
            for q, chi in enumerate(row, start=1):
                if chi != 0:
                    mixture.append((i + 1, q, power, chi * power ** (-q) / math.factorial(q - 1)))
        # kernel(k, m) depends on (k - m + 1, m) only: merge weights per key
        weights = {}
        for (k, m), w in _dual_hop_coeffs(ctx, n, n, a, b, c).items():
            key = (k - m + 1, m)
            weights[key] = weights.get(key, 0) + w
        share = tol / (len(weights) * len(mixture))
        vmax = max(abs(v) for v, _ in weights)
        tables = {}

        def g_order(v, x):
            if ctx is DOUBLE:
                return ctx.g_order(v, beta * (x + 1))
            # extended: every order at a node comes from one K0/K1 pair
            if x not in tables:
                tables[x] = ctx.g_table(vmax, beta * (x + 1))
            g = tables[x][abs(v)]
            return g if v >= 0 else g * (beta * (x + 1)) ** v

        terms, bound, evals = [], 0.0, 0
        for (v, m), w in weights.items():
            for pi, q, power, mix in mixture:
                lam = c + 1 / power

                def f(x, v=v, m=m, q=q, lam=lam):
                    return g_order(v, x) * ctx.exp(
                        m * ctx.log1p(x) + (q - 1) * ctx.log(x) - lam * x)
                scale = abs(float(w * mix))
                try:
                    # one x-scale per interference power keeps nodes shared
                    value, err, used = ctx.integrate(
                        f, share / scale if scale > 0 else 1.0, float((n + 1) / lam), 1.0)
                except QuadratureError as exc:
                    raise QuadratureError(
                        f"MRC inner integral failed for term (p={pi}, q={q}, k-m+1={v}, m={m}): {exc}",
                        exc.result) from exc
                terms.append(w * mix * value)
                bound += scale * float(err)
                evals += used
        raw = 1 - ctx.fsum(terms)
        quad = QuadratureResult(float(raw), bound, max(evals, 1))
        return _finish(raw, quad, ctx)

    return _run(evaluate, precision)


def outage_mrc_lower(p: SystemParams, prof: InterferenceProfile | None = None,
                     precision: str = "auto") -> OutageValue:
    """Closed-form lower bound from min(y1 ρ1/(U+1), y2 ρ2) >= γ."""
    if p.gamma_th == 0:
        return OutageValue(0.0)
    prof = prof if prof is not None else build_profile(p.rho_i)
    n = p.n_relay_antennas

    def evaluate(ctx):
        a, _, c, _ = _link_constants(ctx, p)
        g, r1 = ctx.num(p.gamma_th), ctx.num(p.rho1)
        if p.n_interferers == 0:
            first = ctx.q_reg(n, c)
        else:
            chis, powers = ctx.chi(prof)
            outer = []
            for k in range(n):
                inner = []
                for l in range(k + 1):
                    s = []
                    for power, row in zip(powers, chis):
                        shrink = r1 / (r1 + power * g)
                        for j, chi in enumerate(row, start=1):
                            s.append(chi * math.factorial(j + l - 1) / math.factorial(j - 1)
                                     * power ** l * shrink ** (j + l))
                    inner.append(math.comb(k, l) * ctx.fsum(s))
                outer.append(c ** k / math.factorial(k) * ctx.fsum(inner))
            first = ctx.exp(-c) * ctx.fsum(outer)
        return _finish(1 - ctx.q_reg(n, a) * first, ctx=ctx)

    return _run(evaluate, precision)


def interference_moment(p: SystemParams, prof: InterferenceProfile | None = None) -> float:
    """E[(1 + U)^N] for the hyper-exponential interference sum U."""
    n, m_int = p.n_relay_antennas, p.n_interferers
    if m_int == 0:
        return 1.0
    prof = prof if prof is not None else build_profile(p.rho_i)
    if prof.is_equal_power:
        rho = prof.distinct_powers[0]
        return math.fsum(math.comb(n, k) * math.factorial(k + m_int - 1) / math.factorial(m_int - 1)
                         * rho ** k for k in range(n + 1))
    return math.fsum(math.comb(n, k) * chi * math.factorial(k + j - 1) / math.factorial(j - 1)
                     * power ** k for k in range(n + 1) for power, j, chi in prof.terms())


def highsnr_coefficient(scheme, p: SystemParams, prof: InterferenceProfile | None = None) -> float:
    """Multiplier of (γ/ρ1)^N in the high-SNR outage of MRC or MMSE."""
    scheme = Scheme(scheme)
    n, mu = p.n_relay_antennas, p.mu
    if scheme is Scheme.MRC:
        return (mu ** -n + interference_moment(p, prof)) / math.factorial(n)
    if scheme is Scheme.MMSE:
        rho_i = _equal_power(p, prof)
        weights = _mmse_weights(DOUBLE, n, p.n_interferers, rho_i) if p.n_interferers else []
        return (math.factorial(p.n_interferers) * math.fsum(w for _, w in weights)
                + (1 + mu ** -n) / math.factorial(n))
    raise InvalidParameterError("ZF has diversity N-M; use outage_zf_highsnr")


def outage_mrc_highsnr(p: SystemParams, prof: InterferenceProfile | None = None) -> OutageValue:
    """Leading high-SNR term, diversity order N."""
    c = p.gamma_th / p.rho1
    return _finish(highsnr_coefficient(Scheme.MRC, p, prof) * c ** p.n_relay_antennas, strict=False)


# ---------------------------------------------------------------------------
# ZF/MRT and the interference-free large-N limit
# ---------------------------------------------------------------------------

def _closed_dual_hop(p, n_x, precision):
    if p.gamma_th == 0:
        return OutageValue(0.0)
    n = p.n_relay_antennas

    def evaluate(ctx):
        a, b, c, beta = _link_constants(ctx, p)
        return _finish(1 - _dual_hop_sum(ctx, n_x, n, a, b, c, _bessel_kernel(ctx, beta)), ctx=ctx)

    return _run(evaluate, precision)


def outage_zf_exact(p: SystemParams, precision: str = "auto") -> OutageValue:
    """Exact ZF/MRT outage; y3 ~ Gamma(N-M) replaces the first hop, so the
    interference powers never enter."""
    _require_zf(p)
    return _closed_dual_hop(p, p.n_relay_antennas - p.n_interferers, precision)


def outage_zf_highsnr(p: SystemParams) -> OutageValue:
    _require_zf(p)
    d = p.n_relay_antennas - p.n_interferers
    return _finish((p.gamma_th / p.rho1) ** d / math.factorial(d), strict=False)


def outage_largen(p: SystemParams, precision: str = "auto") -> OutageValue:
    """Outage of the interference-free dual-hop link that ZF and MMSE reach as N grows."""
    return _closed_dual_hop(p, p.n_relay_antennas, precision)


# ---------------------------------------------------------------------------
# MMSE/MRT
# ---------------------------------------------------------------------------

def cdf_z_unified(p: SystemParams, z: float, precision: str = "double") -> float:
    """C.d.f. of the MMSE first-hop SINR Z in the single (unified) form."""
    rho_i = _equal_power(p)
    if z < 0:
        raise InvalidParameterError("z must be >= 0")
    if z == 0:
        return 0.0

    def evaluate(ctx):
        return OutageValue(float(1 - _z_survival(ctx, p, rho_i, z)), None, ctx.name)

    if precision == "extended":
        with mpmath.workdps(EXTENDED_DPS):
            return evaluate(EXTENDED).probability
    return evaluate(DOUBLE).probability


def cdf_z_piecewise(p: SystemParams, z: float) -> float:
    """C.d.f. of Z from the branch form: A_m = 1 when N >= M + m."""
    rho_i = _equal_power(p)
    if z < 0:
        raise InvalidParameterError("z must be >= 0")
    n, m_int = p.n_relay_antennas, p.n_interferers
    x = z / p.rho1
    u = rho_i * x
    terms = []
    for m in range(1, n + 1):
        if n >= m_int + m:
            a_m = 1.0
        else:
            num = 1.0 + math.fsum(math.comb(m_int, i) * u ** i for i in range(1, n - m + 1))
            a_m = num / (1.0 + u) ** m_int
        terms.append(a_m * x ** (m - 1) / math.factorial(m - 1))
    return 1.0 - math.exp(-x) * math.fsum(terms)


def outage_mmse_exact(p: SystemParams, tol: float = DEFAULT_TOL,
                      precision: str = "auto") -> OutageValue:
    """Exact MMSE/MRT outage: interference-free closed part plus a correction
    made of semi-infinite integrals of 2F1 against e^{-x - β/x}."""
    if p.gamma_th == 0:
        return OutageValue(0.0)
    rho_i = _equal_power(p)
    n, m_int = p.n_relay_antennas, p.n_interferers

    def evaluate(ctx):
        a, b, c, beta = _link_constants(ctx, p)
        closed = _dual_hop_sum(ctx, n, n, a, b, c, _bessel_kernel(ctx, beta))
        if m_int == 0:
            return _finish(1 - closed, ctx=ctx)
        shift = ctx.num(rho_i) * c
        spread = a + b
        pre = (math.factorial(m_int) / math.factorial(n - 1)) * ctx.exp(-c - a) * c ** n
        weights = {}
        for m, w in _mmse_weights(ctx, n, m_int, rho_i):
            for j in range(n + 1):
                mid = pre * w * math.comb(n, j) * b ** (n - j)
                top = n + j - 1
                for k in range(top + 1):
                    weights[(m, k)] = weights.get((m, k), 0) + mid * math.comb(top, k) * a ** (top - k)
        share = tol / len(weights)
        terms, bound, evals = [], 0.0, 0
        hyper = {}

        def f21_at(m, x):
            # the k-integrals of one m share nodes in extended mode; reuse 2F1
            if ctx is DOUBLE:
                return ctx.f21(m_int + 1, n - m + 1, shift * (1 + spread / x))
            key = (m, x)
            if key not in hyper:
                hyper[key] = ctx.f21(m_int + 1, n - m + 1, shift * (1 + spread / x))
            return hyper[key]

        for (m, k), w in weights.items():
            def f(x, m=m, k=k):
                return ctx.exp(-beta / x - x + (k - n) * ctx.log(x)) * f21_at(m, x)
            scale = abs(float(w))
            try:
                value, err, used = ctx.integrate(
                    f, share / scale if scale > 0 else 1.0, 1.0, float(beta))
            except QuadratureError as exc:
                raise QuadratureError(
                    f"MMSE inner integral failed for term (m={m}, k={k}): {exc}", exc.result) from exc
            terms.append(w * value)
            bound += scale * float(err)
            evals += used
        raw = 1 - closed + ctx.fsum(terms)
        quad = QuadratureResult(float(raw), bound, max(evals, 1))
        return _finish(raw, quad, ctx)

    return _run(evaluate, precision)


def outage_mmse_lower(p: SystemParams, precision: str = "auto") -> OutageValue:
    """Closed-form lower bound from min(Z, ρ2 y2) >= γ."""
    if p.gamma_th == 0:
        return OutageValue(0.0)
    rho_i = _equal_power(p)

    def evaluate(ctx):
        a, _, _, _ = _link_constants(ctx, p)
        survive = _z_survival(ctx, p, rho_i, ctx.num(p.gamma_th))
        return _finish(1 - ctx.q_reg(p.n_relay_antennas, a) * survive, ctx=ctx)

    return _run(evaluate, precision)


def outage_mmse_highsnr(p: SystemParams) -> OutageValue:
    c = p.gamma_th / p.rho1
    return _finish(highsnr_coefficient(Scheme.MMSE, p) * c ** p.n_relay_antennas, strict=False)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def outage(scheme, method, p: SystemParams, tol: float = DEFAULT_TOL,
           precision: str = "auto") -> OutageValue:
    """Evaluate one (scheme, method) pair."""
    scheme, method = Scheme(scheme), AnalyticMethod(method)
    if method is AnalyticMethod.LARGE_N:
        if scheme is Scheme.MRC:
            raise InvalidParameterError("the large-N limit holds for ZF and MMSE only")
        return outage_largen(p, precision)
    if scheme is Scheme.MRC:
        if method is AnalyticMethod.EXACT:
            return outage_mrc_exact(p, tol=tol, precision=precision)
        if method is AnalyticMethod.LOWER_BOUND:
            return outage_mrc_lower(p, precision=precision)
        return outage_mrc_highsnr(p)
    if scheme is Scheme.ZF:
        if method is AnalyticMethod.EXACT:
            return outage_zf_exact(p, precision)
        if method is AnalyticMethod.LOWER_BOUND:
            raise InvalidParameterError("no closed-form lower bound is defined for ZF")
        return outage_zf_highsnr(p)
    if method is AnalyticMethod.EXACT:
        return outage_mmse_exact(p, tol=tol, precision=precision)
    if method is AnalyticMethod.LOWER_BOUND:
        return outage_mmse_lower(p, precision)
    return outage_mmse_highsnr(p)
