"""Special functions and semi-infinite quadrature for the outage formulas.

Only what the closed forms need is covered: integer-order gamma and upper
incomplete gamma, integer-order modified Bessel functions of the second kind,
the Gauss hypergeometric family 2F1(a, b; b+1; -z) with integer a, b, and an
adaptive Gauss-Kronrod rule on (0, inf).

Everything accepts numpy arrays where the argument is continuous, so the
integrands built by :mod:`relaylink.analytic` can be evaluated node-wise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError, QuadratureError

EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "QuadratureResult",
    "gamma_int",
    "upper_inc_gamma_int",
    "q_regularized",
    "bessel_k_int",
    "scaled_k_orders",
    "gauss_2f1_family",
    "integrate_semi_infinite",
]


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def gamma_int(n: int) -> float:
    """Return Γ(n) = (n-1)! for a positive integer ``n`` (exact up to n = 23)."""
    if n < 1:
        raise InvalidParameterError(f"gamma_int needs n >= 1, got {n}")
    if n > 171:
        raise OverflowError(f"Γ({n}) is not representable as a float")
    return float(math.factorial(n - 1))


def q_regularized(n: int, x):
    """Regularized upper incomplete gamma Γ(n, x)/Γ(n) for integer ``n``.

    Uses the finite sum e^{-x} Σ_{k<n} x^k/k!, which has only positive terms.
    """
    if n < 1:
        raise InvalidParameterError(f"incomplete gamma needs n >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, n):
        term = term * x / k
        total = total + term
    out = np.exp(-x) * total
    return float(out) if out.ndim == 0 else out


def upper_inc_gamma_int(n: int, x):
    """Γ(n, x) = (n-1)! e^{-x} Σ_{k=0}^{n-1} x^k/k! for integer ``n >= 1``."""
    if np.any(np.asarray(x) < 0):
        raise InvalidParameterError("upper_inc_gamma_int needs x >= 0")
    return gamma_int(n) * q_regularized(n, x)


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind, integer order
# ---------------------------------------------------------------------------

def _k01_series(x):
    # Ascending series, fine for 0 < x <= 2: t <= 1 so 30 terms reach 1e-17.
    t = 0.25 * x * x
    term = np.ones_like(x)
    i0 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    harmonic = 0.0
    for k in range(30):
        if k:
            term = term * t / (k * k)
            harmonic += 1.0 / k
        term1 = term / (k + 1)
        i0 += term
        s0 += harmonic * term
        i1 += term1
        # psi(k+1) + psi(k+2)
        s1 += (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * EULER_GAMMA) * term1
    log_half = np.log(0.5 * x)
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + log_half * (0.5 * x * i1) - 0.25 * x * s1
    return k0, k1


def _k01_scaled_cf(x):
    """e^x K_0(x), e^x K_1(x) for x > 2 by Steed's continued fraction."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 20000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < 1e-17 * np.abs(s)):
            break
    k0 = np.sqrt(math.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - a1 * h) / x
    return k0, k1


def _k01_scaled_asymptotic(x):
    """e^x K_0(x), e^x K_1(x) from the Hankel expansion; accurate for x >= 25."""
    pre = np.sqrt(math.pi / (2.0 * x))
    out = []
    for mu in (0.0, 4.0):
        term = np.ones_like(x)
        total = np.ones_like(x)
        for k in range(1, 30):
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
            total = total + term
        out.append(pre * total)
    return out[0], out[1]


def _k01(x, scaled):
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    small = x <= 2.0
    if np.any(small):
        xs = x[small]
        a, b = _k01_series(xs)
        if scaled:
            e = np.exp(xs)
            a, b = a * e, b * e
        k0[small], k1[small] = a, b
    for part, rule in ((~small & (x < 25.0), _k01_scaled_cf), (x >= 25.0, _k01_scaled_asymptotic)):
        if not np.any(part):
            continue
        xl = x[part]
        a, b = rule(xl)
        if not scaled:
            # silent flush to zero once e^{-x} underflows
            with np.errstate(under="ignore"):
                e = np.exp(-xl)
            a, b = a * e, b * e
        k0[part], k1[part] = a, b
    return k0, k1


def bessel_k_int(v: int, x, scaled: bool = False):
    """Modified Bessel function of the second kind K_v(x) for integer ``v``.

    K_{-v} = K_v. K_0 and K_1 come from the ascending series (x <= 2),
    Steed's continued fraction (2 < x < 25) or the Hankel asymptotic
    expansion (x >= 25); higher orders by upward recurrence, which is
    stable for K.

    Parameters
    ----------
    v : int
        Order, any sign.
    x : float or ndarray
        Argument, strictly positive.
    scaled : bool
        Return e^x K_v(x) instead, which avoids underflow for large x.

    Returns
    -------
    float or ndarray
        Unscaled values underflow to 0 for x beyond ~705, and overflow to inf
        for very large orders at small x.
    """
    v = abs(int(v))
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise InvalidParameterError("bessel_k_int needs x > 0")
    flat = np.atleast_1d(xa).astype(float)
    k0, k1 = _k01(flat, scaled)
    if v == 0:
        out = k0
    else:
        prev, cur = k0, k1
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(1, v):
                prev, cur = cur, prev + (2.0 * n / flat) * cur
        out = cur
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def scaled_k_orders(vmax: int, y):
    """Table of g_v(y) = y^{v/2} K_v(2 sqrt(y)) for v = 0..vmax.

    The recurrence g_{v+1} = v g_v + y g_{v-1} has positive terms only, so it
    carries none of the overflow of the bare K_v at small arguments.
    """
    y = np.asarray(y, dtype=float)
    root = np.sqrt(y)
    # run the recurrence on e^{2 sqrt(y)}-scaled values, unscale at the end
    k0 = bessel_k_int(0, 2.0 * root, scaled=True)
    k1 = bessel_k_int(1, 2.0 * root, scaled=True)
    table = [np.asarray(k0, dtype=float), np.asarray(root * k1, dtype=float)]
    with np.errstate(over="ignore"):
        for v in range(1, vmax):
            table.append(v * table[v] + y * table[v - 1])
    with np.errstate(under="ignore"):
        damp = np.exp(-2.0 * root)
    with np.errstate(invalid="ignore", over="ignore"):
        table = [np.where(damp > 0, g * damp, 0.0) for g in table]
    table = [float(g) if g.ndim == 0 else g for g in table]
    return table[: vmax + 1]


# ---------------------------------------------------------------------------
# 2F1(a, b; b+1; -z)
# ---------------------------------------------------------------------------

_PFAFF_SWITCH = 4.0
_CLOSED_FORM_MAX_A = 12


def _f21_pfaff(a, b, z):
    # (1+z)^{-a} 2F1(a, 1; b+1; w), w = z/(1+z) in [0, 1): positive terms.
    w = z / (1.0 + z)
    term = np.ones_like(z)
    total = np.ones_like(z)
    n = 0
    while True:
        term = term * ((a + n) / (b + 1.0 + n)) * w
        total = total + term
        n += 1
        if n > a and np.all(term <= 1e-17 * total):
            break
        if n > 5_000_000:
            break
    return total * np.power(1.0 + z, -float(a))


def _f21_closed(a, b, z):
    # b z^{-b} ∫_1^{1+z} (u-1)^{b-1} u^{-a} du expanded binomially.
    lz = np.log1p(z)
    total = np.zeros_like(z)
    for i in range(b):
        e = i - a + 1
        piece = lz if e == 0 else np.expm1(e * lz) / e
        total = total + math.comb(b - 1, i) * (-1) ** (b - 1 - i) * piece
    return b * total / np.power(z, float(b))


def gauss_2f1_family(a: int, b: int, z):
    """Evaluate 2F1(a, b; b+1; -z) for integers a, b >= 1 and z >= 0.

    For z <= 4 a Pfaff-transformed series with positive terms is summed. For
    larger z the Euler integral has an exact finite form, used while a <= 12;
    beyond that the series is summed regardless (slowly, but correctly).
    """
    if a < 1 or b < 1:
        raise InvalidParameterError(f"need integer a, b >= 1, got a={a}, b={b}")
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise InvalidParameterError("gauss_2f1_family needs z >= 0")
    flat = np.atleast_1d(za).astype(float)
    out = np.empty_like(flat)
    near = flat <= _PFAFF_SWITCH
    if np.any(near):
        out[near] = _f21_pfaff(a, b, flat[near])
    if np.any(~near):
        zf = flat[~near]
        out[~near] = _f21_closed(a, b, zf) if a <= _CLOSED_FORM_MAX_A else _f21_pfaff(a, b, zf)
    out = out.reshape(za.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Adaptive quadrature on (0, inf)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W_GAUSS = np.zeros(15)
_W_GAUSS[[1, 3, 5]] = _WG[:3]
_W_GAUSS[[13, 11, 9]] = _WG[:3]
_W_GAUSS[7] = _WG[3]

# Geometric initial partition of t in (0, 1): features at any scale near
# x = 0 or x = inf fall inside some panel instead of between nodes.
_DEFAULT_BREAKS = (
    0.0, 1e-14, 1e-11, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5,
    0.8, 0.95, 0.99, 0.999, 0.9999, 1 - 1e-6, 1 - 1e-8, 1.0,
)


def _panels(g, lo, hi):
    """Apply G7/K15 on each panel [lo_i, hi_i] of the mapped integrand."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = g(t)
    k15 = half * (vals @ _W_KRONROD)
    g7 = half * (vals @ _W_GAUSS)
    return k15, np.abs(k15 - g7)


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    abs_tol: float = 1e-6,
    budget: int = 200_000,
    *,
    scale: float = 1.0,
    rel_tol: float = 0.0,
    breakpoints: Sequence[float] | None = None,
) -> QuadratureResult:
    """Integrate ``f`` over (0, inf).

    The substitution x = scale * t/(1-t) maps the range onto (0, 1), which is
    split into a fixed geometric partition and then refined by repeatedly
    bisecting the panel with the largest Gauss-Kronrod error estimate
    |K15 - G7|. Convergence is declared only once the summed estimate is at
    most ``max(abs_tol, rel_tol*|value|)``.

    ``f`` must accept an ndarray of abscissae and return values of the same
    shape. ``scale`` sets the x-scale where the mapping puts t = 1/2.

    Raises
    ------
    QuadratureError
        The evaluation budget ran out first; ``err.result`` holds the best
        estimate.
    """
    if not abs_tol > 0:
        raise InvalidParameterError("abs_tol must be positive")

    def g(t):
        one_minus = 1.0 - t
        x = scale * t / one_minus
        with np.errstate(over="ignore", under="ignore"):
            y = np.asarray(f(x), dtype=float) * (scale / (one_minus * one_minus))
        if not np.all(np.isfinite(y)):
            raise QuadratureError("integrand is not finite on (0, inf)")
        return y

    breaks = np.asarray(_DEFAULT_BREAKS if breakpoints is None else breakpoints, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    vals, errs = _panels(g, lo, hi)
    evaluations = 15 * len(lo)
    heap = [(-e, l, h, v) for e, l, h, v in zip(errs, lo, hi, vals)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err = float(np.sum(errs))

    while err > max(abs_tol, rel_tol * abs(total)):
        if evaluations + 30 > budget:
            best = QuadratureResult(total, err, evaluations)
            raise QuadratureError(
                f"no convergence within {budget} evaluations "
                f"(estimate {total:.6g}, error {err:.3g})", best)
        neg_e, l, h, v = heapq.heappop(heap)
        m = 0.5 * (l + h)
        if not l < m < h:
            best = QuadratureResult(total, err, evaluations)
            raise QuadratureError("panel width reached machine precision", best)
        cv, ce = _panels(g, np.array([l, m]), np.array([m, h]))
        evaluations += 30
        total += float(cv.sum()) - v
        err += float(ce.sum()) + neg_e
        heapq.heappush(heap, (-ce[0], l, m, cv[0]))
        heapq.heappush(heap, (-ce[1], m, h, cv[1]))
        if len(heap) % 64 == 0:
            # resum to stop drift from the incremental updates
            total = float(sum(item[3] for item in heap))
            err = float(sum(-item[0] for item in heap))

    return QuadratureResult(total, err, evaluations)
