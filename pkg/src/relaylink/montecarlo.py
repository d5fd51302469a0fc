"""Monte Carlo ground truth: Rayleigh channel draws, the three relay
combiners and the end-to-end SINR, evaluated both literally (explicit rank-1
precoder W) and through each scheme's reduced expression.

Trial ``t`` of a run is a pure function of ``(seed, t)``: trials are grouped
in blocks of :data:`BLOCK` and block ``b`` draws from its own generator
seeded with ``SeedSequence(seed, spawn_key=(b,))``. Outage counts are
integers, so the estimate does not depend on how blocks are spread over
worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DegenerateDrawError, FeasibilityError, InvalidParameterError
from .model import Scheme, SystemParams

BLOCK = 1 << 14
MIN_TRIALS = 1000
Z_RTOL = 1e-10
# a draw is degenerate when the smallest singular direction of H_I is below
# this fraction of its largest (ZF) or when ||h1|| vanishes
RANK_RTOL = 1e-12
MAX_REDRAWS = 8
# cap on batch * N * N entries per MMSE solve (about 64 MB of complex128)
SOLVE_ENTRIES = 1 << 22


@dataclass(frozen=True)
class ChannelDraw:
    """One realization: h1 (N,), h2 (N,) as the row of the second hop, h_i (N, M)."""

    h1: np.ndarray
    h2: np.ndarray
    h_i: np.ndarray

    @property
    def n(self) -> int:
        return self.h1.shape[0]

    @property
    def m(self) -> int:
        return self.h_i.shape[1]


@dataclass(frozen=True)
class SinrSample:
    scheme: Scheme
    sinr: float
    z_first_hop: float


@dataclass(frozen=True)
class OutageEstimate:
    """Fraction of trials in outage with its binomial standard error.

    ``unreliable`` flags fewer than 10 outage events, where the normal
    approximation behind ``std_error`` is poor. ``redraws`` counts degenerate
    channel draws that were replaced.
    """

    probability: float
    std_error: float
    trials: int
    seed: int
    scheme: Scheme
    count: int
    redraws: int = 0

    @property
    def unreliable(self) -> bool:
        return self.count < 10


def _complex_normal(rng, shape):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def draw_channel(stream: np.random.Generator, n: int, m: int) -> ChannelDraw:
    """Draw h1, h2 and H_I with i.i.d. CN(0, 1) entries."""
    if n < 1 or m < 0:
        raise InvalidParameterError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    h1 = _complex_normal(stream, (n,))
    h2 = _complex_normal(stream, (n,))
    h_i = _complex_normal(stream, (n, m))
    return ChannelDraw(h1, h2, h_i)


# ---------------------------------------------------------------------------
# combiners (single draw)
# ---------------------------------------------------------------------------

def combiner_mrc(d: ChannelDraw) -> np.ndarray:
    """w1 = h1^H / ||h1||."""
    norm = np.linalg.norm(d.h1)
    if norm == 0:
        raise DegenerateDrawError("h1 is the zero vector")
    return d.h1.conj() / norm


def _null_projector_basis(h_i):
    """Orthonormal basis Q of span(H_I) and the rank check for it."""
    q, r = np.linalg.qr(h_i)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    ok = diag.min(axis=-1) > RANK_RTOL * np.maximum(diag.max(axis=-1), 1e-300)
    return q, ok


def combiner_zf(d: ChannelDraw) -> np.ndarray:
    """Unit-norm w1 = h1^H P / sqrt(h1^H P h1) with P the projector onto the
    orthogonal complement of span(H_I)."""
    n, m = d.n, d.m
    if n <= m:
        raise FeasibilityError(f"ZF needs N > M (N={n}, M={m})")
    if m == 0:
        return combiner_mrc(d)
    q, ok = _null_projector_basis(d.h_i)
    if not ok:
        raise DegenerateDrawError("H_I is rank deficient")
    residual = d.h1 - q @ (q.conj().T @ d.h1)
    norm = np.linalg.norm(residual)
    if norm == 0:
        raise DegenerateDrawError("h1 lies in the span of H_I")
    return residual.conj() / norm


def _power_vector(p: SystemParams, m):
    return np.asarray(p.rho_i, dtype=float) if m else np.zeros(0)


def combiner_mmse(d: ChannelDraw, p: SystemParams) -> np.ndarray:
    """w1 = h1^H (h1 h1^H + H_I D' H_I^H + I/rho)^(-1), with rho the largest
    interference power and D' = diag(rho_i)/rho.

    With equal powers this is exactly h1^H (h1 h1^H + H_I H_I^H + I/rho_I)^(-1);
    with unequal powers it is the SINR-maximizing direction
    h1^H (H_I D H_I^H + I)^(-1) up to a positive scale.
    """
    n, m = d.n, d.m
    powers = _power_vector(p, m)
    ref = powers.max() if m else 1.0
    a = np.outer(d.h1, d.h1.conj()) + (d.h_i * (powers / ref)) @ d.h_i.conj().T + np.eye(n) / ref
    # w1 = (A^{-1} h1)^H since A is Hermitian
    return np.linalg.solve(a, d.h1).conj()


def combiner(scheme, d: ChannelDraw, p: SystemParams) -> np.ndarray:
    scheme = Scheme(scheme)
    if scheme is Scheme.MRC:
        return combiner_mrc(d)
    if scheme is Scheme.ZF:
        return combiner_zf(d)
    return combiner_mmse(d, p)


# ---------------------------------------------------------------------------
# SINR (single draw)
# ---------------------------------------------------------------------------

def _first_hop_z(w1, d, p):
    powers = _power_vector(p, d.m)
    signal = abs(w1 @ d.h1) ** 2 * p.rho1
    leak = float(np.sum(powers * np.abs(w1 @ d.h_i) ** 2)) if d.m else 0.0
    return signal / (leak + float(np.vdot(w1, w1).real))


def sinr_generic(d: ChannelDraw, w1: np.ndarray, p: SystemParams, scheme) -> SinrSample:
    """End-to-end SINR from the received-signal model with W = ω h2^H/||h2|| w1.

    ω² meets E||W y_r||² = ρ2 (noise power 1). The SINR is read off
    h2 W h1, h2 W h_Ii and h2 W term by term.
    """
    scheme = Scheme(scheme)
    powers = _power_vector(p, d.m)
    w1 = np.asarray(w1, dtype=complex)
    relay_power = (abs(w1 @ d.h1) ** 2 * p.rho1
                   + (float(np.sum(powers * np.abs(w1 @ d.h_i) ** 2)) if d.m else 0.0)
                   + float(np.vdot(w1, w1).real))
    omega = math.sqrt(p.rho2 / relay_power)
    w = omega * np.outer(d.h2.conj() / np.linalg.norm(d.h2), w1)
    g = d.h2 @ w  # effective 1 x N row seen through the relay
    signal = abs(g @ d.h1) ** 2 * p.rho1
    interference = float(np.sum(powers * np.abs(g @ d.h_i) ** 2)) if d.m else 0.0
    noise = float(np.vdot(g, g).real) + 1.0
    return SinrSample(scheme, signal / (interference + noise), _first_hop_z(w1, d, p))


def _z_mmse_direct(d, p):
    """ρ1 h1^H (H_I D H_I^H + I)^(-1) h1."""
    powers = _power_vector(p, d.m)
    r = (d.h_i * powers) @ d.h_i.conj().T + np.eye(d.n)
    return p.rho1 * float(np.vdot(d.h1, np.linalg.solve(r, d.h1)).real)


def _end_to_end(rho2, y2, z):
    return rho2 * y2 * z / (1.0 + rho2 * y2 + z)


def sinr_scheme(d: ChannelDraw, p: SystemParams, scheme) -> SinrSample:
    """End-to-end SINR from the scheme's reduced expression (no explicit W)."""
    scheme = Scheme(scheme)
    y1 = float(np.vdot(d.h1, d.h1).real)
    y2 = float(np.vdot(d.h2, d.h2).real)
    r1, r2 = p.rho1, p.rho2
    if scheme is Scheme.MRC:
        powers = _power_vector(p, d.m)
        leak = float(np.sum(powers * np.abs(d.h1.conj() @ d.h_i) ** 2)) / y1 if d.m else 0.0
        sinr = y2 * y1 * r1 / (y2 * leak + y2 + (y1 * r1 + leak + 1.0) / r2)
        return SinrSample(scheme, sinr, y1 * r1 / (leak + 1.0))
    if scheme is Scheme.ZF:
        if d.n <= d.m:
            raise FeasibilityError(f"ZF needs N > M (N={d.n}, M={d.m})")
        if d.m:
            q, ok = _null_projector_basis(d.h_i)
            if not ok:
                raise DegenerateDrawError("H_I is rank deficient")
            residual = d.h1 - q @ (q.conj().T @ d.h1)
            y3 = float(np.vdot(residual, residual).real)
        else:
            y3 = y1
        sinr = y2 * y3 * r1 * r2 / (y2 * r2 + y3 * r1 + 1.0)
        return SinrSample(scheme, sinr, y3 * r1)
    z = _z_mmse_direct(d, p)
    return SinrSample(scheme, _end_to_end(r2, y2, z), z)


def z_statistic(d: ChannelDraw, p: SystemParams) -> float:
    """First-hop MMSE SINR Z, via the combiner and via ρ1 h1^H R^(-1) h1.

    Raises
    ------
    ConsistencyError
        The two forms differ by more than 1e-10 relative.
    """
    via_combiner = _first_hop_z(combiner_mmse(d, p), d, p)
    direct = _z_mmse_direct(d, p)
    if abs(via_combiner - direct) > Z_RTOL * max(abs(direct), 1e-300):
        raise ConsistencyError(f"Z forms disagree: {via_combiner!r} vs {direct!r}")
    return direct


# ---------------------------------------------------------------------------
# batched evaluation
# ---------------------------------------------------------------------------

def _batch_draw(rng, size, n, m):
    return (_complex_normal(rng, (size, n)), _complex_normal(rng, (size, n)),
            _complex_normal(rng, (size, n, m)))


def _batch_sinr(scheme, h1, h2, h_i, p):
    """Vectorized sinr_scheme; returns (sinr, degenerate mask)."""
    n, m = h1.shape[1], h_i.shape[2]
    y1 = np.einsum("bi,bi->b", h1.conj(), h1).real
    y2 = np.einsum("bi,bi->b", h2.conj(), h2).real
    r1, r2 = p.rho1, p.rho2
    powers = _power_vector(p, m)
    bad = ~(y1 > 0)
    if scheme is Scheme.MRC:
        if m:
            proj = np.einsum("bi,bij->bj", h1.conj(), h_i)
            leak = (np.abs(proj) ** 2 @ powers) / np.where(bad, 1.0, y1)
        else:
            leak = np.zeros_like(y1)
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = y2 * y1 * r1 / (y2 * leak + y2 + (y1 * r1 + leak + 1.0) / r2)
        return sinr, bad
    if scheme is Scheme.ZF:
        if m:
            q, ok = _null_projector_basis(h_i)
            coef = np.einsum("bij,bi->bj", q.conj(), h1)
            residual = h1 - np.einsum("bij,bj->bi", q, coef)
            y3 = np.einsum("bi,bi->b", residual.conj(), residual).real
            bad = bad | ~ok
        else:
            y3 = y1
        return y2 * y3 * r1 * r2 / (y2 * r2 + y3 * r1 + 1.0), bad
    r = np.einsum("bij,j,bkj->bik", h_i, powers, h_i.conj()) + np.eye(n)
    x = np.linalg.solve(r, h1[..., None])[..., 0]
    z = r1 * np.einsum("bi,bi->b", h1.conj(), x).real
    return _end_to_end(r2, y2, z), bad


def _block_count(args):
    """Outage events and redraws among trials [start, start+size) of block b."""
    p, scheme, seed, block, size = args
    n, m = p.n_relay_antennas, p.n_interferers
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))
    h1, h2, h_i = _batch_draw(rng, BLOCK, n, m)
    h1, h2, h_i = h1[:size], h2[:size], h_i[:size]
    # chunking depends on N only, so counts do not depend on the worker layout
    step = max(1, SOLVE_ENTRIES // (n * n))
    parts = [_batch_sinr(scheme, h1[i:i + step], h2[i:i + step], h_i[i:i + step], p)
             for i in range(0, size, step)]
    sinr = np.concatenate([s for s, _ in parts])
    bad = np.concatenate([b for _, b in parts])
    redraws = 0
    for t in np.flatnonzero(bad):
        for attempt in range(1, MAX_REDRAWS + 1):
            redraws += 1
            sub = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence(seed, spawn_key=(block, attempt, int(t)))))
            g1, g2, gi = _batch_draw(sub, 1, n, m)
            value, still_bad = _batch_sinr(scheme, g1, g2, gi, p)
            if not still_bad[0]:
                sinr[t] = value[0]
                break
        else:
            raise DegenerateDrawError(f"trial {block * BLOCK + t} stayed degenerate after {MAX_REDRAWS} redraws")
    return int(np.count_nonzero(sinr < p.gamma_th)), redraws


def default_workers() -> int:
    env = os.environ.get("RELAYLINK_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InvalidParameterError(f"RELAYLINK_WORKERS must be an integer, got {env!r}") from None
        if value < 1:
            raise InvalidParameterError("RELAYLINK_WORKERS must be >= 1")
        return value
    return os.cpu_count() or 1


def estimate_outage(p: SystemParams, scheme, trials: int = 1_000_000, seed: int = 1,
                    workers: int | None = None) -> OutageEstimate:
    """Estimate Prob(γ < γ_th) from ``trials`` independent channel draws.

    The result is identical for any ``workers``; ``None`` means
    :func:`default_workers`.
    """
    scheme = Scheme(scheme)
    trials = int(trials)
    if trials < MIN_TRIALS:
        raise InvalidParameterError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if not 0 <= int(seed) < 2 ** 64:
        raise InvalidParameterError("seed must be a 64-bit unsigned integer")
    if scheme is Scheme.ZF and p.n_relay_antennas <= p.n_interferers:
        raise FeasibilityError(
            f"ZF needs N > M (N={p.n_relay_antennas}, M={p.n_interferers})")
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    blocks = [(p, scheme, int(seed), b, min(BLOCK, trials - b * BLOCK))
              for b in range(-(-trials // BLOCK))]
    if workers == 1 or len(blocks) == 1:
        results = [_block_count(args) for args in blocks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(blocks))) as pool:
            results = list(pool.map(_block_count, blocks))
    count = sum(c for c, _ in results)
    redraws = sum(r for _, r in results)
    prob = count / trials
    return OutageEstimate(prob, math.sqrt(prob * (1.0 - prob) / trials), trials, int(seed),
                          scheme, count, redraws)


def sample_z(p: SystemParams, size: int, seed: int = 1) -> np.ndarray:
    """``size`` draws of the MMSE first-hop SINR Z (vectorized z_statistic)."""
    n, m = p.n_relay_antennas, p.n_interferers
    out = []
    for block in range(-(-size // BLOCK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))
        h1, _, h_i = _batch_draw(rng, BLOCK, n, m)
        powers = _power_vector(p, m)
        step = max(1, SOLVE_ENTRIES // (n * n))
        for i in range(0, BLOCK, step):
            g1, gi = h1[i:i + step], h_i[i:i + step]
            r = np.einsum("bij,j,bkj->bik", gi, powers, gi.conj()) + np.eye(n)
            x = np.linalg.solve(r, g1[..., None])[..., 0]
            out.append(p.rho1 * np.einsum("bi,bi->b", g1.conj(), x).real)
    return np.concatenate(out)[:size]
