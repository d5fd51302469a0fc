"""Link parameters and the interference-power digest used by both engines.

All powers are linear and normalized to the noise power (N0 = 1); decibels
only appear at the command-line boundary through :func:`db_to_linear`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError


class Scheme(str, enum.Enum):
    """Relay combining scheme; transmission is always MRT towards the destination."""

    MRC = "mrc"
    ZF = "zf"
    MMSE = "mmse"


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def _positive_finite(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Scalar description of one dual-hop link.

    Attributes
    ----------
    n_relay_antennas : int
        N, antennas at the relay.
    n_interferers : int
        M, co-channel interferers seen by the relay.
    rho1, rho2 : float
        Source and relay transmit SNRs, P_s/N0 and P_r/N0.
    gamma_th : float
        Linear SINR outage threshold.
    rho_i : tuple of float
        Per-interferer received INR P_Ii/N0, length M.
    """

    n_relay_antennas: int
    n_interferers: int
    rho1: float
    rho2: float
    gamma_th: float = 1.0
    rho_i: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "rho_i", tuple(float(r) for r in self.rho_i))
        if int(self.n_relay_antennas) != self.n_relay_antennas or self.n_relay_antennas < 1:
            raise InvalidParameterError(f"N must be an integer >= 1, got {self.n_relay_antennas}")
        if int(self.n_interferers) != self.n_interferers or self.n_interferers < 0:
            raise InvalidParameterError(f"M must be an integer >= 0, got {self.n_interferers}")
        _positive_finite("rho1", self.rho1)
        _positive_finite("rho2", self.rho2)
        if not (math.isfinite(self.gamma_th) and self.gamma_th >= 0):
            raise InvalidParameterError(f"gamma_th must be finite and >= 0, got {self.gamma_th!r}")
        if len(self.rho_i) != self.n_interferers:
            raise InvalidParameterError(
                f"need {self.n_interferers} interference powers, got {len(self.rho_i)}")
        for r in self.rho_i:
            _positive_finite("interference power", r)

    @classmethod
    def from_mu(cls, n, m, rho1, mu=1.0, gamma_th=1.0, rho_i=1.0):
        """Build with rho2 = mu * rho1; a scalar ``rho_i`` is broadcast to all M."""
        _positive_finite("mu", mu)
        if np.isscalar(rho_i):
            rho_i = (float(rho_i),) * m
        return cls(n, m, rho1, mu * rho1, gamma_th, tuple(rho_i))

    @classmethod
    def from_db(cls, n, m, rho1_db, mu=1.0, gamma_th_db=0.0, rho_i_db=0.0, rho2_db=None):
        if np.isscalar(rho_i_db):
            rho_i_db = (rho_i_db,) * m
        rho1 = db_to_linear(rho1_db)
        rho2 = db_to_linear(rho2_db) if rho2_db is not None else mu * rho1
        return cls(n, m, rho1, rho2, db_to_linear(gamma_th_db),
                   tuple(db_to_linear(r) for r in rho_i_db))

    @property
    def mu(self) -> float:
        return self.rho2 / self.rho1

    @property
    def equal_power(self):
        """The common interference power if all M are equal, else None.

        With M = 0 there is no interference; 1.0 is returned so formulas that
        mention rho_I stay finite (they do not depend on it then).
        """
        if not self.rho_i:
            return 1.0
        first = self.rho_i[0]
        if all(r == first for r in self.rho_i):
            return first
        return None

    def replace(self, **changes) -> "SystemParams":
        data = dict(
            n_relay_antennas=self.n_relay_antennas, n_interferers=self.n_interferers,
            rho1=self.rho1, rho2=self.rho2, gamma_th=self.gamma_th, rho_i=self.rho_i,
        )
        data.update(changes)
        return SystemParams(**data)


@dataclass(frozen=True)
class InterferenceProfile:
    """Distinct interference powers, their multiplicities and the
    characteristic coefficients chi[i][j-1] of the weighted exponential sum."""

    distinct_powers: tuple
    multiplicities: tuple
    char_coeffs: tuple

    @property
    def n_interferers(self) -> int:
        return sum(self.multiplicities)

    @property
    def is_equal_power(self) -> bool:
        return len(self.distinct_powers) <= 1

    def terms(self):
        """Yield (power, j, chi) for every coefficient, j starting at 1."""
        for power, row in zip(self.distinct_powers, self.char_coeffs):
            for j, chi in enumerate(row, start=1):
                yield power, j, chi


def characteristic_coefficients(powers, multiplicities, one=1.0):
    """Partial-fraction weights of prod_k (1 + p_k s)^(-tau_k).

    Returns rows ``chi[i]`` of length tau_i with
    prod_k (1+p_k s)^(-tau_k) = sum_i sum_j chi[i][j-1] (1+p_i s)^(-j).

    Works for any numeric type supporting + - * / (floats, mpmath mpf):
    around the pole of group i, with w = 1 + p_i s, every other factor is
    (1 - r) + r w with r = p_k/p_i, and chi[i][j-1] is the Taylor coefficient
    of order tau_i - j of the product of those factors at w = 0.
    """
    rows = []
    for i, (p_i, tau_i) in enumerate(zip(powers, multiplicities)):
        series = [one] + [0 * one] * (tau_i - 1)
        for k, (p_k, tau_k) in enumerate(zip(powers, multiplicities)):
            if k == i:
                continue
            r = p_k / p_i
            alpha = one - r
            ratio = r / alpha
            # alpha^{-tau} (1 + ratio w)^{-tau}
            factor = [alpha ** (-tau_k)]
            for n in range(1, tau_i):
                factor.append(factor[-1] * (-ratio) * (tau_k + n - 1) / n)
            series = [sum(series[a] * factor[n - a] for a in range(n + 1)) for n in range(tau_i)]
        rows.append(tuple(series[tau_i - j] for j in range(1, tau_i + 1)))
    return tuple(rows)


def build_profile(rho_i: Sequence[float], group_tol: float = 1e-9) -> InterferenceProfile:
    """Digest per-interferer powers into an :class:`InterferenceProfile`.

    Powers within ``group_tol`` relative distance of each other are merged
    (arithmetic mean) so near-duplicates take the repeated-pole branch.
    """
    if not 0 < group_tol <= 1e-3:
        raise InvalidParameterError(f"group_tol must lie in (0, 1e-3], got {group_tol}")
    powers = sorted((float(r) for r in rho_i), reverse=True)
    for r in powers:
        _positive_finite("interference power", r)
    groups = []
    for r in powers:
        if groups and abs(groups[-1][0] - r) <= group_tol * groups[-1][0]:
            groups[-1].append(r)
        else:
            groups.append([r])
    distinct = tuple(math.fsum(g) / len(g) for g in groups)
    mult = tuple(len(g) for g in groups)
    return InterferenceProfile(distinct, mult, characteristic_coefficients(distinct, mult))


def profile_of(p: SystemParams) -> InterferenceProfile:
    return build_profile(p.rho_i)


def hyperexp_pdf(profile: InterferenceProfile, x):
    """Density of U = sum_i rho_i E_i (E_i i.i.d. Exp(1)) at ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for power, j, chi in profile.terms():
        total = total + chi * power ** (-j) / math.factorial(j - 1) * x ** (j - 1) * np.exp(-x / power)
    return float(total) if total.ndim == 0 else total
