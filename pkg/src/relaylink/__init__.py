"""Outage analysis of dual-hop AF relaying with a multi-antenna relay under
co-channel interference: closed-form/integral expressions and a Monte Carlo
simulator that checks them."""

from .analytic import AnalyticMethod, OutageValue, outage
from .errors import (ConsistencyError, DegenerateDrawError, FeasibilityError, InvalidParameterError,
                     NumericalError, QuadratureError, RelayLinkError, UnsupportedProfileError)
from .model import InterferenceProfile, Scheme, SystemParams, build_profile, db_to_linear
from .montecarlo import OutageEstimate, estimate_outage

__all__ = [
    "AnalyticMethod", "ConsistencyError", "DegenerateDrawError", "FeasibilityError",
    "InterferenceProfile", "InvalidParameterError", "NumericalError", "OutageEstimate",
    "OutageValue", "QuadratureError", "RelayLinkError", "Scheme", "SystemParams",
    "UnsupportedProfileError", "build_profile", "db_to_linear", "estimate_outage", "outage",
]
