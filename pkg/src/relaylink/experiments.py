"""Parameter sweeps, figure recipes, analytic-vs-simulation comparison and
CSV/JSON serialization of outage curves."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import analytic, montecarlo
from .errors import (FeasibilityError, InvalidParameterError, NumericalError, ShapeError,
                     UnsupportedProfileError)
from .model import Scheme, SystemParams, db_to_linear, linear_to_db

MONTE_CARLO = "mc"
METHODS = tuple(m.value for m in analytic.AnalyticMethod) + (MONTE_CARLO,)
ABSCISSAE = ("rho1_db", "n_antennas")
CSV_HEADER = ("scheme", "method", "n", "m", "rho1_db", "rho2_db", "rho_i_db", "gamma_th_db",
              "value", "std_err", "trials", "seed")
DEFAULT_TRIALS = 1_000_000

# (scheme, method) pairs with no formula behind them
_UNDEFINED = {(Scheme.MRC, "largen"), (Scheme.ZF, "lower")}


@dataclass(frozen=True)
class SweepConfig:
    """What to evaluate and where.

    Each ``variant`` is a labelled :class:`SystemParams` template; the
    abscissa overrides ρ1 (keeping μ = ρ2/ρ1) or N. One curve is produced per
    (variant, scheme, method) that has a formula for the variant.
    """

    schemes: tuple
    methods: tuple
    abscissa: str
    values: tuple
    variants: tuple
    trials: int = DEFAULT_TRIALS
    seed: int = 1
    tol: float = analytic.DEFAULT_TOL
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(Scheme(s) for s in self.schemes))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "variants", tuple((str(l), p) for l, p in self.variants))
        for m in self.methods:
            if m not in METHODS:
                raise InvalidParameterError(f"unknown method {m!r}; expected one of {METHODS}")
        if self.abscissa not in ABSCISSAE:
            raise InvalidParameterError(f"abscissa must be one of {ABSCISSAE}")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidParameterError("abscissa values must be strictly increasing")
        if self.abscissa == "n_antennas" and any(int(v) != v or v < 1 for v in self.values):
            raise InvalidParameterError("antenna counts must be positive integers")
        if self.trials < montecarlo.MIN_TRIALS and MONTE_CARLO in self.methods:
            raise InvalidParameterError(f"need at least {montecarlo.MIN_TRIALS} trials")
        if Scheme.ZF in self.schemes:
            for label, p in self.variants:
                for x in self.values:
                    q = point_params(self.abscissa, p, x)
                    if q.n_relay_antennas <= q.n_interferers:
                        raise FeasibilityError(
                            f"ZF needs N > M at every point (variant {label!r}, N={q.n_relay_antennas}, "
                            f"M={q.n_interferers})")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "schemes": [s.value for s in self.schemes],
            "methods": list(self.methods),
            "abscissa": self.abscissa,
            "values": list(self.values),
            "variants": [[label, params_to_dict(p)] for label, p in self.variants],
            "trials": self.trials,
            "seed": self.seed,
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        return cls(
            schemes=tuple(data["schemes"]), methods=tuple(data["methods"]),
            abscissa=data["abscissa"], values=tuple(data["values"]),
            variants=tuple((label, params_from_dict(p)) for label, p in data["variants"]),
            trials=data["trials"], seed=data["seed"], tol=data["tol"], name=data["name"],
        )


@dataclass(frozen=True)
class CurvePoint:
    """One evaluated abscissa; ``value`` is None for a failed point and
    ``error`` says why."""

    x: float
    value: float | None
    std_error: float | None = None
    params: SystemParams | None = None
    error: str | None = None


@dataclass(frozen=True)
class OutageCurve:
    label: str
    scheme: Scheme
    method: str
    variant: str
    points: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def xs(self) -> np.ndarray:
        return np.array([pt.x for pt in self.points], dtype=float)

    @property
    def ys(self) -> np.ndarray:
        return np.array([np.nan if pt.value is None else pt.value for pt in self.points])

    @property
    def failures(self) -> list:
        return [pt for pt in self.points if pt.value is None]


def params_to_dict(p: SystemParams) -> dict:
    return {"n": p.n_relay_antennas, "m": p.n_interferers, "rho1": p.rho1, "rho2": p.rho2,
            "gamma_th": p.gamma_th, "rho_i": list(p.rho_i)}


def params_from_dict(d: dict) -> SystemParams:
    return SystemParams(d["n"], d["m"], d["rho1"], d["rho2"], d["gamma_th"], tuple(d["rho_i"]))


def point_params(abscissa: str, template: SystemParams, x) -> SystemParams:
    if abscissa == "rho1_db":
        rho1 = db_to_linear(x)
        return template.replace(rho1=rho1, rho2=template.mu * rho1)
    return template.replace(n_relay_antennas=int(x))


def _applicable(scheme, method, params: SystemParams) -> bool:
    if (scheme, method) in _UNDEFINED:
        return False
    equal = params.equal_power is not None
    if scheme is Scheme.MMSE and method != MONTE_CARLO and not equal:
        return False
    return True


def evaluate_point(scheme, method, p: SystemParams, trials=DEFAULT_TRIALS, seed=1,
                   tol=analytic.DEFAULT_TOL, workers=None):
    """(value, std_error) of one (scheme, method) at ``p``; std_error is None
    for analytic methods."""
    if method == MONTE_CARLO:
        est = montecarlo.estimate_outage(p, scheme, trials, seed, workers)
        return est.probability, est.std_error
    return analytic.outage(scheme, method, p, tol=tol).probability, None


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list:
    """Evaluate every applicable (variant, scheme, method) curve of ``cfg``.

    Numerical failures at single points do not abort the sweep: the point is
    kept with ``value=None`` and the error text. MC points reuse the same
    seed everywhere (common random numbers across schemes and abscissae).
    """
    provenance = cfg.to_dict()
    curves = []
    for label, template in cfg.variants:
        for scheme in cfg.schemes:
            for method in cfg.methods:
                if not _applicable(scheme, method, template):
                    continue
                points = []
                for x in cfg.values:
                    p = point_params(cfg.abscissa, template, x)
                    try:
                        value, se = evaluate_point(scheme, method, p, cfg.trials, cfg.seed, cfg.tol, workers)
                        points.append(CurvePoint(float(x), value, se, p))
                    except (NumericalError, UnsupportedProfileError) as exc:
                        points.append(CurvePoint(float(x), None, None, p, f"{type(exc).__name__}: {exc}"))
                name = f"{scheme.value}-{method}" + (f" [{label}]" if label else "")
                curves.append(OutageCurve(name, scheme, method, label, tuple(points), provenance))
    return curves


# ---------------------------------------------------------------------------
# figure recipes
# ---------------------------------------------------------------------------

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")
FIG5_SPLITS = (("equal", (1 / 3, 1 / 3, 1 / 3)), ("2/3-1/6-1/6", (2 / 3, 1 / 6, 1 / 6)),
               ("0.8-0.1-0.1", (0.8, 0.1, 0.1)))


def _snr_grid(stop, step=2.5):
    return tuple(float(x) for x in np.arange(0.0, stop + step / 2, step))


def _pairs(pairs, rho_i=1.0):
    return tuple((f"N={n},M={m}", SystemParams.from_mu(n, m, 1.0, 1.0, 1.0, rho_i)) for n, m in pairs)


def figure_recipe(fig_id: str, trials: int = DEFAULT_TRIALS, seed: int = 1) -> SweepConfig:
    """Parameter grid behind each outage figure.

    All use γ_th = 0 dB, μ = 1 and ρ_I = 0 dB unless the figure varies it.
    fig5 keeps the total interference power 3ρ_I fixed (ρ_I = 0 and 10 dB)
    and compares the equal split with (2/3, 1/6, 1/6) and (0.8, 0.1, 0.1).
    """
    common = dict(abscissa="rho1_db", trials=trials, seed=seed, name=fig_id)
    if fig_id == "fig2":
        return SweepConfig((Scheme.MRC,), ("exact", "lower", "highsnr", MONTE_CARLO),
                           values=_snr_grid(30), variants=_pairs([(3, 1), (3, 2), (4, 2)]), **common)
    if fig_id == "fig3":
        return SweepConfig((Scheme.ZF,), ("exact", "highsnr", MONTE_CARLO),
                           values=_snr_grid(30), variants=_pairs([(3, 1), (3, 2), (4, 3)]), **common)
    if fig_id == "fig4":
        return SweepConfig((Scheme.MMSE,), ("exact", "lower", "highsnr", MONTE_CARLO),
                           values=_snr_grid(30), variants=_pairs([(2, 3), (3, 2), (4, 2)]), **common)
    if fig_id == "fig5":
        variants = []
        for total_db in (0.0, 10.0):
            total = 3 * db_to_linear(total_db)
            for name, split in FIG5_SPLITS:
                powers = tuple(total * s for s in split)
                variants.append((f"rho_I={total_db:g}dB,{name}",
                                 SystemParams.from_mu(2, 3, 1.0, 1.0, 1.0, powers)))
        return SweepConfig((Scheme.MMSE,), ("exact", MONTE_CARLO), values=_snr_grid(30),
                           variants=tuple(variants), **common)
    if fig_id == "fig6":
        variants = tuple((f"rho_I={db:g}dB", SystemParams.from_mu(3, 2, 1.0, 1.0, 1.0, db_to_linear(db)))
                         for db in (0.0, 30.0))
        return SweepConfig((Scheme.MRC, Scheme.ZF, Scheme.MMSE), (MONTE_CARLO,),
                           values=_snr_grid(40), variants=variants, **common)
    if fig_id == "fig7":
        return SweepConfig((Scheme.MRC, Scheme.ZF, Scheme.MMSE), ("exact", MONTE_CARLO),
                           abscissa="n_antennas", values=tuple(range(3, 11)),
                           variants=(("M=2", SystemParams.from_mu(3, 2, 10.0, 1.0, 1.0, 1.0)),),
                           trials=trials, seed=seed, name=fig_id)
    raise InvalidParameterError(f"unknown figure {fig_id!r}; expected one of {FIGURES}")


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Summary of a set of curves on a shared abscissa.

    ``gaps`` maps "variant/scheme/method" to per-point |analytic - MC| / SE
    (inf when SE = 0 but the values differ). ``slopes`` holds least-squares
    slopes of log10(value) against the abscissa in decades (dB/10) over the
    ``slope_window``. ``crossovers`` lists interpolated MRC-ZF sign changes.
    """

    gaps: dict
    max_gap_ratio: float
    slopes: dict
    crossovers: dict

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        return clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"max |analytic - MC| / SE: {self.max_gap_ratio:.3g}"]
        for key, ratios in sorted(self.gaps.items()):
            worst = max((r for r in ratios if r is not None), default=float("nan"))
            lines.append(f"  {key}: worst gap/SE {worst:.3g}")
        for key, slope in sorted(self.slopes.items()):
            lines.append(f"slope {key}: {slope:.3f}")
        for key, xs in sorted(self.crossovers.items()):
            where = ", ".join(f"{x:.2f}" for x in xs) or "none"
            lines.append(f"crossovers {key}: {where}")
        return "\n".join(lines)


def fit_slope(xs, ys, abscissa="rho1_db") -> float:
    """Least-squares slope of log10(y) against log10 of the linear abscissa."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(ys) & (ys > 0)
    if keep.sum() < 2:
        return float("nan")
    lx = xs[keep] / 10.0 if abscissa == "rho1_db" else np.log10(xs[keep])
    return float(np.polyfit(lx, np.log10(ys[keep]), 1)[0])


def find_crossovers(xs, a, b) -> list:
    """Abscissae where a - b changes sign, linearly interpolated in the
    log-value gap between adjacent grid points."""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.log10(np.asarray(a, dtype=float)) - np.log10(np.asarray(b, dtype=float))
    out = []
    for i in range(len(xs) - 1):
        g0, g1 = gap[i], gap[i + 1]
        if not (np.isfinite(g0) and np.isfinite(g1)):
            continue
        if g0 == 0 and i > 0:
            continue
        if g0 == 0:
            out.append(float(xs[i]))
        elif g0 * g1 < 0:
            out.append(float(xs[i] + (xs[i + 1] - xs[i]) * g0 / (g0 - g1)))
        elif g1 == 0:
            out.append(float(xs[i + 1]))
    return out


def compare_report(curves: Sequence[OutageCurve], slope_window=None) -> ComparisonReport:
    """Analytic-vs-MC gaps, high-SNR slopes and MRC/ZF crossovers.

    ``slope_window`` = (lo, hi) restricts slope fits to that abscissa range;
    by default the last five points of each curve are used.

    Raises
    ------
    ShapeError
        The curves do not share one abscissa.
    """
    curves = list(curves)
    if not curves:
        return ComparisonReport({}, 0.0, {}, {})
    ref = curves[0].xs
    for c in curves[1:]:
        if c.xs.shape != ref.shape or not np.array_equal(c.xs, ref):
            raise ShapeError(f"curve {c.label!r} does not share the abscissa of {curves[0].label!r}")
    abscissa = curves[0].provenance.get("abscissa", "rho1_db")
    by_key = {(c.variant, c.scheme, c.method): c for c in curves}

    gaps, worst = {}, 0.0
    for (variant, scheme, method), c in by_key.items():
        if method == MONTE_CARLO:
            continue
        sim = by_key.get((variant, scheme, MONTE_CARLO))
        if sim is None or method != "exact":
            continue
        ratios = []
        for pa, pm in zip(c.points, sim.points):
            if pa.value is None or pm.value is None:
                ratios.append(None)
                continue
            diff = abs(pa.value - pm.value)
            r = diff / pm.std_error if pm.std_error else (0.0 if diff == 0 else float("inf"))
            ratios.append(r)
            worst = max(worst, r)
        gaps[f"{variant}/{scheme.value}/{method}"] = ratios

    slopes = {}
    for c in curves:
        if slope_window is None:
            xs, ys = c.xs[-5:], c.ys[-5:]
        else:
            keep = (c.xs >= slope_window[0]) & (c.xs <= slope_window[1])
            xs, ys = c.xs[keep], c.ys[keep]
        slopes[c.label] = fit_slope(xs, ys, abscissa)

    crossovers = {}
    variants = sorted({c.variant for c in curves})
    for variant in variants:
        for method in ("exact", MONTE_CARLO):
            mrc = by_key.get((variant, Scheme.MRC, method))
            zf = by_key.get((variant, Scheme.ZF, method))
            if mrc is not None and zf is not None:
                crossovers[f"{variant}/{method}"] = find_crossovers(ref, mrc.ys, zf.ys)
    return ComparisonReport(gaps, worst, slopes, crossovers)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _db(x: float) -> str:
    return format(linear_to_db(x), ".10g")


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def csv_row(scheme, method, p: SystemParams, value, std_err=None, trials=None, seed=None,
            rho1_db=None) -> list:
    """One row in the CSV schema; analytic rows leave the MC columns empty."""
    mc = method == MONTE_CARLO
    return [
        Scheme(scheme).value, method, str(p.n_relay_antennas), str(p.n_interferers),
        format(rho1_db, ".10g") if rho1_db is not None else _db(p.rho1), _db(p.rho2),
        ";".join(_db(r) for r in p.rho_i), _db(p.gamma_th) if p.gamma_th > 0 else "-inf",
        _num(value), _num(std_err) if mc else "", str(trials) if mc else "", str(seed) if mc else "",
    ]


def curves_to_csv(curves: Iterable[OutageCurve]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for c in curves:
        trials = c.provenance.get("trials")
        seed = c.provenance.get("seed")
        for pt in c.points:
            rho1_db = pt.x if c.provenance.get("abscissa", "rho1_db") == "rho1_db" else None
            writer.writerow(csv_row(c.scheme, c.method, pt.params, pt.value, pt.std_error,
                                    trials, seed, rho1_db))
    return buf.getvalue()


def curve_to_dict(c: OutageCurve) -> dict:
    return {
        "label": c.label, "scheme": c.scheme.value, "method": c.method, "variant": c.variant,
        "points": [{"x": pt.x, "value": pt.value, "std_error": pt.std_error,
                    "params": None if pt.params is None else params_to_dict(pt.params),
                    "error": pt.error} for pt in c.points],
        "provenance": c.provenance,
    }


def curve_from_dict(d: dict) -> OutageCurve:
    points = tuple(CurvePoint(pt["x"], pt["value"], pt["std_error"],
                              None if pt["params"] is None else params_from_dict(pt["params"]),
                              pt["error"]) for pt in d["points"])
    return OutageCurve(d["label"], Scheme(d["scheme"]), d["method"], d["variant"], points,
                       d["provenance"])


def curves_to_json(curves: Iterable[OutageCurve]) -> str:
    return json.dumps([curve_to_dict(c) for c in curves], indent=2, sort_keys=True) + "\n"


def curves_from_json(text: str) -> list:
    return [curve_from_dict(d) for d in json.loads(text)]


def save_curves(curves, path, fmt="json"):
    text = curves_to_json(curves) if fmt == "json" else curves_to_csv(curves)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_curves(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return curves_from_json(fh.read())
