"""Wage elasticity with respect to the labor share and wage-growth accounting.

From the fitted model the log wage is

    ln w = ln lam + ln A + a0 + (1 - lam) ln k + 0.5 a1 lam (1 - lam) (ln k)^2

so that

    d ln w / d ln lam = 1 - lam ln k + 0.5 a1 lam (1 - 2 lam) (ln k)^2
    d ln w / d ln k   = (1 - lam) (1 + a1 lam ln k)

The first term of the elasticity (``1``) is the direct effect of a higher
labor share; the remainder is the indirect effect through output.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataio import ALL_COUNTRIES, POOL_COUNTRIES, PanelObservation, atomic_write, group_by_country
from .econometrics import FitResult
from .errors import ConfigurationError, DomainError, GapError

Z95 = 1.96


@dataclass(frozen=True)
class ElasticityRecord:
    """Country means of ``d ln w / d ln lam`` and its components.

    ``ci_low``/``ci_high`` bound ``mean_net`` after re-evaluating the series
    at ``a1 +/- 1.96 SE(a1)``; ``se_mean`` is the delta-method standard
    error of ``mean_net``.
    """

    country: str
    mean_direct: float
    mean_indirect: float
    mean_net: float
    ci_low: float
    ci_high: float
    se_mean: float = float("nan")
    n_years: int = 0


@dataclass(frozen=True)
class GrowthDecomposition:
    country: str
    tfp_component: float
    labor_share_component: float
    capital_deepening_component: float
    observed_growth: float
    residual: float
    labor_share_pct_of_observed: float
    mean_labor_share_growth: float = float("nan")
    n_years: int = 0


def _net(lam, lnk, alpha1):
    return 1.0 - lam * lnk + 0.5 * alpha1 * lam * (1.0 - 2.0 * lam) * lnk**2


def wage_share_elasticity(lam: float, k: float, alpha1: float):
    """``(direct, indirect, net)`` components of ``d ln w / d ln lam``."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"labor share must lie in (0, 1), got {lam}")
    if not k > 0:
        raise DomainError(f"capital-labor ratio must be positive, got {k}")
    net = float(_net(lam, math.log(k), alpha1))
    return 1.0, net - 1.0, net


def capital_elasticity(lam: float, k: float, alpha1: float) -> float:
    """``d ln w / d ln k`` of the fitted model."""
    return (1.0 - lam) * (1.0 + alpha1 * lam * math.log(k))


def fits_by_country(us_fit: FitResult, pool_fit: FitResult, countries=ALL_COUNTRIES) -> dict:
    """The US uses its own fit, every other economy the pooled one."""
    return {c: (us_fit if c == "US" else pool_fit) for c in countries}


def _series(rows):
    lam = np.array([r.labor_share for r in rows])
    lnk = np.log([r.k_ratio for r in rows])
    return lam, lnk


def elasticity_table(panel: Sequence[PanelObservation], fits: Mapping[str, FitResult]) -> list:
    """One :class:`ElasticityRecord` per country, in panel country order."""
    out = []
    for country, rows in group_by_country(panel).items():
        if country not in fits:
            raise ConfigurationError(f"no fit assigned to country {country!r}")
        fit = fits[country]
        lam, lnk = _series(rows)
        net = _net(lam, lnk, fit.alpha1)
        mean_net = float(net.mean())
        bounds = [float(_net(lam, lnk, fit.alpha1 + s * Z95 * fit.se_alpha1).mean()) for s in (-1.0, 1.0)]
        slope = float((0.5 * lam * (1.0 - 2.0 * lam) * lnk**2).mean())
        out.append(
            ElasticityRecord(
                country=country,
                mean_direct=1.0,
                mean_indirect=mean_net - 1.0,
                mean_net=mean_net,
                ci_low=min(bounds + [mean_net]),
                ci_high=max(bounds + [mean_net]),
                se_mean=abs(slope) * fit.se_alpha1,
                n_years=len(rows),
            )
        )
    return out


def log_time_derivative(series: Mapping[int, float]) -> dict:
    """Centred difference of ``ln x``; one-sided at the first and last year."""
    years = sorted(series)
    if len(years) < 3:
        raise ValueError(f"need at least 3 consecutive years, got {len(years)}")
    missing = sorted(set(range(years[0], years[-1] + 1)) - set(years))
    if missing:
        raise GapError(f"series has gaps at {missing}", missing)
    values = np.array([series[y] for y in years], dtype=float)
    if not np.all(values > 0):
        raise DomainError("log derivative needs strictly positive values")
    lx = np.log(values)
    d = np.empty_like(lx)
    d[1:-1] = 0.5 * (lx[2:] - lx[:-2])
    d[0] = lx[1] - lx[0]
    d[-1] = lx[-1] - lx[-2]
    return dict(zip(years, d.tolist()))


def _components(rows, alpha1):
    def dlog(attr):
        return np.array(list(log_time_derivative({r.year: getattr(r, attr) for r in rows}).values()))

    lam, lnk = _series(rows)
    d_tfp = dlog("tfp")
    d_lam = dlog("labor_share")
    d_k = dlog("k_ratio")
    d_w = dlog("wage")
    return {
        "tfp": d_tfp,
        "labor_share": d_lam * _net(lam, lnk, alpha1),
        "capital": d_k * (1.0 - lam) * (1.0 + alpha1 * lam * lnk),
        "observed": d_w,
        "d_lambda": d_lam,
    }


def _summarize(label, comps):
    tfp = float(comps["tfp"].mean())
    ls = float(comps["labor_share"].mean())
    cap = float(comps["capital"].mean())
    obs = float(comps["observed"].mean())
    return GrowthDecomposition(
        country=label,
        tfp_component=tfp,
        labor_share_component=ls,
        capital_deepening_component=cap,
        observed_growth=obs,
        residual=(tfp + ls + cap) - obs,
        labor_share_pct_of_observed=ls / obs * 100.0 if obs != 0 else float("nan"),
        mean_labor_share_growth=float(comps["d_lambda"].mean()),
        n_years=len(comps["tfp"]),
    )


def decompose_growth(rows: Sequence[PanelObservation], alpha1: float) -> GrowthDecomposition:
    """Time-averaged TFP, labor-share and capital-deepening wage-growth terms."""
    rows = sorted(rows, key=lambda r: r.year)
    countries = {r.country for r in rows}
    if len(countries) != 1:
        raise ConfigurationError(f"decompose_growth takes one country, got {sorted(countries)}")
    return _summarize(rows[0].country, _components(rows, alpha1))


def decompose_pool(panel: Sequence[PanelObservation], alpha1: float, label: str = "Others",
                   countries=POOL_COUNTRIES) -> GrowthDecomposition:
    """Decomposition averaged over every country-year of the pooled economies."""
    by_country = group_by_country(r for r in panel if r.country in set(countries))
    if not by_country:
        raise ConfigurationError("no pooled countries in panel")
    parts = [_components(rows, alpha1) for rows in by_country.values()]
    comps = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    return _summarize(label, comps)


# -- figure data -------------------------------------------------------------------

FIG2_COLUMNS = ("country", "direct", "indirect", "net", "ci_low", "ci_high")
FIG3_COLUMNS = ("country", "tfp", "labor_share", "capital", "observed", "residual")
_FIG3_ORDER = ("US", "Others") + POOL_COUNTRIES


def _g9(x):
    return f"{x:.9g}"


def _csv_bytes(header, rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def figure_data_bytes(records: Sequence) -> bytes:
    if not records:
        raise ValueError("no records to emit")
    first = records[0]
    if isinstance(first, ElasticityRecord):
        ordered = sorted(records, key=lambda r: (r.mean_net, r.country))
        return _csv_bytes(FIG2_COLUMNS, [
            (r.country, _g9(r.mean_direct), _g9(r.mean_indirect), _g9(r.mean_net),
             _g9(r.ci_low), _g9(r.ci_high)) for r in ordered
        ])
    if isinstance(first, GrowthDecomposition):
        rank = {c: i for i, c in enumerate(_FIG3_ORDER)}
        ordered = sorted(records, key=lambda r: (rank.get(r.country, len(rank)), r.country))
        return _csv_bytes(FIG3_COLUMNS, [
            (r.country, _g9(r.tfp_component), _g9(r.labor_share_component),
             _g9(r.capital_deepening_component), _g9(r.observed_growth), _g9(r.residual))
            for r in ordered
        ])
    raise TypeError(f"cannot emit figure data for {type(first).__name__}")


def emit_figure_data(records: Sequence, file) -> None:
    """Write elasticity or growth-decomposition records as CSV."""
    atomic_write(file, figure_data_bytes(records))


def emit_labor_share_series(panel: Sequence[PanelObservation], file, country: str = "US") -> None:
    """``year,labor_share`` plot data for one country."""
    rows = [(r.year, _g9(r.labor_share)) for r in sorted(panel, key=lambda r: r.year) if r.country == country]
    if not rows:
        raise ConfigurationError(f"no rows for {country!r}")
    atomic_write(file, _csv_bytes(("year", "labor_share"), rows))
