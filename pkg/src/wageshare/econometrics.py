"""CES fit of TFP-adjusted output per hour with cluster-robust inference.

The regression is

    ln(Y / (L A)) - (1 - lam) ln k = a0 + a1 * 0.5 lam (1 - lam) (ln k)^2 + e

where ``a1`` estimates ``(1 - sigma) / sigma``.  The US is fit on its own
(one cluster, so HC1 is used); the eleven other economies are pooled with
CR1 standard errors clustered by country.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .dataio import POOL_COUNTRIES, PanelObservation, atomic_write, panel_hash
from .errors import ConfigurationError, DomainError, SingularityError

_RCOND = 1e-12


class Group(str, Enum):
    US = "us"
    POOL = "pool"


@dataclass(frozen=True)
class RegressionSpec:
    group: Group
    countries: tuple
    cluster_by: str = "country"

    def __post_init__(self):
        if self.group is Group.US and self.countries != ("US",):
            raise ConfigurationError("the US regression contains exactly one country")
        if self.group is Group.POOL and not set(self.countries) <= set(POOL_COUNTRIES):
            raise ConfigurationError("the pooled regression covers the non-US economies only")

    @classmethod
    def for_group(cls, group) -> "RegressionSpec":
        group = Group(group)
        return cls(group, ("US",) if group is Group.US else POOL_COUNTRIES)


@dataclass(frozen=True)
class FitResult:
    alpha0: float
    alpha1: float
    se_alpha0: float
    se_alpha1: float
    sigma_hat: float
    se_sigma_hat: float
    r_squared: float
    n_obs: int
    covariance_estimator: str
    n_clusters: int = 1
    covariance: tuple = ()
    group: Optional[str] = None
    panel_hash: Optional[str] = None

    def to_json(self) -> str:
        d = asdict(self)
        d["covariance"] = [list(r) for r in self.covariance]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        d = json.loads(text)
        d["covariance"] = tuple(tuple(r) for r in d.get("covariance", ()))
        return cls(**d)


def write_fit(fit: FitResult, path) -> None:
    atomic_write(path, fit.to_json().encode("utf-8"))


def read_fit(path) -> FitResult:
    with open(path, encoding="utf-8") as fh:
        return FitResult.from_json(fh.read())


def build_design(panel: Sequence[PanelObservation]):
    """Dependent vector and ``[1, 0.5 lam (1 - lam) (ln k)^2]`` design matrix."""
    y = np.empty(len(panel))
    X = np.ones((len(panel), 2))
    for i, r in enumerate(panel):
        lam, k = r.labor_share, r.k_ratio
        scaled = r.output / (r.hours * r.tfp)
        if not (scaled > 0 and k > 0 and 0.0 < lam < 1.0):
            raise DomainError(
                f"row {r.country} {r.year}: need Y/(L A) > 0, k > 0 and 0 < lam < 1 "
                f"(got {scaled!r}, {k!r}, {lam!r})"
            )
        lnk = math.log(k)
        y[i] = math.log(scaled) - (1.0 - lam) * lnk
        X[i, 1] = 0.5 * lam * (1.0 - lam) * lnk**2
    return y, X


def _least_squares(y, X):
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.size < X.shape[1] or diag.min() <= _RCOND * max(diag.max(), 1.0):
        raise SingularityError("regressor matrix is rank deficient")
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > 1.0 / _RCOND:
        raise SingularityError(f"regressor matrix is ill conditioned (cond={cond:.3g})")
    beta = np.linalg.solve(r, q.T @ y)
    r_inv = np.linalg.solve(r, np.eye(r.shape[0]))
    bread = r_inv @ r_inv.T
    return beta, bread


def robust_covariance(X, resid, bread, cluster_ids=None):
    """Sandwich covariance: CR1 for two or more clusters, HC1 otherwise.

    Returns ``(cov, estimator_name, n_clusters)``.
    """
    n, p = X.shape
    if cluster_ids is None:
        labels = np.zeros(n, dtype=int)
    else:
        _, labels = np.unique(np.asarray(cluster_ids), return_inverse=True)
    g = int(labels.max()) + 1
    if g >= 2:
        # the cluster scores sum to zero, so the meat has rank at most g - 1
        if g <= p:
            warnings.warn(f"{g} clusters for {p} coefficients; CR1 covariance is singular",
                          RuntimeWarning, stacklevel=3)
        scores = np.zeros((g, p))
        np.add.at(scores, labels, X * resid[:, None])
        meat = scores.T @ scores
        factor = g / (g - 1) * (n - 1) / (n - p)
        name = "CR1"
    else:
        xe = X * resid[:, None]
        meat = xe.T @ xe
        factor = n / (n - p)
        name = "HC1"
    cov = factor * bread @ meat @ bread
    return 0.5 * (cov + cov.T), name, g


def _sigma_from_alpha1(alpha1, se_alpha1):
    if not alpha1 > -1.0:
        raise DomainError(f"alpha1 = {alpha1!r} <= -1 implies no finite elasticity of substitution")
    d = 1.0 + alpha1
    return 1.0 / d, se_alpha1 / d**2


def ols_fit(dependent, regressors, cluster_ids=None) -> FitResult:
    """Least-squares fit of the two-coefficient model with robust SEs."""
    y = np.asarray(dependent, dtype=float)
    X = np.asarray(regressors, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"expected an (n, 2) design matching y; got {X.shape} and {y.shape}")
    n = y.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if cluster_ids is not None and len(cluster_ids) != n:
        raise ValueError("cluster_ids must have one label per observation")
    beta, bread = _least_squares(y, X)
    resid = y - X @ beta
    cov, name, g = robust_covariance(X, resid, bread, cluster_ids)
    se = np.sqrt(np.diag(cov))
    ssr = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    try:
        sigma, se_sigma = _sigma_from_alpha1(float(beta[1]), float(se[1]))
    except DomainError:
        sigma, se_sigma = float("nan"), float("nan")
    return FitResult(
        alpha0=float(beta[0]),
        alpha1=float(beta[1]),
        se_alpha0=float(se[0]),
        se_alpha1=float(se[1]),
        sigma_hat=sigma,
        se_sigma_hat=se_sigma,
        r_squared=r2,
        n_obs=n,
        covariance_estimator=name,
        n_clusters=g,
        covariance=tuple(tuple(float(v) for v in row) for row in cov),
    )


def implied_sigma(fit: FitResult):
    """``sigma = 1 / (1 + a1)`` and its delta-method standard error."""
    return _sigma_from_alpha1(fit.alpha1, fit.se_alpha1)


def select_group(panel: Sequence[PanelObservation], spec: RegressionSpec) -> list:
    wanted = set(spec.countries)
    return [r for r in panel if r.country in wanted]


def fit_group(panel: Sequence[PanelObservation], group) -> FitResult:
    """Fit one group (US or pool) on the matching rows of ``panel``."""
    spec = RegressionSpec.for_group(group)
    rows = select_group(panel, spec)
    if not rows:
        raise ConfigurationError(f"panel has no rows for group {spec.group.value!r}")
    y, X = build_design(rows)
    fit = ols_fit(y, X, [r.country for r in rows])
    ordered = sorted(panel, key=lambda r: (r.country, r.year))
    return FitResult(**{**asdict(fit), "covariance": fit.covariance,
                        "group": spec.group.value, "panel_hash": panel_hash(ordered)})


def format_table(fits: dict) -> str:
    """Side-by-side text summary of ``{"US": fit, "Others": fit}``."""
    names = list(fits)
    lines = ["".ljust(10) + "".join(n.rjust(12) for n in names)]

    def add(label, attr, se_attr=None, fmt="{:.3f}"):
        lines.append(label.ljust(10) + "".join(fmt.format(getattr(fits[n], attr)).rjust(12) for n in names))
        if se_attr:
            lines.append("".ljust(10) + "".join(f"({getattr(fits[n], se_attr):.3f})".rjust(12) for n in names))

    add("alpha0", "alpha0", "se_alpha0")
    add("alpha1", "alpha1", "se_alpha1")
    add("sigma", "sigma_hat", "se_sigma_hat")
    add("R2", "r_squared")
    add("N", "n_obs", fmt="{:d}")
    add("cov", "covariance_estimator", fmt="{}")
    return "\n".join(lines)
