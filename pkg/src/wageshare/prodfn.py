"""Constant-returns production families and the wage-maximizing labor share.

A family is written in intensive form ``y = Y(k, 1, lam)``: output per labor
hour as a function of the capital-labor ratio ``k`` and the labor share
``lam``.  Under constant returns the wage is ``w = lam * y``, so the
wage-maximizing labor share solves

    1 / lam + d ln Y / d lam = 0

and depends on ``k`` alone.  :func:`solve_lambda_star` locates every interior
critical point by a grid scan with bisection refinement, checks the
second-order condition at each one and compares against the boundary
``lam = 1``.

All callables handed to :class:`ProductionFamily` must accept a NumPy array
for ``lam`` (scalar results are broadcast).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "ProductionFamily",
    "CesParams",
    "LambdaStarResult",
    "InvarianceRow",
    "ces_output",
    "ces_intensive",
    "lambda_from_alpha",
    "taylor_log_output",
    "wage",
    "dlogw_dlambda",
    "solve_lambda_star",
    "solve_lambda_star_kl",
    "ces_family",
    "ces_kl_family",
    "cobb_douglas_family",
    "exponential_family",
    "constant_family",
    "scale_invariance_sweep",
]

SCAN_EPS = 1e-6
SCAN_POINTS = 1000
FOC_TOLERANCE = 1e-10
_MAX_BISECT = 200

Kernel = Callable[[float, np.ndarray], np.ndarray]


def _broadcast(fn, k, lam):
    lam = np.asarray(lam, dtype=float)
    out = np.asarray(fn(k, lam), dtype=float)
    return np.broadcast_to(out, lam.shape) if out.shape != lam.shape else out


@dataclass(frozen=True)
class ProductionFamily:
    """An evaluable family ``Y(k, 1, lam)`` with log-derivatives in ``lam``.

    When ``d2logY_dlambda2`` is omitted, :meth:`second_derivative` falls back
    to a central difference of ``dlogY_dlambda`` with step
    ``1e-5 * max(lam, 1e-3)``.
    """

    evaluator: Kernel
    dlogY_dlambda: Kernel
    d2logY_dlambda2: Optional[Kernel] = None
    name: str = "custom"

    def output(self, k, lam):
        return _broadcast(self.evaluator, k, lam)

    def first_derivative(self, k, lam):
        return _broadcast(self.dlogY_dlambda, k, lam)

    def second_derivative(self, k, lam):
        if self.d2logY_dlambda2 is not None:
            return _broadcast(self.d2logY_dlambda2, k, lam)
        lam = np.asarray(lam, dtype=float)
        h = 1e-5 * np.maximum(lam, 1e-3)
        return (self.first_derivative(k, lam + h) - self.first_derivative(k, lam - h)) / (2 * h)


@dataclass(frozen=True)
class CesParams:
    """Parameters of ``Y = A (alpha K^rho + (1 - alpha) L^rho)^(1/rho)``."""

    A: float = 1.0
    alpha: float = 0.5
    sigma: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError(f"TFP level A must be positive, got {self.A}")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"share parameter alpha must lie in [0, 1], got {self.alpha}")
        if not self.sigma > 0:
            raise DomainError(f"elasticity of substitution must be positive, got {self.sigma}")

    @property
    def rho(self) -> float:
        return (self.sigma - 1.0) / self.sigma

    @classmethod
    def from_rho(cls, rho: float, A: float = 1.0, alpha: float = 0.5) -> "CesParams":
        if not rho < 1.0:
            raise DomainError(f"rho must be below 1, got {rho}")
        return cls(A=A, alpha=alpha, sigma=1.0 / (1.0 - rho))


@dataclass(frozen=True)
class LambdaStarResult:
    lambda_star: float
    wage_star: float
    is_interior: bool
    soc_satisfied: bool
    iterations: int
    critical_points: tuple = ()
    foc_residual: float = float("nan")


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value}")


def ces_output(K: float, L: float, p: CesParams) -> float:
    """Total output of the two-factor CES technology.

    ``sigma == 1`` uses the Cobb-Douglas limit ``A K^alpha L^(1-alpha)``.
    """
    _check_positive("K", K)
    _check_positive("L", L)
    if p.sigma == 1.0:
        return p.A * K**p.alpha * L ** (1.0 - p.alpha)
    rho = p.rho
    return p.A * (p.alpha * K**rho + (1.0 - p.alpha) * L**rho) ** (1.0 / rho)


def _exponent(sigma):
    return (1.0 - sigma) / sigma


def _ces_y(k, lam, sigma, A):
    # valid on the closed interval lam in [0, 1]
    lam = np.asarray(lam, dtype=float)
    if sigma == 1.0:
        return A * k ** (1.0 - lam)
    x = _exponent(sigma)
    return A * (lam + (1.0 - lam) * k**x) ** (1.0 / x)


def ces_intensive(k: float, lam: float, sigma: float, A: float = 1.0) -> float:
    """Output per hour ``A (lam + (1 - lam) k^x)^(1/x)`` with ``x = (1 - sigma)/sigma``."""
    _check_positive("k", k)
    _check_positive("sigma", sigma)
    _check_positive("A", A)
    if not 0.0 < lam < 1.0:
        raise DomainError(f"labor share must lie in (0, 1), got {lam}")
    return float(_ces_y(k, lam, sigma, A))


def lambda_from_alpha(alpha: float, k: float, rho: float) -> float:
    """Labor share of output implied by the CES share parameter."""
    _check_positive("k", k)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        return 0.0
    return (1.0 - alpha) / (alpha * k**rho + (1.0 - alpha))


def taylor_log_output(k: float, lam: float, sigma: float, A: float = 1.0) -> float:
    """Two-term expansion of ``ln y`` around ``sigma = 1``.

    ``ln A + (1 - lam) ln k + 0.5 (1 - lam) lam (ln k)^2 x``; a warning is
    emitted when ``|x| > 1`` where the truncation is no longer reliable.
    """
    _check_positive("k", k)
    _check_positive("sigma", sigma)
    _check_positive("A", A)
    if not 0.0 < lam < 1.0:
        raise DomainError(f"labor share must lie in (0, 1), got {lam}")
    x = _exponent(sigma)
    if abs(x) > 1.0:
        warnings.warn(
            f"|(1 - sigma)/sigma| = {abs(x):.3g} > 1; second-order expansion is inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    lnk = math.log(k)
    return math.log(A) + (1.0 - lam) * lnk + 0.5 * (1.0 - lam) * lam * lnk**2 * x


def wage(lam: float, k: float, f: ProductionFamily) -> float:
    """``lam * Y(k, 1, lam)``; zero at ``lam = 0``."""
    _check_positive("k", k)
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"labor share must lie in [0, 1], got {lam}")
    if lam == 0.0:
        return 0.0
    return float(lam * f.output(k, lam))


def dlogw_dlambda(lam: float, k: float, f: ProductionFamily) -> float:
    """Direct effect ``1/lam`` plus the output channel ``d ln Y / d lam``."""
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"d ln w / d lam has a pole at lam = 0; got lam = {lam}")
    _check_positive("k", k)
    return float(1.0 / lam + f.first_derivative(k, lam))


def _foc(k, f, lam):
    return 1.0 / lam + f.first_derivative(k, lam)


def _bisect(k, f, lo, hi, glo, tol):
    """Refine a sign change of the FOC until ``|g| < tol`` or the bracket collapses."""
    mid, gm = lo, glo
    for it in range(1, _MAX_BISECT + 1):
        mid = 0.5 * (lo + hi)
        gm = float(_foc(k, f, mid))
        if not math.isfinite(gm):
            raise NumericError(f"non-finite first-order condition at lam={mid!r}, k={k!r}")
        if abs(gm) < tol or mid in (lo, hi):
            return mid, gm, it
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return mid, gm, _MAX_BISECT


def solve_lambda_star(
    k: float,
    f: ProductionFamily,
    foc_tolerance: float = FOC_TOLERANCE,
    n_grid: int = SCAN_POINTS,
    eps: float = SCAN_EPS,
) -> LambdaStarResult:
    """Global wage-maximizing labor share for capital-labor ratio ``k``.

    Every sign change of ``g(lam) = 1/lam + d ln Y/d lam`` on a uniform
    ``n_grid``-point scan of ``[eps, 1 - eps]`` is bisected to
    ``|g| < foc_tolerance``.  The best interior critical point is compared
    with the boundary wage ``w(1)``; ``lam = 0`` never maximizes since
    ``w(0) = 0``.  ``soc_satisfied`` reports ``d^2 ln Y / d lam^2 < 0`` at
    the returned interior point and is ``False`` for boundary solutions.
    """
    _check_positive("k", k)
    grid = np.linspace(eps, 1.0 - eps, n_grid)
    g = _foc(k, f, grid)
    if not np.all(np.isfinite(g)):
        bad = grid[~np.isfinite(g)][0]
        raise NumericError(f"non-finite first-order condition at lam={bad!r}, k={k!r}")

    roots = []
    residuals = []
    iterations = 0
    exact = np.flatnonzero(g == 0.0)
    for i in exact:
        roots.append(float(grid[i]))
        residuals.append(0.0)
    s = np.sign(g)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        root, resid, it = _bisect(k, f, float(grid[i]), float(grid[i + 1]), float(g[i]), foc_tolerance)
        roots.append(root)
        residuals.append(resid)
        iterations += it
    order = np.argsort(roots)
    roots = [roots[j] for j in order]
    residuals = [residuals[j] for j in order]

    w_boundary = float(f.output(k, 1.0))
    if not (math.isfinite(w_boundary) and w_boundary > 0):
        raise NumericError(f"boundary output Y(k, 1, 1) is not positive and finite: {w_boundary!r}")

    best = None
    for root, resid in zip(roots, residuals):
        w = float(root * f.output(k, root))
        if not math.isfinite(w):
            raise NumericError(f"non-finite wage at lam={root!r}, k={k!r}")
        if best is None or w > best[1]:
            best = (root, w, resid)

    if best is not None and best[1] > w_boundary:
        lam_star, w_star, resid = best
        soc = bool(f.second_derivative(k, lam_star) < 0)
        return LambdaStarResult(lam_star, w_star, True, soc, iterations, tuple(roots), abs(resid))
    return LambdaStarResult(
        1.0, w_boundary, False, False, iterations, tuple(roots), abs(float(_foc(k, f, 1.0)))
    )


# -- families -----------------------------------------------------------------


def cobb_douglas_family(A: float = 1.0) -> ProductionFamily:
    """``y = A k^(1 - lam)``: the ``sigma = 1`` member of the CES family."""
    return ProductionFamily(
        evaluator=lambda k, lam: A * k ** (1.0 - lam),
        dlogY_dlambda=lambda k, lam: -math.log(k) + 0.0 * lam,
        d2logY_dlambda2=lambda k, lam: 0.0 * lam,
        name="cobb-douglas",
    )


def ces_family(sigma: float, A: float = 1.0) -> ProductionFamily:
    """Intensive CES family with analytic log-derivatives in ``lam``."""
    _check_positive("sigma", sigma)
    _check_positive("A", A)
    if sigma == 1.0:
        return cobb_douglas_family(A)
    x = _exponent(sigma)

    def first(k, lam):
        kx = k**x
        return (1.0 - kx) / (x * (lam + (1.0 - lam) * kx))

    def second(k, lam):
        kx = k**x
        return -((1.0 - kx) ** 2) / (x * (lam + (1.0 - lam) * kx) ** 2)

    return ProductionFamily(
        evaluator=lambda k, lam: _ces_y(k, lam, sigma, A),
        dlogY_dlambda=first,
        d2logY_dlambda2=second,
        name=f"ces(sigma={sigma:g})",
    )


def ces_kl_family(K: float, L: float, sigma: float, A: float = 1.0) -> ProductionFamily:
    """CES family evaluated from raw inputs ``(K, L)`` rather than ``k``.

    For each labor share the share parameter is backed out as
    ``alpha = (1 - lam) / (1 - lam + lam k^rho)`` and
    :func:`ces_output` is evaluated at the actual ``K`` and ``L``; the
    evaluator returns ``Y(K, L, lam) / L``.  The ``k`` argument of the
    kernels is ignored, which makes this family a direct test of
    scale invariance.
    """
    _check_positive("K", K)
    _check_positive("L", L)
    _check_positive("sigma", sigma)
    _check_positive("A", A)
    if sigma == 1.0:
        # alpha = 1 - lam exactly; Y/L = A K^(1-lam) L^lam / L
        lnK, lnL = math.log(K), math.log(L)
        return ProductionFamily(
            evaluator=lambda k, lam: A * np.exp((1.0 - lam) * lnK + lam * lnL) / L,
            dlogY_dlambda=lambda k, lam: (lnL - lnK) + 0.0 * lam,
            d2logY_dlambda2=lambda k, lam: 0.0 * lam,
            name="cobb-douglas(K,L)",
        )
    rho = (sigma - 1.0) / sigma
    Kr, Lr = K**rho, L**rho
    kr = Kr / Lr

    def alpha_of(lam):
        return (1.0 - lam) / (1.0 - lam + lam * kr)

    def evaluator(k, lam):
        a = alpha_of(lam)
        return A * (a * Kr + (1.0 - a) * Lr) ** (1.0 / rho) / L

    def first(k, lam):
        a = alpha_of(lam)
        d = 1.0 - lam + lam * kr
        dalpha = -kr / d**2
        return (Kr - Lr) / (rho * (a * Kr + (1.0 - a) * Lr)) * dalpha

    return ProductionFamily(evaluator=evaluator, dlogY_dlambda=first, name=f"ces-kl(sigma={sigma:g})")


def solve_lambda_star_kl(
    K: float, L: float, sigma: float, A: float = 1.0, foc_tolerance: float = FOC_TOLERANCE
) -> LambdaStarResult:
    """:func:`solve_lambda_star` for the CES technology at raw inputs ``(K, L)``."""
    return solve_lambda_star(K / L, ces_kl_family(K, L, sigma, A), foc_tolerance)


def exponential_family(c: float, A: float = 1.0) -> ProductionFamily:
    """``Y = A exp(-c lam)``; the FOC gives ``lam* = 1/c`` independently of ``k``."""
    _check_positive("A", A)
    return ProductionFamily(
        evaluator=lambda k, lam: A * np.exp(-c * lam),
        dlogY_dlambda=lambda k, lam: -c + 0.0 * lam,
        d2logY_dlambda2=lambda k, lam: 0.0 * lam,
        name=f"exp(c={c:g})",
    )


def constant_family(value: float = 1.0) -> ProductionFamily:
    """Output independent of the labor share; the wage rises all the way to ``lam = 1``."""
    _check_positive("value", value)
    return ProductionFamily(
        evaluator=lambda k, lam: value + 0.0 * lam,
        dlogY_dlambda=lambda k, lam: 0.0 * lam,
        d2logY_dlambda2=lambda k, lam: 0.0 * lam,
        name="constant",
    )


# -- scale invariance ----------------------------------------------------------


@dataclass(frozen=True)
class InvarianceRow:
    sigma: float
    k: float
    scale: float
    lambda_star: float
    wage_star: float
    is_interior: bool
    lambda_deviation: float
    wage_deviation: float


def scale_invariance_sweep(
    sigmas: Sequence[float],
    k_grid: Sequence[float],
    scales: Sequence[float],
    A: float = 1.0,
    base_L: float = 1.0,
    foc_tolerance: float = FOC_TOLERANCE,
) -> list:
    """Solve at ``(c K, c L)`` for every scale and report deviations from ``c = 1``.

    The reference is the solution at ``(k * base_L, base_L)``.  The wage
    deviation is relative.
    """
    rows = []
    for sigma in sigmas:
        for k in k_grid:
            K, L = k * base_L, base_L
            ref = solve_lambda_star_kl(K, L, sigma, A, foc_tolerance)
            for c in scales:
                res = solve_lambda_star_kl(c * K, c * L, sigma, A, foc_tolerance)
                rows.append(
                    InvarianceRow(
                        sigma=sigma,
                        k=k,
                        scale=c,
                        lambda_star=res.lambda_star,
                        wage_star=res.wage_star,
                        is_interior=res.is_interior,
                        lambda_deviation=abs(res.lambda_star - ref.lambda_star),
                        wage_deviation=abs(res.wage_star - ref.wage_star) / ref.wage_star,
                    )
                )
    return rows
