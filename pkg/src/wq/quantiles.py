"""Quantiles of the bridge statistic and the extremal mixture family on grids."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bridge import DistanceSample, sample_statistics_crn
from .measures import check_simplex
from .normal import norm_ppf
from .rng import RngLike

CI_LEVEL = 0.99


@dataclass(frozen=True)
class QuantileEstimate:
    alpha: float
    value: float
    ci_lo: float
    ci_hi: float
    M: int
    at_minimum: bool = False

    @property
    def se(self) -> float:
        """Standard error read off the order-statistic interval width."""
        return (self.ci_hi - self.ci_lo) / (2 * norm_ppf(0.5 + CI_LEVEL / 2))


def _order_index(alpha: float, M: int) -> int:
    # 1-based index of the inf-definition quantile; the epsilon absorbs alpha*M rounding
    return min(M, max(1, math.ceil(alpha * M - 1e-9)))


def quantile_from_sorted(v: np.ndarray, alpha: float, level: float = CI_LEVEL) -> QuantileEstimate:
    M = v.size
    if M == 0:
        raise ValueError("empty sample")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0,1], got {alpha!r}")
    at_min = alpha == 0
    if at_min:
        warnings.warn("alpha = 0: returning the sample minimum", stacklevel=3)
        k = 1
    else:
        k = _order_index(alpha, M)
    z = norm_ppf(0.5 + level / 2)
    half = z * math.sqrt(M * alpha * (1 - alpha))
    lo = min(k, max(1, math.floor(M * alpha - half)))
    hi = max(k, min(M, math.ceil(M * alpha + half) + 1))
    return QuantileEstimate(float(alpha), float(v[k - 1]), float(v[lo - 1]), float(v[hi - 1]), M, at_min)


def empirical_quantile(sample, alpha: float, level: float = CI_LEVEL) -> QuantileEstimate:
    """``inf{x : F_M(x) >= alpha}``, the ``ceil(alpha M)``-th order statistic.

    ``sample`` is a ``DistanceSample`` or any array of values.  The interval
    brackets the quantile between order statistics at binomial ``level``.
    """
    values = sample.values if isinstance(sample, DistanceSample) else np.asarray(sample, dtype=float)
    return quantile_from_sorted(np.sort(values.ravel()), alpha, level)


def mixture_pvector(lam: float, n: int) -> np.ndarray:
    """Grid masses of ``lam (delta_0 + delta_1)/2 + (1 - lam) U(grid)``."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must lie in [0,1], got {lam!r}")
    if n < 2:
        raise ValueError("need n >= 2")
    p = np.full(n, (1.0 - lam) / n)
    end = (1.0 - (n - 2) * p[1]) / 2 if n > 2 else 0.5
    p[0] = p[-1] = end
    return p


@dataclass(frozen=True)
class LambdaCurve:
    alphas: np.ndarray
    lambda_hat: np.ndarray
    quantile_at_max: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    lambda_grid: np.ndarray
    quantiles: np.ndarray      # shape (len(lambda_grid), len(alphas))
    M: int
    n: int


def lambda_curve(n: int, alphas, lambda_grid, M: int, rng: RngLike, threads: int | None = None) -> LambdaCurve:
    """Per level, the mixture weight whose statistic has the largest quantile.

    All weights share one block of standard normals.  Ties go to the smaller
    weight.
    """
    alphas = np.asarray(alphas, dtype=float)
    grid = np.unique(np.asarray(lambda_grid, dtype=float))
    if alphas.size == 0 or grid.size == 0:
        raise ValueError("alphas and lambda_grid must be nonempty")
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError("lambda_grid must lie in [0,1]")
    samples = sample_statistics_crn([mixture_pvector(l, n) for l in grid], M, rng, threads)
    Q = np.empty((grid.size, alphas.size))
    LO = np.empty_like(Q)
    HI = np.empty_like(Q)
    for i, s in enumerate(samples):
        v = np.sort(s)
        for j, a in enumerate(alphas):
            est = quantile_from_sorted(v, a)
            Q[i, j], LO[i, j], HI[i, j] = est.value, est.ci_lo, est.ci_hi
    best = np.argmax(Q, axis=0)  # first maximum = smallest lambda
    cols = np.arange(alphas.size)
    return LambdaCurve(alphas, grid[best], Q[best, cols], LO[best, cols], HI[best, cols],
                       grid, Q, M, n)


def symmetrize(p) -> np.ndarray:
    """Average the end masses and spread the interior mass evenly."""
    p = check_simplex(p)
    n = p.size
    out = np.empty(n)
    out[0] = out[-1] = (p[0] + p[-1]) / 2
    if n > 2:
        out[1:-1] = p[1:-1].sum() / (n - 2)
    return out


@dataclass(frozen=True)
class QuantileDifference:
    diff: float
    se: float
    base: QuantileEstimate
    other: QuantileEstimate


def symmetry_gain(p, alpha: float, M: int, rng: RngLike, threads: int | None = None) -> QuantileDifference:
    """Quantile under the symmetrized vector minus quantile under ``p`` (common normals).

    ``se`` combines both order-statistic errors as if independent, which
    overstates the error of a common-random-numbers difference.
    """
    p = check_simplex(p)
    s_sym, s_p = sample_statistics_crn([symmetrize(p), p], M, rng, threads)
    a = empirical_quantile(s_sym, alpha)
    b = empirical_quantile(s_p, alpha)
    return QuantileDifference(a.value - b.value, math.hypot(a.se, b.se), b, a)


def extremal_pvector(n: int) -> np.ndarray:
    p = np.zeros(n)
    p[0] = p[-1] = 0.5
    return p


@dataclass(frozen=True)
class Shortfall:
    K: float
    mean: float
    se: float


def dominance_integral(p, K, M: int, rng: RngLike, threads: int | None = None):
    """Monte Carlo ``E (B_n - K)^+`` for one threshold or a list of thresholds."""
    (values,) = sample_statistics_crn([check_simplex(p)], M, rng, threads)
    return shortfalls(values, K)


def shortfalls(values, K):
    values = np.asarray(values, dtype=float)
    Ks = np.atleast_1d(np.asarray(K, dtype=float))
    if np.any(Ks < 0):
        raise ValueError("thresholds must be >= 0")
    out = []
    for k in Ks:
        e = np.maximum(values - k, 0.0)
        out.append(Shortfall(float(k), float(e.mean()), float(e.std(ddof=1) / math.sqrt(e.size))))
    return out[0] if np.ndim(K) == 0 else out


__all__ = [
    "QuantileEstimate", "LambdaCurve", "QuantileDifference", "Shortfall",
    "empirical_quantile", "quantile_from_sorted", "mixture_pvector", "lambda_curve",
    "symmetrize", "symmetry_gain", "extremal_pvector", "dominance_integral", "shortfalls",
]
