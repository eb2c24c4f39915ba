"""Standard normal CDF, density and inverse CDF.

The inverse uses Acklam's rational approximation (relative error about
1.15e-9) followed by one Newton step against ``erfc``, which brings the
absolute error below 1e-12 on (1e-300, 1 - 1e-16).
"""
from __future__ import annotations

import math

import numpy as np

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT2)
    return np.vectorize(lambda v: 0.5 * math.erfc(-v / SQRT2), otypes=[float])(x)


def norm_sf(x):
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / SQRT2)
    return np.vectorize(lambda v: 0.5 * math.erfc(v / SQRT2), otypes=[float])(x)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def _acklam(u: float) -> float:
    if u < _P_LOW:
        r = math.sqrt(-2.0 * math.log(u))
        return ((((( _C[0]*r + _C[1])*r + _C[2])*r + _C[3])*r + _C[4])*r + _C[5]) / \
               ((((_D[0]*r + _D[1])*r + _D[2])*r + _D[3])*r + 1.0)
    if u > 1.0 - _P_LOW:
        r = math.sqrt(-2.0 * math.log1p(-u))
        return -((((( _C[0]*r + _C[1])*r + _C[2])*r + _C[3])*r + _C[4])*r + _C[5]) / \
                ((((_D[0]*r + _D[1])*r + _D[2])*r + _D[3])*r + 1.0)
    s = u - 0.5
    r = s * s
    return (((((_A[0]*r + _A[1])*r + _A[2])*r + _A[3])*r + _A[4])*r + _A[5]) * s / \
           (((((_B[0]*r + _B[1])*r + _B[2])*r + _B[3])*r + _B[4])*r + 1.0)


def _ppf_scalar(u: float) -> float:
    if not (0.0 <= u <= 1.0) or math.isnan(u):
        raise ValueError(f"probability must lie in [0,1], got {u!r}")
    if u == 0.0:
        return -math.inf
    if u == 1.0:
        return math.inf
    if u == 0.5:
        return 0.0
    x = _acklam(u)
    # Newton step on the tail that is far from 1 to avoid cancellation
    if u < 0.5:
        err = 0.5 * math.erfc(-x / SQRT2) - u
    else:
        err = -(0.5 * math.erfc(x / SQRT2) - (1.0 - u))
    dens = INV_SQRT_2PI * math.exp(-0.5 * x * x)
    if dens > 0:
        x -= err / dens
    return x


def norm_ppf(u):
    if np.ndim(u) == 0:
        return _ppf_scalar(float(u))
    return np.vectorize(_ppf_scalar, otypes=[float])(u)


def wilson_interval(successes, trials: int, level: float = 0.99):
    """Wilson score interval for a binomial proportion."""
    z = norm_ppf(0.5 + level / 2)
    k = np.asarray(successes, dtype=float)
    ph = k / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * np.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return np.clip(centre - half, 0, 1), np.clip(centre + half, 0, 1)
