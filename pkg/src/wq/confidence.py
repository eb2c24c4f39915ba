"""Asymptotic W1 confidence regions for a measure on [0,1].

The region around the empirical measure is the W1 ball of radius
``k / sqrt(N)`` with ``k = Phi^{-1}((1 + alpha)/2) / 2``.  Because the
two-point law ``(delta_0 + delta_1)/2`` is the worst case for high levels,
the same radius bounds every measure, and by Kantorovich-Rubinstein duality
it bounds the mean of every 1-Lipschitz function simultaneously.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .measures import (
    DiscreteMeasure1D,
    FiniteMeasure1D,
    SampleBatch,
    empirical_measure,
    sample,
)
from .normal import SQRT2, norm_ppf, wilson_interval
from .rng import RngLike, as_stream, parallel_map
from .transport import w1_1d

ASYMPTOTIC_NOTE = "asymptotic, alpha near 1"
VALIDITY_ALPHA = 0.7


class InfiniteRadius(ValueError):
    pass


def radius_k(alpha: float) -> float:
    """Normalized radius ``Phi^{-1}((1 + alpha)/2) / 2``."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0,1), got {alpha!r}")
    if alpha == 1.0:
        raise InfiniteRadius("alpha = 1 needs an infinite radius")
    return norm_ppf(0.5 + alpha / 2) / 2


def normal_tail_2m2phi(t: float) -> float:
    """``P(|B(1/2)| >= t) = 2 - 2 Phi(2t)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.erfc(SQRT2 * t)


@dataclass(frozen=True)
class ConfidenceRegion:
    center: DiscreteMeasure1D
    radius: float
    alpha: float
    k: float
    N: int
    note: str = ASYMPTOTIC_NOTE


def confidence_region(batch: SampleBatch, alpha: float) -> ConfidenceRegion:
    k = radius_k(alpha)
    return ConfidenceRegion(empirical_measure(batch), k / math.sqrt(batch.N), alpha, k, batch.N)


@dataclass(frozen=True)
class Membership:
    contained: bool
    margin: float
    distance: float
    radius: float


def region_contains(batch: SampleBatch, candidate, alpha: float) -> Membership:
    """Is ``candidate`` within the W1 ball around the empirical measure? Margin = radius - distance."""
    region = confidence_region(batch, alpha)
    d = w1_1d(region.center, candidate)
    return Membership(d <= region.radius, region.radius - d, d, region.radius)


def empirical_distance(P, N: int, rng: RngLike) -> float:
    """W1 between ``P`` and the empirical measure of ``N`` fresh draws."""
    stream = as_stream(rng)
    if isinstance(P, FiniteMeasure1D):
        counts = stream.generator().multinomial(N, P.p)
        return w1_1d(FiniteMeasure1D(P.grid, counts / N), P)
    batch = sample(P, N, stream)
    return w1_1d(empirical_measure(batch), P)


@dataclass(frozen=True)
class Coverage:
    fraction: float
    ci_lo: float
    ci_hi: float
    reps: int
    alpha: float
    N: int
    warning: str | None = None

    @property
    def se(self) -> float:
        f = self.fraction
        return math.sqrt(max(f * (1 - f), 1.0 / self.reps) / self.reps)


def _validity_warning(alpha: float) -> str | None:
    if alpha < VALIDITY_ALPHA:
        msg = f"alpha={alpha} is far from 1; the region is only asymptotically valid as alpha -> 1"
        warnings.warn(msg, stacklevel=3)
        return msg
    return None


def coverage_sim(P, N: int, alpha: float, reps: int, rng: RngLike, threads: int | None = None) -> Coverage:
    """Fraction of replicates whose region contains ``P``, with a 99% Wilson interval."""
    if reps < 100:
        raise ValueError(f"need reps >= 100, got {reps}")
    warn = _validity_warning(alpha)
    radius = radius_k(alpha) / math.sqrt(N)
    stream = as_stream(rng)
    dists = np.array(parallel_map(lambda r: empirical_distance(P, N, stream.child(r)), range(reps), threads))
    hits = int(np.sum(dists <= radius))
    lo, hi = wilson_interval(hits, reps)
    return Coverage(hits / reps, float(lo), float(hi), reps, alpha, N, warn)


@dataclass(frozen=True)
class LipschitzFunction:
    """Piecewise-linear function through ``(xs, ys)``, constant outside."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
            raise ValueError("breakpoint table needs equal-length 1-D xs and ys")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        dx, dy = np.diff(xs), np.abs(np.diff(ys))
        bad = np.flatnonzero(dy > dx + 1e-12)
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"not 1-Lipschitz between breakpoints {i} (x={xs[i]!r}) "
                             f"and {i + 1} (x={xs[i + 1]!r}): slope {dy[i] / dx[i]:.6g}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def mean_under(self, measure) -> float:
        return float(measure.mean_of(self))


def random_lipschitz(rng: np.random.Generator, knots: int = 8) -> LipschitzFunction:
    xs = np.sort(np.concatenate([[0.0, 1.0], rng.random(knots - 2)]))
    xs = np.unique(xs)
    slopes = rng.uniform(-1, 1, xs.size - 1)
    ys = np.concatenate([[rng.normal()], np.cumsum(slopes * np.diff(xs))])
    ys[1:] += ys[0]
    return LipschitzFunction(xs, ys)


@dataclass(frozen=True)
class MeanBounds:
    lo: float
    hi: float
    mean: float
    halfwidth: float
    uniform_in_f: bool = True
    note: str = ASYMPTOTIC_NOTE


def lipschitz_mean_bounds(batch: SampleBatch, f: LipschitzFunction, alpha: float) -> MeanBounds:
    """Interval for ``E_P f``; one halfwidth serves every 1-Lipschitz ``f`` at once."""
    if not isinstance(f, LipschitzFunction):
        f = LipschitzFunction(*f)
    m = float(np.mean(f(batch.draws)))
    h = radius_k(alpha) / math.sqrt(batch.N)
    return MeanBounds(m - h, m + h, m, h)


def simultaneous_coverage(P, fs, N: int, alpha: float, reps: int, rng: RngLike,
                          threads: int | None = None) -> Coverage:
    """Frequency with which every interval from ``fs`` contains its true mean."""
    truths = np.array([f.mean_under(P) for f in fs])
    h = radius_k(alpha) / math.sqrt(N)
    stream = as_stream(rng)

    def one(r):
        x = sample(P, N, stream.child(r)).draws
        means = np.array([np.mean(f(x)) for f in fs])
        return bool(np.all(np.abs(means - truths) <= h))

    hits = int(sum(parallel_map(one, range(reps), threads)))
    lo, hi = wilson_interval(hits, reps)
    return Coverage(hits / reps, float(lo), float(hi), reps, alpha, N, _validity_warning(alpha))


__all__ = [
    "ConfidenceRegion", "Membership", "Coverage", "LipschitzFunction", "MeanBounds", "InfiniteRadius",
    "radius_k", "normal_tail_2m2phi", "confidence_region", "region_contains", "coverage_sim",
    "empirical_distance", "lipschitz_mean_bounds", "random_lipschitz", "simultaneous_coverage",
]
