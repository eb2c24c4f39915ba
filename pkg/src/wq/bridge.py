"""Discretized Brownian bridge at the cumulative grid masses.

For a grid measure with masses ``p`` the limit of ``sqrt(N) W1(P_hat_N, P)``
is ``sum_i |B(q_i)| / (n - 1)``, a functional of the Gaussian vector
``(B(q_1), ..., B(q_{n-1}))`` with covariance ``q_min (1 - q_max)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import stable_cholesky
from .measures import MeasureError, check_simplex, cumulative_q
from .normal import norm_sf, wilson_interval
from .rng import RngLike, as_stream, blocks, parallel_map
from .transport import w1_grid_counts

MULTIPLICITY_GAP = 1e-8


class DegenerateCovariance(ValueError):
    pass


def bridge_covariance_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.minimum.outer(q, q) * (1.0 - np.maximum.outer(q, q))


def bridge_factor(q) -> np.ndarray:
    """Exact lower Cholesky factor of the bridge covariance at nondecreasing ``q``.

    Uses the Markov recursion ``B(q_i) = a_i B(q_{i-1}) + s_i z_i`` with
    ``a_i = (1-q_i)/(1-q_{i-1})`` and ``s_i^2 = (q_i-q_{i-1})(1-q_i)/(1-q_{i-1})``.
    Rank-deficient cases (repeated ``q``, ``q`` at 0 or 1) give exact zero
    columns instead of jitter noise.
    """
    q = np.asarray(q, dtype=float)
    d = q.size
    L = np.zeros((d, d))
    prev = 0.0
    for i in range(d):
        rem = 1.0 - prev
        if rem > 0:
            a = (1.0 - q[i]) / rem
            s2 = max(q[i] - prev, 0.0) * (1.0 - q[i]) / rem
        else:
            a, s2 = 0.0, 0.0
        if i:
            L[i, :i] = a * L[i - 1, :i]
        L[i, i] = math.sqrt(max(s2, 0.0))
        prev = q[i]
    return L


@dataclass(frozen=True)
class BridgeCovariance:
    n: int
    q: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.n - 1


def build_covariance(p, factor: str = "exact") -> BridgeCovariance:
    """Covariance of the bridge at the partial sums of ``p``.

    ``factor="exact"`` uses the closed-form bridge factor; ``"jitter"`` runs
    the generic jittered Cholesky instead (kept for cross-checking).
    """
    p = check_simplex(p)
    if p.size < 2:
        raise MeasureError("need n >= 2 grid points")
    q = cumulative_q(p)
    sigma = bridge_covariance_matrix(q)
    if factor == "exact":
        L, jit = bridge_factor(q), 0.0
    elif factor == "jitter":
        f = stable_cholesky(sigma)
        L, jit = f.L, f.jitter
    else:
        raise ValueError(f"unknown factor {factor!r}")
    w, V = np.linalg.eigh(sigma)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    resid = np.max(np.abs(sigma @ V - V * w)) if w.size else 0.0
    if resid > 1e-10 * max(np.max(np.abs(sigma)), 1e-300):
        raise np.linalg.LinAlgError(f"eigen-decomposition residual {resid:.3g} too large")
    for a in (q, sigma, L, w, V):
        a.setflags(write=False)
    return BridgeCovariance(p.size, q, sigma, L, w, V, jit)


@dataclass(frozen=True)
class DistanceSample:
    values: np.ndarray
    seed: object
    statistic_id: str

    @property
    def M(self) -> int:
        return int(self.values.size)

    def mean(self) -> tuple[float, float]:
        v = self.values
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan


def statistic_from_normals(cov: BridgeCovariance, Z: np.ndarray) -> np.ndarray:
    """``sum_i |(L z)_i| / (n - 1)`` for each row ``z`` of ``Z``."""
    return np.abs(Z @ cov.chol.T).sum(axis=1) / (cov.n - 1)


def sample_statistic(cov: BridgeCovariance, M: int, rng: RngLike, threads: int | None = None) -> DistanceSample:
    if M < 1:
        raise ValueError(f"need M >= 1 replicates, got {M}")
    stream = as_stream(rng)

    def run(item):
        b, m = item
        Z = stream.child(b).generator().standard_normal((m, cov.dim))
        return statistic_from_normals(cov, Z)

    values = np.concatenate(parallel_map(run, blocks(M), threads))
    values.setflags(write=False)
    return DistanceSample(values, (stream.seed, stream.key), f"bridge_l1[n={cov.n}]")


def sample_statistics_crn(ps, M: int, rng: RngLike, threads: int | None = None) -> list[np.ndarray]:
    """Statistic samples for several probability vectors driven by the same normals."""
    covs = [build_covariance(p) for p in ps]
    dims = {c.dim for c in covs}
    if len(dims) != 1:
        raise ValueError("common random numbers need vectors of equal length")
    dim = dims.pop()
    stream = as_stream(rng)

    def run(item):
        b, m = item
        Z = stream.child(b).generator().standard_normal((m, dim))
        return [statistic_from_normals(c, Z) for c in covs]

    parts = parallel_map(run, blocks(M), threads)
    return [np.concatenate([part[j] for part in parts]) for j in range(len(covs))]


@dataclass(frozen=True)
class McCdf:
    t: np.ndarray
    F_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    M: int
    seed: object


def mc_cdf(p, t_grid, M: int, rng: RngLike, level: float = 0.99, threads: int | None = None) -> McCdf:
    """Monte Carlo CDF of the bridge statistic on ``t_grid`` from one shared draw set."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be nonnegative and ascending")
    if M < 100:
        raise ValueError(f"need M >= 100 replicates, got {M}")
    sample = sample_statistic(build_covariance(p), M, rng, threads)
    v = np.sort(sample.values)
    k = np.searchsorted(v, t, side="right")
    lo, hi = wilson_interval(k, M, level)
    return McCdf(t, k / M, lo, hi, M, sample.seed)


def limit_statistic_uniform_mean(M: int, fine_n: int, rng: RngLike, threads: int | None = None):
    """Mean and standard error of the n-point statistic under the uniform grid measure.

    Approximates ``E int_0^1 |B(t)| dt = sqrt(2 pi)/8`` as ``fine_n`` grows.
    """
    if fine_n < 2:
        raise ValueError("fine_n must be >= 2")
    if fine_n < 100:
        warnings.warn(f"fine_n={fine_n} is a coarse Riemann approximation", stacklevel=2)
    p = np.full(fine_n, 1.0 / fine_n)
    p[-1] = 1.0 - p[:-1].sum()
    return sample_statistic(build_covariance(p), M, rng, threads).mean()


@dataclass(frozen=True)
class CltCheck:
    kolmogorov: float
    scaled_distances: np.ndarray
    limit_values: np.ndarray
    N: int


def clt_check(p, N: int, reps: int, M: int, rng: RngLike, threads: int | None = None) -> CltCheck:
    """Kolmogorov distance between the laws of ``sqrt(N) W1(P_hat_N, P)`` and of the limit statistic.

    The first law uses ``reps`` multinomial empirical measures of size ``N``;
    the second ``M`` draws of the bridge statistic.
    """
    p = check_simplex(p)
    if N < 1 or reps < 1:
        raise ValueError("N and reps must be >= 1")
    stream = as_stream(rng)

    def run(item):
        b, m = item
        counts = stream.child(0, b).generator().multinomial(N, p, size=m)
        return w1_grid_counts(p, counts, N)

    d = math.sqrt(N) * np.concatenate(parallel_map(run, blocks(reps), threads))
    lim = sample_statistic(build_covariance(p), M, stream.child(1), threads).values
    both = np.sort(np.concatenate([d, lim]))
    Fd = np.searchsorted(np.sort(d), both, side="right") / d.size
    Fl = np.searchsorted(np.sort(lim), both, side="right") / lim.size
    return CltCheck(float(np.max(np.abs(Fd - Fl))), d, lim, N)


def uniform_mean_exact(fine_n: int) -> float:
    """Exact mean of the n-point uniform statistic: ``sum_i sqrt(2 q_i(1-q_i)/pi)/(n-1)``."""
    q = np.arange(1, fine_n) / fine_n
    return float(np.sum(np.sqrt(2 * q * (1 - q) / math.pi)) / (fine_n - 1))


def _multiplicity(w: np.ndarray, gap: float = MULTIPLICITY_GAP) -> int:
    return int(np.sum(w[0] - w <= gap * w[0]))


def eigen_tail(cov: BridgeCovariance | np.ndarray, t: float) -> float:
    """Asymptotic ``P(||X||_2 >= sqrt(t * alpha_1))`` for ``X ~ N(0, Sigma)``.

    ``2^{1-m/2}/Gamma(m/2) e^{-t/2} t^{m/2-1} prod_{j>m} (1 - alpha_j/alpha_1)^{-1/2}``
    with ``m`` the multiplicity of the top eigenvalue (relative gap 1e-8).
    ``cov`` may also be a bare descending eigenvalue array.
    """
    w = np.asarray(cov.eigenvalues if isinstance(cov, BridgeCovariance) else cov, dtype=float)
    w = np.sort(w)[::-1]
    if w.size == 0 or w[0] <= 0:
        raise DegenerateCovariance("top eigenvalue is zero: the statistic is a point mass")
    if t <= 0:
        raise ValueError("threshold must be positive")
    m = _multiplicity(w)
    rest = np.clip(w[m:], 0.0, None) / w[0]
    logv = ((1 - m / 2) * math.log(2) - math.lgamma(m / 2) - t / 2
            + (m / 2 - 1) * math.log(t) - 0.5 * float(np.sum(np.log1p(-rest))))
    return math.exp(logv)


@dataclass(frozen=True)
class TailBound:
    t: float
    threshold: float
    value: float
    note: str = "asymptotic, diagnostic only"


def l1_tail_bound(p, t: float) -> TailBound:
    """Asymptotic bound on ``P(B_n >= t)`` through the l2 ball and the top eigenvalue.

    Evaluates ``eigen_tail`` at ``t^2 (n-1) / alpha_1``; the constant is the
    eigenvalue product, not a certified bound.
    """
    cov = build_covariance(p)
    a1 = float(cov.eigenvalues[0])
    if a1 <= 0:
        raise DegenerateCovariance("top eigenvalue is zero: the statistic is a point mass")
    thr = t * t * (cov.n - 1) / a1
    return TailBound(float(t), thr, eigen_tail(cov, thr))


def exact_two_point_tail(t):
    """``P(|B(1/2)| >= t) = 2 - 2 Phi(2t)``."""
    return 2.0 * norm_sf(2.0 * np.asarray(t, dtype=float)) if np.ndim(t) else 2.0 * norm_sf(2.0 * t)


__all__ = [
    "BridgeCovariance", "DistanceSample", "McCdf", "TailBound", "DegenerateCovariance",
    "build_covariance", "bridge_factor", "bridge_covariance_matrix", "sample_statistic",
    "sample_statistics_crn", "statistic_from_normals", "mc_cdf", "limit_statistic_uniform_mean",
    "uniform_mean_exact", "eigen_tail", "clt_check", "CltCheck", "l1_tail_bound", "exact_two_point_tail",
]
