"""Bayesian optimization of the empirical W1 quantile over grid measures on [0,1]^2.

The search space is the interior of the probability simplex, reached through
a softmax with the last logit pinned at zero.  A squared-exponential GP with
learned noise models the (noisy) quantile; expected improvement picks the
next point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .linalg import stable_cholesky
from .measures import FiniteMeasure2D
from .normal import INV_SQRT_2PI, SQRT2
from .quantiles import QuantileEstimate, empirical_quantile
from .rng import RngLike, as_stream, parallel_map
from .transport import w1_grid_lp

THETA_BOX = 8.0


# --- simplex parametrization -------------------------------------------------

def theta_to_p(theta) -> np.ndarray:
    z = np.concatenate([np.asarray(theta, dtype=float), [0.0]])
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def p_to_theta(p, floor: float = 1e-300) -> np.ndarray:
    p = np.maximum(np.asarray(p, dtype=float).ravel(), floor)
    return np.log(p[:-1]) - np.log(p[-1])


@dataclass(frozen=True)
class SimplexPoint:
    theta: np.ndarray
    shape: tuple

    @property
    def p(self) -> np.ndarray:
        return theta_to_p(self.theta).reshape(self.shape)

    def measure(self) -> FiniteMeasure2D:
        return FiniteMeasure2D(self.shape[0], self.shape[1], self.p)


# --- objective -----------------------------------------------------------------

def distance_sample(P: FiniteMeasure2D, N: int, M: int, rng: RngLike) -> np.ndarray:
    """``M`` draws of ``W1(P, P_hat_N)`` with l1 ground cost."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    g = as_stream(rng).generator()
    counts = g.multinomial(N, P.p.ravel(), size=M)
    out = np.empty(M)
    # repeated count vectors are common on small grids; solve each once
    cache: dict[bytes, float] = {}
    for r in range(M):
        key = counts[r].tobytes()
        if key not in cache:
            Q = FiniteMeasure2D(P.nx, P.ny, (counts[r] / N).reshape(P.nx, P.ny))
            cache[key] = w1_grid_lp(P, Q)[0]
        out[r] = cache[key]
    return out


def objective_quantile(P: FiniteMeasure2D, N: int, M: int, alpha: float, rng: RngLike) -> QuantileEstimate:
    """Empirical ``alpha``-quantile of ``W1(P, P_hat_N)`` over ``M`` replicates."""
    return empirical_quantile(distance_sample(P, N, M, rng), alpha)


# --- Gaussian process ------------------------------------------------------------

@dataclass(frozen=True)
class Hyper:
    signal_var: float
    length_scales: np.ndarray
    noise_var: float

    def as_log(self) -> np.ndarray:
        return np.concatenate([[math.log(self.signal_var)], np.log(self.length_scales),
                               [math.log(max(self.noise_var, 1e-300))]])


@dataclass(frozen=True)
class GPSurrogate:
    X: np.ndarray
    y: np.ndarray
    hyper: Hyper
    y_mean: float
    y_scale: float
    L: np.ndarray = field(repr=False)
    alpha_vec: np.ndarray = field(repr=False)
    nll: float = math.nan

    @property
    def signal_var(self) -> float:
        return self.hyper.signal_var * self.y_scale ** 2

    @property
    def noise_var(self) -> float:
        return self.hyper.noise_var * self.y_scale ** 2

    @property
    def length_scales(self) -> np.ndarray:
        return self.hyper.length_scales

    def hyper_dict(self) -> dict:
        return {"signal_var": self.signal_var, "length_scales": self.length_scales.tolist(),
                "noise_var": self.noise_var}


def se_kernel(A, B, signal_var, length_scales) -> np.ndarray:
    A = np.atleast_2d(A) / length_scales
    B = np.atleast_2d(B) / length_scales
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
    return signal_var * np.exp(-0.5 * np.maximum(d2, 0.0))


# search box for hyperparameters, in standardized-output units
LOG_SIGNAL = (math.log(1e-2), math.log(1e2))
LOG_LENGTH = (math.log(0.2), math.log(50.0))
LOG_NOISE = (math.log(1e-6), math.log(10.0))


def _nll(X, ys, logh, fixed_noise):
    d = X.shape[1]
    s2 = math.exp(logh[0])
    ls = np.exp(logh[1:1 + d])
    nv = fixed_noise if fixed_noise is not None else math.exp(logh[-1])
    K = se_kernel(X, X, s2, ls) + nv * np.eye(len(X))
    try:
        L = stable_cholesky(K).L
        a = np.linalg.solve(L, ys)
    except np.linalg.LinAlgError:
        return math.inf
    return 0.5 * float(a @ a) + float(np.sum(np.log(np.maximum(np.diag(L), 1e-300)))) \
        + 0.5 * len(X) * math.log(2 * math.pi)


def _bounds(d):
    return [LOG_SIGNAL] + [LOG_LENGTH] * d + [LOG_NOISE]


def gp_fit(inputs, observations, init: Hyper | None = None, fixed_noise: float | None = None) -> GPSurrogate:
    """Fit a GP by marginal likelihood: coarse grid, then coordinate search in log space.

    ``fixed_noise`` (standardized units) pins the noise variance, e.g. 0 for
    interpolation.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(observations, dtype=float).ravel()
    if len(y) < 2:
        raise ValueError("need at least two observations")
    d = X.shape[1]
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    ys = (y - y_mean) / y_scale
    bounds = _bounds(d)

    def f(logh):
        return _nll(X, ys, logh, fixed_noise)

    starts = []
    for s, l, nz in itertools.product(np.linspace(*LOG_SIGNAL, 5), np.linspace(*LOG_LENGTH, 6),
                                      np.linspace(*LOG_NOISE, 5)):
        starts.append(np.concatenate([[s], np.full(d, l), [nz]]))
    if init is not None:
        starts.append(np.clip(init.as_log(), [b[0] for b in bounds], [b[1] for b in bounds]))
    scored = sorted(((f(h), i) for i, h in enumerate(starts)), key=lambda t: t[0])
    best_val, best = math.inf, None
    for val, i in scored[:3]:
        h, v = _coordinate_search(f, starts[i].copy(), val, bounds)
        if v < best_val:
            best_val, best = v, h
    hyper = Hyper(math.exp(best[0]), np.exp(best[1:1 + d]),
                  fixed_noise if fixed_noise is not None else math.exp(best[-1]))
    return _condition(X, y, hyper, y_mean, y_scale, best_val)


def _coordinate_search(f, h, val, bounds, step=1.0, min_step=0.05):
    while step >= min_step:
        improved = False
        for j in range(len(h)):
            for sgn in (1.0, -1.0):
                cand = h.copy()
                cand[j] = min(max(cand[j] + sgn * step, bounds[j][0]), bounds[j][1])
                if cand[j] == h[j]:
                    continue
                v = f(cand)
                if v < val - 1e-12:
                    h, val, improved = cand, v, True
                    break
        if not improved:
            step /= 2
    return h, val


def _condition(X, y, hyper: Hyper, y_mean, y_scale, nll=math.nan) -> GPSurrogate:
    ys = (y - y_mean) / y_scale
    K = se_kernel(X, X, hyper.signal_var, hyper.length_scales) + hyper.noise_var * np.eye(len(X))
    L = stable_cholesky(K).L
    a = np.linalg.solve(L.T, np.linalg.solve(L, ys))
    return GPSurrogate(X, y, hyper, y_mean, y_scale, L, a, nll)


def gp_with_hyper(inputs, observations, hyper: Hyper) -> GPSurrogate:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(observations, dtype=float).ravel()
    return _condition(X, y, hyper, float(y.mean()), float(y.std()) or 1.0)


def gp_posterior(model: GPSurrogate, x):
    """Posterior mean and variance of the latent objective at ``x`` (one point or rows)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xs = np.atleast_2d(x)
    h = model.hyper
    Ks = se_kernel(Xs, model.X, h.signal_var, h.length_scales)
    mean = model.y_mean + model.y_scale * (Ks @ model.alpha_vec)
    v = np.linalg.solve(model.L, Ks.T)
    var = model.y_scale ** 2 * np.maximum(h.signal_var - (v * v).sum(0), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def expected_improvement(mean, variance, best_so_far):
    """Maximization EI ``(mu - b) Phi(z) + sigma phi(z)``; ``max(mu - b, 0)`` when sigma = 0."""
    mu = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    imp = mu - best_so_far
    safe = np.where(sd > 0, sd, 1.0)
    # beyond |z| = 40 both Phi and phi are saturated; clipping avoids overflow in z*z
    z = np.clip(imp / safe, -40.0, 40.0)
    Phi = 0.5 * np.vectorize(math.erfc, otypes=[float])(-z / SQRT2)
    phi = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ei = np.where(sd > 0, imp * Phi + sd * phi, np.maximum(imp, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


# --- optimization loop -------------------------------------------------------------

@dataclass
class TraceEntry:
    index: int
    theta: np.ndarray
    p: np.ndarray
    value: float
    best_observed: float
    phase: str


@dataclass
class OptimizeResult:
    best: SimplexPoint
    best_value: float
    best_posterior_mean: float
    trace: list
    surrogate: GPSurrogate
    n_init: int
    config: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "incumbent": {"theta": self.best.theta.tolist(), "p": self.best.p.tolist(),
                          "observed_value": self.best_value,
                          "posterior_mean": self.best_posterior_mean},
            "surrogate": self.surrogate.hyper_dict(),
            "n_init": self.n_init,
            "trace": [{"index": t.index, "phase": t.phase, "value": t.value,
                       "best_observed": t.best_observed, "theta": t.theta.tolist(),
                       "p": t.p.tolist()} for t in self.trace],
        }


def initial_design_size(dim: int) -> int:
    return min(5 * dim, 50)


def _maximize_ei(model, best, dim, g, box, n_random=2000, n_starts=5):
    cand = g.uniform(-box, box, size=(n_random, dim))
    cand = np.vstack([cand, model.X])
    m, v = gp_posterior(model, cand)
    ei = expected_improvement(m, v, best)
    order = np.argsort(-ei)[:n_starts]
    best_x, best_ei = cand[order[0]], ei[order[0]]

    def neg(x):
        x = np.clip(x, -box, box)
        mm, vv = gp_posterior(model, x)
        return -expected_improvement(mm, vv, best)

    for i in order:
        res = minimize(neg, cand[i], method="Nelder-Mead",
                       options={"maxiter": 200 * dim, "xatol": 1e-3, "fatol": 1e-10})
        x = np.clip(res.x, -box, box)
        val = -neg(x)
        if val > best_ei:
            best_x, best_ei = x, val
    return best_x


def optimize(nx: int, ny: int, N: int, M: int, alpha: float, budget: int, rng: RngLike,
             n_init: int | None = None, box: float = THETA_BOX, log=None,
             threads: int | None = None) -> OptimizeResult:
    """Maximize the empirical ``alpha``-quantile of ``W1(P, P_hat_N)`` over grid measures ``P``."""
    shape = (nx, ny)
    dim = nx * ny - 1
    n_init = initial_design_size(dim) if n_init is None else n_init
    if budget < n_init:
        raise ValueError(f"budget {budget} is below the initial design size {n_init}")
    stream = as_stream(rng)
    design_seed = int(stream.child(0).generator().integers(2**32))
    design = qmc.LatinHypercube(d=dim, seed=design_seed).random(n_init) * 2 * box - box
    acq_rng = stream.child(1).generator()

    def evaluate(i, theta):
        P = FiniteMeasure2D(nx, ny, theta_to_p(theta).reshape(shape))
        return objective_quantile(P, N, M, alpha, stream.child(2, i)).value

    X, y, trace = [], [], []
    best_obs = -math.inf

    def record(theta, value, phase):
        nonlocal best_obs
        best_obs = max(best_obs, value)
        X.append(np.asarray(theta, dtype=float))
        y.append(value)
        trace.append(TraceEntry(len(trace), X[-1], theta_to_p(theta).reshape(shape), value, best_obs, phase))
        if log:
            log(f"[{phase} {len(trace)}/{budget}] value={value:.4f} best={best_obs:.4f}")

    values = parallel_map(lambda it: evaluate(*it), list(enumerate(design)), threads)
    for theta, v in zip(design, values):
        record(theta, v, "design")

    hyper = None
    model = None
    for i in range(n_init, budget):
        model = gp_fit(np.array(X), np.array(y), init=hyper)
        hyper = model.hyper
        mu_obs, _ = gp_posterior(model, np.array(X))
        theta = _maximize_ei(model, float(mu_obs.max()), dim, acq_rng, box)
        record(theta, evaluate(i, theta), "bo")

    Xa, ya = np.array(X), np.array(y)
    model = gp_fit(Xa, ya, init=hyper)
    mu_obs, _ = gp_posterior(model, Xa)
    k = int(np.argmax(mu_obs))
    config = {"nx": nx, "ny": ny, "N": N, "M": M, "alpha": alpha, "budget": budget,
              "seed": stream.seed, "n_init": n_init, "box": box}
    return OptimizeResult(SimplexPoint(Xa[k], shape), float(ya[k]), float(mu_obs[k]),
                          trace, model, n_init, config)


def corner_pair_mass(p) -> float:
    """Largest total mass on a pair of opposite corners of the grid."""
    p = np.asarray(p)
    return float(max(p[0, 0] + p[-1, -1], p[0, -1] + p[-1, 0]))


__all__ = [
    "SimplexPoint", "GPSurrogate", "Hyper", "OptimizeResult", "TraceEntry",
    "theta_to_p", "p_to_theta", "distance_sample", "objective_quantile", "gp_fit",
    "gp_with_hyper", "gp_posterior", "expected_improvement", "optimize", "se_kernel",
    "initial_design_size", "corner_pair_mass",
]
