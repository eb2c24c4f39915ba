"""Measures on [0,1] and [0,1]^2, sampling, empirical measures, quantization.

Two lattices live here and are never mixed:

* the equidistant grid ``x_i = (i-1)/(n-1)``, i = 1..n, used by all finite
  measures (``Grid1D``);
* the quantization lattice ``floor(n x)/n`` used by ``quantize_sample`` and
  ``quantize_measure``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .rng import RngLike, as_stream

SIMPLEX_TOL = 1e-12


class MeasureError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_simplex(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        raise MeasureError("empty probability vector")
    if not np.all(np.isfinite(p)):
        raise MeasureError("probability vector has non-finite entries")
    if np.any(p < 0) or np.any(p > 1):
        raise MeasureError(f"probabilities must lie in [0,1], got min={p.min()!r} max={p.max()!r}")
    s = float(p.sum())
    if abs(s - 1.0) > tol:
        raise MeasureError(f"probabilities sum to {s!r}, not 1 (tol {tol:g})")
    return p


def renormalize(p) -> np.ndarray:
    """Clip negatives and rescale to unit mass. Never applied implicitly."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    s = p.sum()
    if s <= 0:
        raise MeasureError("cannot renormalize a vector with no positive mass")
    return p / s


@dataclass(frozen=True)
class Grid1D:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise MeasureError(f"grid needs n >= 2 points, got {self.n!r}")

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) / (self.n - 1)

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n - 1)

    def index_of(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.rint(x * (self.n - 1)).astype(int)
        off = (idx < 0) | (idx >= self.n) | (np.abs(idx / (self.n - 1) - x) > tol)
        if np.any(off):
            bad = x[off].ravel()[0]
            raise MeasureError(f"draw {bad!r} is not a point of the {self.n}-point grid")
        return idx


class _Atomic1D:
    """Shared CDF machinery for purely atomic measures on the line."""

    support: np.ndarray
    weights: np.ndarray

    @property
    def _cum(self) -> np.ndarray:
        return np.cumsum(self.weights)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.support, t, side="right")
        c = np.concatenate([[0.0], self._cum])
        return c[k]

    def cdf_left(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.support, t, side="left")
        c = np.concatenate([[0.0], self._cum])
        return c[k]

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.support)

    def mean_of(self, f) -> float:
        return float(np.dot(self.weights, f(np.asarray(self.support))))


@dataclass(frozen=True)
class FiniteMeasure1D(_Atomic1D):
    grid: Grid1D
    p: np.ndarray

    def __post_init__(self):
        p = check_simplex(self.p)
        if p.shape != (self.grid.n,):
            raise MeasureError(f"p has shape {p.shape}, grid has {self.grid.n} points")
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def from_p(cls, p) -> "FiniteMeasure1D":
        p = np.asarray(p, dtype=float)
        return cls(Grid1D(len(p)), p)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def support(self) -> np.ndarray:
        return self.grid.points

    @property
    def weights(self) -> np.ndarray:
        return self.p


@dataclass(frozen=True)
class DiscreteMeasure1D(_Atomic1D):
    """Atoms at arbitrary sorted positions; the form taken by raw empirical measures."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.support, dtype=float)
        w = check_simplex(self.weights)
        if x.shape != w.shape or x.ndim != 1:
            raise MeasureError("support and weights must be 1-D arrays of equal length")
        if np.any(np.diff(x) <= 0):
            order = np.argsort(x, kind="stable")
            x, w = x[order], w[order]
            ux, inv = np.unique(x, return_inverse=True)
            w = np.bincount(inv, weights=w)
            x = ux
        object.__setattr__(self, "support", _frozen(x))
        object.__setattr__(self, "weights", _frozen(w))


@dataclass(frozen=True)
class MixtureMeasure:
    """``lam * (delta_0 + delta_1)/2 + (1 - lam) * U[0,1]``."""

    lam: float

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise MeasureError(f"mixture weight must lie in [0,1], got {self.lam!r}")
        object.__setattr__(self, "lam", float(self.lam))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        lam = self.lam
        inner = lam / 2 + (1 - lam) * np.clip(t, 0.0, 1.0)
        return np.where(t < 0, 0.0, np.where(t >= 1, 1.0, inner))

    def cdf_left(self, t):
        t = np.asarray(t, dtype=float)
        lam = self.lam
        inner = lam / 2 + (1 - lam) * np.clip(t, 0.0, 1.0)
        return np.where(t <= 0, 0.0, np.where(t > 1, 1.0, inner))

    def breakpoints(self) -> np.ndarray:
        return np.array([0.0, 1.0])

    def mean_of(self, f) -> float:
        """Expectation of a piecewise-linear ``f`` with breakpoints ``f.xs``."""
        xs = np.union1d(np.clip(getattr(f, "xs", np.array([])), 0, 1), [0.0, 1.0])
        ys = f(xs)
        uniform = float(np.sum((ys[1:] + ys[:-1]) * np.diff(xs)) / 2)
        return self.lam * (ys[0] + ys[-1]) / 2 + (1 - self.lam) * uniform


@dataclass(frozen=True)
class FiniteMeasure2D:
    nx: int
    ny: int
    p: np.ndarray

    def __post_init__(self):
        Grid1D(self.nx), Grid1D(self.ny)
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.nx, self.ny):
            raise MeasureError(f"p has shape {p.shape}, expected {(self.nx, self.ny)}")
        check_simplex(p.ravel())
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def from_p(cls, p) -> "FiniteMeasure2D":
        p = np.asarray(p, dtype=float)
        return cls(p.shape[0], p.shape[1], p)

    @property
    def xs(self) -> np.ndarray:
        return Grid1D(self.nx).points

    @property
    def ys(self) -> np.ndarray:
        return Grid1D(self.ny).points

    @property
    def coords(self) -> np.ndarray:
        """``(nx*ny, 2)`` atom coordinates in row-major order."""
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])


Measure1D = Union[FiniteMeasure1D, DiscreteMeasure1D, MixtureMeasure]
Measure = Union[Measure1D, FiniteMeasure2D]


@dataclass(frozen=True)
class SampleBatch:
    draws: np.ndarray
    seed: object = None
    N: int = field(default=-1)

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim not in (1, 2):
            raise MeasureError("draws must be 1-D (points on the line) or 2-D (points in the square)")
        if np.any(d < 0) or np.any(d > 1):
            raise MeasureError("every coordinate of a draw must lie in [0,1]")
        object.__setattr__(self, "draws", _frozen(d))
        if self.N == -1:
            object.__setattr__(self, "N", int(d.shape[0]))
        elif self.N != d.shape[0]:
            raise MeasureError(f"batch claims N={self.N} but holds {d.shape[0]} draws")

    @property
    def dim(self) -> int:
        return 1 if self.draws.ndim == 1 else self.draws.shape[1]


def cdf_eval(measure: Measure1D, t):
    """Right-continuous CDF; arguments outside [0,1] clamp to 0 or 1."""
    out = measure.cdf(t)
    return float(out) if np.ndim(out) == 0 else out


def cumulative_q(p) -> np.ndarray:
    """Partial sums ``q_i = p_1 + ... + p_i`` for i = 1..n-1."""
    p = check_simplex(p)
    if p.size < 2:
        raise MeasureError("need at least two grid points")
    return np.cumsum(p)[:-1]


def sample(measure: Measure, N: int, rng: RngLike) -> SampleBatch:
    if N < 1:
        raise MeasureError(f"sample size must be >= 1, got {N}")
    stream = as_stream(rng)
    g = stream.generator()
    if isinstance(measure, MixtureMeasure):
        u = g.random(N)
        coin = g.random(N) < measure.lam
        side = (g.random(N) < 0.5).astype(float)
        draws = np.where(coin, side, u)
    elif isinstance(measure, FiniteMeasure2D):
        idx = _inverse_cdf_index(measure.p.ravel(), g.random(N))
        draws = measure.coords[idx]
    else:
        idx = _inverse_cdf_index(measure.weights, g.random(N))
        draws = np.asarray(measure.support)[idx]
    return SampleBatch(draws, seed=(stream.seed, stream.key), N=N)


def _inverse_cdf_index(w, u) -> np.ndarray:
    c = np.cumsum(w)
    idx = np.searchsorted(c, u * c[-1], side="right")
    # never land on a zero-mass atom through rounding at the top
    last = np.flatnonzero(np.asarray(w) > 0)[-1]
    return np.minimum(idx, last)


def empirical_measure(batch: SampleBatch, grid=None):
    """Relative frequencies; on ``grid`` if given, otherwise on the distinct draws.

    ``grid`` is a ``Grid1D`` for 1-D batches or an ``(nx, ny)`` pair for 2-D ones.
    """
    d = batch.draws
    if batch.dim == 1:
        if grid is None:
            x, counts = np.unique(d, return_counts=True)
            return DiscreteMeasure1D(x, counts / batch.N)
        idx = grid.index_of(d)
        return FiniteMeasure1D(grid, np.bincount(idx, minlength=grid.n) / batch.N)
    if grid is None:
        raise MeasureError("2-D empirical measures need a grid shape (nx, ny)")
    nx, ny = grid
    ix = Grid1D(nx).index_of(d[:, 0])
    iy = Grid1D(ny).index_of(d[:, 1])
    counts = np.bincount(ix * ny + iy, minlength=nx * ny).reshape(nx, ny)
    return FiniteMeasure2D(nx, ny, counts / batch.N)


def quantize_points(x, n: int) -> np.ndarray:
    if n < 1:
        raise MeasureError(f"quantization resolution must be >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    return np.where(x >= 1.0, 1.0, np.floor(n * x) / n)


def quantize_sample(batch: SampleBatch, n: int) -> SampleBatch:
    """Map each draw to ``floor(n x)/n``; a draw at 1 stays at 1."""
    return SampleBatch(quantize_points(batch.draws, n), seed=batch.seed, N=batch.N)


def quantize_measure(measure: Measure1D, n: int) -> DiscreteMeasure1D:
    """Push-forward of a 1-D measure under the quantization map."""
    if isinstance(measure, MixtureMeasure):
        lam = measure.lam
        x = np.concatenate([np.arange(n) / n, [1.0]])
        w = np.full(n + 1, (1 - lam) / n)
        w[0] += lam / 2
        w[-1] = lam / 2
        keep = w > 0
        return DiscreteMeasure1D(x[keep], w[keep])
    x = quantize_points(measure.support, n)
    return DiscreteMeasure1D(x, np.asarray(measure.weights))


# --- serialization ---------------------------------------------------------

def measure_to_dict(m: Measure) -> dict:
    if isinstance(m, MixtureMeasure):
        return {"kind": "mixture", "lambda": m.lam}
    if isinstance(m, FiniteMeasure1D):
        return {"kind": "finite1d", "n": m.n, "p": m.p.tolist()}
    if isinstance(m, FiniteMeasure2D):
        return {"kind": "finite2d", "nx": m.nx, "ny": m.ny, "p": m.p.tolist()}
    if isinstance(m, DiscreteMeasure1D):
        return {"kind": "discrete1d", "x": m.support.tolist(), "p": m.weights.tolist()}
    raise TypeError(f"cannot serialize {type(m).__name__}")


def measure_from_dict(d: dict) -> Measure:
    kind = d.get("kind")
    if kind == "mixture":
        return MixtureMeasure(float(d["lambda"]))
    if kind == "finite1d":
        p = np.asarray(d["p"], dtype=float)
        if "n" in d and int(d["n"]) != len(p):
            raise MeasureError(f"finite1d declares n={d['n']} but lists {len(p)} probabilities")
        return FiniteMeasure1D(Grid1D(len(p)), p)
    if kind == "finite2d":
        return FiniteMeasure2D(int(d["nx"]), int(d["ny"]), np.asarray(d["p"], dtype=float))
    if kind == "discrete1d":
        return DiscreteMeasure1D(np.asarray(d["x"], float), np.asarray(d["p"], float))
    raise MeasureError(f"unknown measure kind {kind!r}")


def load_measure(path) -> Measure:
    with open(path) as fh:
        return measure_from_dict(json.load(fh))


def dump_measure(m: Measure, path) -> None:
    with open(path, "w") as fh:
        json.dump(measure_to_dict(m), fh)
        fh.write("\n")


def batch_to_csv(batch: SampleBatch) -> str:
    buf = io.StringIO()
    buf.write(f"# seed: {json.dumps(_seed_record(batch.seed))}\n")
    w = csv.writer(buf, lineterminator="\n")
    rows = batch.draws.reshape(batch.N, -1)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()


def _seed_record(seed):
    if isinstance(seed, tuple):
        return [seed[0], list(seed[1])]
    return seed


def batch_from_csv(text: str) -> SampleBatch:
    seed = None
    rows = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("seed:"):
                seed = json.loads(body[5:].strip())
            continue
        rows.append([float(v) for v in s.split(",")])
    if not rows:
        raise MeasureError("sample file holds no draws")
    arr = np.asarray(rows, dtype=float)
    if arr.shape[1] == 1:
        arr = arr[:, 0]
    return SampleBatch(arr, seed=seed)


def read_batch(path) -> SampleBatch:
    with open(path) as fh:
        return batch_from_csv(fh.read())


def write_batch(batch: SampleBatch, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(batch_to_csv(batch))


__all__ = [
    "Grid1D", "FiniteMeasure1D", "DiscreteMeasure1D", "MixtureMeasure", "FiniteMeasure2D",
    "SampleBatch", "MeasureError", "cdf_eval", "cumulative_q", "sample", "empirical_measure",
    "quantize_sample", "quantize_measure", "quantize_points", "renormalize", "check_simplex",
    "measure_to_dict", "measure_from_dict", "load_measure", "dump_measure",
    "batch_to_csv", "batch_from_csv", "read_batch", "write_batch",
]
