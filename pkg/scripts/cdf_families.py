#!/usr/bin/env python3
"""Monte Carlo CDFs of the limit statistic for the mixture family and random measures.

Writes one CSV with a column per measure: the uniform grid measure
(lambda=0), the two-point measure (lambda=1), intermediate mixtures and
``--random`` Dirichlet draws.
"""
import argparse

import numpy as np

from csvout import write_csv
from wq.bridge import mc_cdf
from wq.quantiles import mixture_pvector
from wq.rng import Stream


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--random", type=int, default=20)
    ap.add_argument("--t-max", type=float, default=1.5)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--out", default="results/cdf_families.csv")
    a = ap.parse_args()

    t = np.linspace(0, a.t_max, 301)
    cols, names = [], []
    for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
        cols.append(mc_cdf(mixture_pvector(lam, a.n), t, a.reps, Stream(a.seed)).F_hat)
        names.append(f"lambda={lam}")
    rng = np.random.default_rng(a.seed)
    for i in range(a.random):
        p = rng.dirichlet(np.ones(a.n))
        cols.append(mc_cdf(p, t, a.reps, Stream(a.seed)).F_hat)
        names.append(f"random{i}")
    rows = [[float(ti)] + [float(c[j]) for c in cols] for j, ti in enumerate(t)]
    write_csv(a.out, ["t"] + names, rows, comment=f"n={a.n} reps={a.reps} seed={a.seed}")


if __name__ == "__main__":
    main()
