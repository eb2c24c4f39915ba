#!/usr/bin/env python3
"""Empirical CDF of W1(P, P_hat_N) for a random measure on the 3x3 grid (l1 ground cost)."""
import argparse

import numpy as np

from csvout import write_csv
from wq.measures import FiniteMeasure2D
from wq.optimizer import distance_sample
from wq.rng import Stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=3)
    ap.add_argument("--n-samples", type=int, default=100)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--out", default="results/grid_distance_cdf.csv")
    a = ap.parse_args()

    g = a.grid
    p = np.random.default_rng(a.seed).dirichlet(np.ones(g * g)).reshape(g, g)
    d = np.sort(distance_sample(FiniteMeasure2D(g, g, p), a.n_samples, a.reps, Stream(a.seed)))
    F = np.arange(1, d.size + 1) / d.size
    write_csv(a.out, ["w1", "F_hat"], zip(d.tolist(), F.tolist()),
              comment="P=" + ";".join(",".join(f"{v:.4f}" for v in row) for row in p))
    print(f"median {np.median(d):.4f}, 0.95-quantile {d[int(np.ceil(0.95 * d.size)) - 1]:.4f}")


if __name__ == "__main__":
    main()
