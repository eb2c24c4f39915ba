#!/usr/bin/env python3
"""Quantile-maximizing mixture weight as a function of the level."""
import argparse

import numpy as np

from csvout import write_csv
from wq.quantiles import lambda_curve
from wq.rng import Stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--lambda-steps", type=int, default=101)
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--out", default="results/lambda_curve.csv")
    a = ap.parse_args()

    alphas = np.round(np.arange(0.01, 1.0, 0.01), 2)
    c = lambda_curve(a.n, alphas, np.linspace(0, 1, a.lambda_steps), a.reps, Stream(a.seed))
    rows = zip(c.alphas.tolist(), c.lambda_hat.tolist(), c.quantile_at_max.tolist())
    write_csv(a.out, ["alpha", "lambda_hat", "quantile"], rows, comment=f"n={a.n} reps={a.reps} seed={a.seed}")
    mid = [(al, l) for al, l in zip(c.alphas, c.lambda_hat) if 0 < l < 1]
    print("levels with an intermediate maximizer:", [round(float(al), 2) for al, _ in mid])


if __name__ == "__main__":
    main()
