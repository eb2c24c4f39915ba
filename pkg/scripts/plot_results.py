#!/usr/bin/env python3
"""Plot the CSVs written by the other scripts. Needs matplotlib (not a package dependency)."""
import argparse
import glob
import os

import numpy as np


def load(path):
    with open(path) as fh:
        lines = [l for l in fh if not l.startswith("#")]
    header = lines[0].strip().split(",")
    rows = [l.strip().split(",") for l in lines[1:]]
    return header, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--results", default="results")
    a = ap.parse_args()
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = os.path.join(a.results, "cdf_families.csv")
    if os.path.exists(path):
        h, rows = load(path)
        data = np.array(rows, dtype=float)
        fig, ax = plt.subplots()
        for j, name in enumerate(h[1:], start=1):
            color = "black" if name == "lambda=1.0" else "blue" if name == "lambda=0.0" else \
                "red" if name.startswith("lambda") else "green"
            ax.plot(data[:, 0], data[:, j], color=color, lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("F(t)")
        fig.savefig(os.path.join(a.results, "cdf_families.png"), dpi=150)

    path = os.path.join(a.results, "lambda_curve.csv")
    if os.path.exists(path):
        _, rows = load(path)
        data = np.array(rows, dtype=float)
        fig, ax = plt.subplots()
        ax.step(data[:, 0], data[:, 1], where="mid")
        ax.set_xlabel("alpha")
        ax.set_ylabel("lambda")
        fig.savefig(os.path.join(a.results, "lambda_curve.png"), dpi=150)

    for path in sorted(glob.glob(os.path.join(a.results, "bo", "heatmap_*.csv"))):
        _, rows = load(path)
        fig, ax = plt.subplots()
        im = ax.imshow(np.array(rows, dtype=float).T, origin="lower", cmap="viridis", vmin=0)
        fig.colorbar(im)
        ax.set_title(os.path.basename(path)[:-4])
        fig.savefig(path[:-4] + ".png", dpi=150)
    print("done")


if __name__ == "__main__":
    main()
