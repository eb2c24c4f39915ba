"""The twelve acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed in the pytest terminal summary and when this file is run directly
(``python tests/test_acceptance.py``).
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import kstwo

from conftest import ACCEPTANCE_LINES
from oracles import TAIL_EXACT_25, UNIFORM_LIMIT_MEAN, vertex_enumeration
from wq.bridge import clt_check, eigen_tail, limit_statistic_uniform_mean, mc_cdf, sample_statistics_crn
from wq.confidence import coverage_sim, random_lipschitz, simultaneous_coverage
from wq.measures import (
    FiniteMeasure1D,
    FiniteMeasure2D,
    MixtureMeasure,
    empirical_measure,
    quantize_measure,
    quantize_sample,
    sample,
)
from wq.normal import norm_cdf
from wq.optimizer import corner_pair_mass, optimize
from wq.quantiles import dominance_integral, empirical_quantile, extremal_pvector, lambda_curve, mixture_pvector
from wq.rng import Stream
from wq.transport import embed_1d, kr_dual_check, transport_simplex, w1_1d, w1_grid_lp


def verdict(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_01_extremal_vs_uniform_ordering():
    t0 = time.perf_counter()
    s_uni, s_ext = sample_statistics_crn([mixture_pvector(0.0, 10), mixture_pvector(1.0, 10)], 100_000, Stream(101))
    hi_u, hi_e = empirical_quantile(s_uni, 0.99), empirical_quantile(s_ext, 0.99)
    lo_u, lo_e = empirical_quantile(s_uni, 0.05), empirical_quantile(s_ext, 0.05)
    z_hi = (hi_e.value - hi_u.value) / math.hypot(hi_e.se, hi_u.se)
    z_lo = (lo_u.value - lo_e.value) / math.hypot(lo_e.se, lo_u.se)
    dt = time.perf_counter() - t0
    verdict(1, "quantile ordering at 0.99 and 0.05", z_hi > 3 and z_lo > 3 and dt < 120,
            f"z(0.99)={z_hi:.1f} z(0.05 reversed)={z_lo:.1f} time={dt:.2f}s")


def test_02_lambda_curve_boundaries():
    alphas = np.round(np.arange(0.01, 1.0, 0.01), 2)
    c = lambda_curve(10, alphas, np.round(np.arange(0, 1.0001, 0.05), 2), 100_000, Stream(102))
    lam = dict(zip(alphas.tolist(), c.lambda_hat.tolist()))
    near = [a for a in alphas if 0.3 <= a <= 0.5 and 0 < lam[a] < 1]
    ok = lam[0.01] <= 0.2 and lam[0.99] >= 0.8 and bool(near)
    verdict(2, "lambda-hat boundary behavior", ok,
            f"lambda(0.01)={lam[0.01]:.2f} lambda(0.99)={lam[0.99]:.2f} "
            f"intermediate at alpha in [{min(near, default=float('nan')):.2f}, {max(near, default=float('nan')):.2f}]")


def test_03_two_point_exact_law():
    t0 = time.perf_counter()
    t = np.linspace(0.05, 1.2, 20)
    res = mc_cdf([0.5, 0.5], t, 100_000, Stream(103))
    F = 2 * norm_cdf(2 * t) - 1
    z = np.abs(res.F_hat - F) / np.sqrt(F * (1 - F) / res.M)
    dt = time.perf_counter() - t0
    verdict(3, "two-point CDF equals 2 Phi(2t) - 1", bool(np.all(z <= 3)) and dt < 5,
            f"max |z|={z.max():.2f} over 20 points, time={dt:.2f}s")


def test_04_clt_against_limit_law():
    t0 = time.perf_counter()
    res = clt_check(np.full(10, 0.1), 10_000, 10_000, 10_000, Stream(104))
    dt = time.perf_counter() - t0
    crit = float(kstwo.ppf(0.95, 5000))  # two-sample 5% level for equal sizes 10^4
    verdict(4, "CLT Kolmogorov distance", res.kolmogorov <= 0.02 and dt < 300,
            f"D={res.kolmogorov:.4f} (sampling 5% level ~{crit:.4f}) time={dt:.2f}s")


def test_05_uniform_limit_mean():
    mean, se = limit_statistic_uniform_mean(100_000, 500, Stream(105))
    rel = abs(mean - UNIFORM_LIMIT_MEAN) / UNIFORM_LIMIT_MEAN
    verdict(5, "uniform-limit mean within 1%", rel <= 0.01,
            f"mean={mean:.6f} se={se:.6f} target={UNIFORM_LIMIT_MEAN:.6f} rel={rel:.2%}")


def test_06_lp_correctness():
    rng = np.random.default_rng(106)
    worst_val = worst_gap = 0.0
    for _ in range(200):
        m, k = rng.integers(1, 5, size=2)
        a = rng.dirichlet(np.ones(m))
        b = rng.dirichlet(np.ones(k))
        C = rng.random((m, k))
        pi, u, v, _ = transport_simplex(a, b, C)
        cost = float((pi * C).sum())
        worst_val = max(worst_val, abs(cost - vertex_enumeration(a, b, C)))
        worst_gap = max(worst_gap, abs(cost - (u @ a + v @ b)))
    # same check through the grid interface, including zero-mass atoms
    for _ in range(50):
        P = FiniteMeasure2D.from_p(rng.dirichlet(np.full(4, 0.4)).reshape(2, 2))
        Q = FiniteMeasure2D.from_p(rng.dirichlet(np.full(4, 0.4)).reshape(2, 2))
        cost, plan = w1_grid_lp(P, Q)
        chk = kr_dual_check(P, Q, plan)
        worst_gap = max(worst_gap, chk.gap)
        worst_val = max(worst_val, abs(cost - vertex_enumeration(P.p.ravel(), Q.p.ravel(), plan.cost_matrix)))
    worst_embed = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        P = FiniteMeasure1D.from_p(rng.dirichlet(np.ones(n)))
        Q = FiniteMeasure1D.from_p(rng.dirichlet(np.ones(n)))
        worst_embed = max(worst_embed, abs(w1_grid_lp(embed_1d(P), embed_1d(Q))[0] - w1_1d(P, Q)))
    ok = worst_val <= 1e-9 and worst_gap <= 1e-9 and worst_embed <= 1e-8
    verdict(6, "transport LP against vertex enumeration", ok,
            f"max value err={worst_val:.1e} max duality gap={worst_gap:.1e} max embed err={worst_embed:.1e}")


def test_07_scalar_tail_formula():
    ratio = eigen_tail([0.25], 25.0) / TAIL_EXACT_25
    verdict(7, "scalar tail formula / exact tail at t=25", 0.95 <= ratio <= 1.05, f"ratio={ratio:.4f}")


def test_08_second_order_dominance():
    rng = np.random.default_rng(108)
    Ks = [0.0, 0.1, 0.3]
    ext = dominance_integral(extremal_pvector(6), Ks, 100_000, Stream(108, (0,)))
    worst = math.inf
    for i in range(50):
        p = rng.dirichlet(np.ones(6))
        other = dominance_integral(p, Ks, 100_000, Stream(108, (i + 1,)))
        for e, o in zip(ext, other):
            worst = min(worst, (e.mean - o.mean) / math.hypot(e.se, o.se))
    verdict(8, "extremal shortfall dominates", worst >= -3, f"min z over 150 comparisons={worst:.2f}")


def test_09_coverage():
    t0 = time.perf_counter()
    c1 = coverage_sim(MixtureMeasure(1.0), 10_000, 0.95, 2000, Stream(109, (1,)))
    cu = coverage_sim(MixtureMeasure(0.0), 10_000, 0.95, 2000, Stream(109, (2,)))
    ch = coverage_sim(MixtureMeasure(0.5), 10_000, 0.95, 2000, Stream(109, (3,)))
    dt = time.perf_counter() - t0
    ok = c1.fraction >= 0.93 and cu.fraction >= 0.95 and ch.fraction >= 0.95 and dt < 600
    verdict(9, "confidence-region coverage", ok,
            f"P^1={c1.fraction:.4f} U={cu.fraction:.4f} P^0.5={ch.fraction:.4f} time={dt:.1f}s")


def test_10_uniform_lipschitz_coverage():
    rng = np.random.default_rng(110)
    fs = [random_lipschitz(rng) for _ in range(100)]
    cov = simultaneous_coverage(MixtureMeasure(1.0), fs, 10_000, 0.95, 500, Stream(110))
    verdict(10, "simultaneous Lipschitz coverage", cov.fraction >= 0.92,
            f"fraction={cov.fraction:.3f} (99% CI {cov.ci_lo:.3f}-{cov.ci_hi:.3f})")


def test_11_bo_corner_solution():
    masses = []
    for seed in range(5):
        r = optimize(2, 2, 100, 100, 0.95, 60, Stream(seed))
        masses.append(corner_pair_mass(r.best.p))
    hits = sum(m >= 0.8 for m in masses)
    verdict(11, "BO finds an opposite-corner pair", hits >= 4,
            f"{hits}/5 runs, corner-pair masses {[round(m, 3) for m in masses]}")


def test_12_quantization_contraction():
    rng = np.random.default_rng(112)
    worst = -math.inf
    for i in range(1000):
        n = int(rng.integers(1, 60))
        P = MixtureMeasure(float(rng.random()))
        batch = sample(P, int(rng.integers(1, 200)), Stream(112, (i,)))
        before = w1_1d(empirical_measure(batch), P)
        after = w1_1d(empirical_measure(quantize_sample(batch, n)), quantize_measure(P, n))
        worst = max(worst, abs(before - after) - 2.0 / n)
    verdict(12, "quantization moves W1 by at most 2/n", worst <= 0, f"max excess over 2/n={worst:.3e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
