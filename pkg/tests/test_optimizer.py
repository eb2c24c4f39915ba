import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import DIAGONAL_Q95_N100
from wq.linalg import CholeskyError
from wq.measures import FiniteMeasure2D
from wq.optimizer import (
    expected_improvement,
    gp_fit,
    gp_posterior,
    initial_design_size,
    objective_quantile,
    optimize,
    p_to_theta,
    theta_to_p,
)
from wq.rng import Stream


def test_point_mass_objective_is_zero():
    P = FiniteMeasure2D.from_p([[0.0, 1.0], [0.0, 0.0]])
    assert objective_quantile(P, 50, 30, 0.95, 1).value == 0.0


def test_diagonal_pair_matches_binomial_quantile():
    P = FiniteMeasure2D.from_p([[0.5, 0.0], [0.0, 0.5]])
    est = objective_quantile(P, 100, 2000, 0.95, 2)
    # the distance is 2 |K/N - 1/2| with K binomial; the law is a lattice, so allow one step
    assert abs(est.value - DIAGONAL_Q95_N100) <= max(3 * est.se, 0.02 + 1e-12)


def test_objective_is_deterministic():
    P = FiniteMeasure2D.from_p(np.full((2, 2), 0.25))
    assert objective_quantile(P, 30, 40, 0.9, Stream(3)) == objective_quantile(P, 30, 40, 0.9, Stream(3))


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_simplex_map_lands_on_simplex(theta):
    p = theta_to_p(theta)
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(p > 0)


@given(st.integers(0, 2**32 - 1))
def test_simplex_round_trip(seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(4))
    p = np.maximum(p, 1e-9)
    p /= p.sum()
    assert 0.5 * np.abs(theta_to_p(p_to_theta(p)) - p).sum() <= 1e-6


def test_simplex_map_reaches_vertices():
    p = theta_to_p([40.0, -40.0, -40.0])
    assert p[0] >= 1 - 1e-6


def test_ei_reference_values():
    assert expected_improvement(0.0, 0.0, 0.0) == 0.0
    assert expected_improvement(-1.0, 0.0, 0.0) == 0.0
    assert expected_improvement(1.2, 0.0, 1.0) == pytest.approx(0.2)
    assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


@given(st.floats(-5, 5), st.floats(0, 4), st.floats(-5, 5))
def test_ei_is_nonnegative_and_beats_plain_improvement(mu, var, best):
    ei = expected_improvement(mu, var, best)
    assert ei >= max(mu - best, 0.0) - 1e-12


def test_repeated_input_forces_noise():
    m = gp_fit(np.array([[0.0], [0.0], [1.0]]), np.array([0.0, 1.0, 0.5]))
    assert m.noise_var > 0


def test_noiseless_fit_interpolates():
    X = np.array([[0.0], [1.0], [2.5], [4.0]])
    y = np.sin(X.ravel())
    m = gp_fit(X, y, fixed_noise=0.0)
    for x, v in zip(X, y):
        mean, var = gp_posterior(m, x)
        assert mean == pytest.approx(v, abs=1e-8)
        assert var == pytest.approx(0.0, abs=1e-8)


def test_posterior_reverts_to_prior_far_away():
    X = np.array([[0.0], [1.0], [2.0]])
    m = gp_fit(X, np.array([1.0, 2.0, 3.0]))
    mean, var = gp_posterior(m, np.array([1e6]))
    assert mean == pytest.approx(2.0)
    assert var == pytest.approx(m.signal_var)


def test_variance_never_exceeds_prior():
    rng = np.random.default_rng(2)
    X = rng.uniform(-3, 3, (15, 2))
    m = gp_fit(X, np.sin(X[:, 0]) + 0.1 * rng.normal(size=15))
    _, var = gp_posterior(m, rng.uniform(-5, 5, (200, 2)))
    assert np.all(var >= 0)
    assert np.all(var <= m.signal_var * (1 + 1e-12))


def test_white_noise_is_recognized():
    rng = np.random.default_rng(3)
    X = rng.uniform(-3, 3, (30, 1))
    m = gp_fit(X, rng.normal(size=30))
    assert m.length_scales[0] >= 49.0 or m.signal_var / m.noise_var < 1


def test_fit_needs_two_points():
    with pytest.raises(ValueError):
        gp_fit(np.zeros((1, 1)), np.zeros(1))


def test_design_size_rule():
    assert initial_design_size(3) == 15
    assert initial_design_size(20) == 50


def test_budget_below_design_is_rejected():
    with pytest.raises(ValueError):
        optimize(2, 2, 20, 20, 0.9, 10, 0)


def test_budget_equal_to_design_returns_best_design_point():
    r = optimize(2, 2, 30, 30, 0.9, 15, 4)
    assert len(r.trace) == 15
    assert all(t.phase == "design" for t in r.trace)
    assert any(np.array_equal(r.best.theta, t.theta) for t in r.trace)


def test_trace_incumbent_is_nondecreasing():
    r = optimize(2, 2, 30, 30, 0.9, 20, 5)
    best = [t.best_observed for t in r.trace]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert best[-1] == max(t.value for t in r.trace)


def test_low_level_prefers_spread_mass():
    r = optimize(2, 2, 100, 100, 0.05, 60, 0)
    assert 0.5 * np.abs(r.best.p - 0.25).sum() <= 0.25


def test_three_by_three_beats_uniform():
    r = optimize(3, 3, 100, 100, 0.95, 60, 5)
    U = FiniteMeasure2D.from_p(np.full((3, 3), 1 / 9))
    a = objective_quantile(U, 100, 2000, 0.95, Stream(1))
    b = objective_quantile(r.best.measure(), 100, 2000, 0.95, Stream(2))
    assert b.value - a.value >= 3 * math.hypot(a.se, b.se)


def test_kernel_failure_names_the_minor():
    from wq.linalg import stable_cholesky
    with pytest.raises(CholeskyError) as e:
        stable_cholesky(np.array([[1.0, 2.0], [2.0, -5.0]]))
    assert e.value.minor is not None
