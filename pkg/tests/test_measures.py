import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from oracles import KS_999_N1E4
from wq.measures import (
    DiscreteMeasure1D,
    FiniteMeasure1D,
    FiniteMeasure2D,
    Grid1D,
    MeasureError,
    MixtureMeasure,
    SampleBatch,
    batch_from_csv,
    batch_to_csv,
    cdf_eval,
    cumulative_q,
    empirical_measure,
    measure_from_dict,
    measure_to_dict,
    quantize_measure,
    quantize_points,
    quantize_sample,
    renormalize,
    sample,
)


def prob_vectors(min_size=2, max_size=12):
    return arrays(float, st.integers(min_size, max_size),
                  elements=st.floats(0, 1, allow_subnormal=False)).filter(
        lambda w: w.sum() > 1e-3).map(lambda w: w / w.sum()).filter(
        lambda p: abs(p.sum() - 1) <= 1e-12)


def test_grid_points_are_equidistant_with_endpoints():
    g = Grid1D(5)
    assert g.points.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.spacing == 0.25


def test_grid_needs_two_points():
    with pytest.raises(MeasureError):
        Grid1D(1)


def test_off_grid_draw_is_rejected():
    with pytest.raises(MeasureError):
        Grid1D(3).index_of(np.array([0.3]))


def test_simplex_violations_raise():
    with pytest.raises(MeasureError, match="sum"):
        FiniteMeasure1D.from_p([0.5, 0.4])
    with pytest.raises(MeasureError):
        FiniteMeasure1D.from_p([1.2, -0.2])


def test_renormalize_is_explicit():
    assert np.allclose(renormalize([2.0, 2.0]), [0.5, 0.5])
    with pytest.raises(MeasureError):
        FiniteMeasure1D.from_p([2.0, 2.0])


def test_cdf_examples():
    P = FiniteMeasure1D.from_p([0.25, 0.25, 0.5])
    assert cdf_eval(P, 0.5) == 0.5
    assert cdf_eval(P, 0.49) == 0.25
    assert cdf_eval(P, -1) == 0.0 and cdf_eval(P, 2) == 1.0
    M = MixtureMeasure(0.4)
    assert cdf_eval(M, 0.0) == pytest.approx(0.2)
    assert cdf_eval(M, 0.5) == pytest.approx(0.2 + 0.3)
    assert cdf_eval(M, 1.0) == 1.0


@given(prob_vectors())
def test_cdf_is_monotone_and_ends_at_one(p):
    P = FiniteMeasure1D.from_p(p)
    t = np.linspace(-0.1, 1.1, 57)
    F = P.cdf(t)
    assert np.all(np.diff(F) >= -1e-15)
    assert F[-1] == pytest.approx(1.0)


@given(prob_vectors())
def test_cumulative_q_are_partial_sums(p):
    q = cumulative_q(p)
    assert q.size == p.size - 1
    assert np.allclose(q, np.cumsum(p)[:-1])


def test_mixture_extremal_atom_frequency():
    N = 10_000
    x = sample(MixtureMeasure(1.0), N, 3).draws
    assert set(np.unique(x)) <= {0.0, 1.0}
    assert abs(np.mean(x == 0.0) - 0.5) <= 3 * math.sqrt(0.25 / N)


def test_mixture_uniform_passes_ks():
    x = sample(MixtureMeasure(0.0), 10_000, 4).draws
    assert stats.kstest(x, "uniform").statistic < KS_999_N1E4


def test_sampling_is_deterministic_given_seed():
    a = sample(MixtureMeasure(0.3), 100, 9).draws
    b = sample(MixtureMeasure(0.3), 100, 9).draws
    assert np.array_equal(a, b)


def test_finite_measure_never_samples_zero_mass():
    P = FiniteMeasure1D.from_p([0.0, 1.0, 0.0])
    assert np.all(sample(P, 1000, 1).draws == 0.5)


def test_empirical_on_grid_is_relative_frequency():
    batch = SampleBatch(np.array([0.0, 0.5, 0.5, 1.0]))
    E = empirical_measure(batch, Grid1D(3))
    assert E.p.tolist() == [0.25, 0.5, 0.25]


def test_empirical_2d():
    batch = SampleBatch(np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [0.0, 1.0]]))
    E = empirical_measure(batch, (2, 2))
    assert E.p.tolist() == [[0.25, 0.25], [0.0, 0.5]]


def test_batch_rejects_out_of_range():
    with pytest.raises(MeasureError):
        SampleBatch(np.array([0.2, 1.5]))


def test_quantization_examples():
    x = np.array([0.0, 0.09, 0.1, 0.55, 0.999, 1.0])
    assert quantize_points(x, 10).tolist() == [0.0, 0.0, 0.1, 0.5, 0.9, 1.0]


@given(arrays(float, st.integers(1, 50), elements=st.floats(0, 1)), st.integers(1, 50))
def test_quantization_moves_points_at_most_one_cell(x, n):
    q = quantize_points(x, n)
    assert np.all(q <= x + 1e-15)
    assert np.all(x - q < 1.0 / n + 1e-12)
    assert np.all(np.isclose(q * n, np.round(q * n)))


def test_quantize_sample_keeps_seed():
    b = sample(MixtureMeasure(0.5), 20, 2)
    assert quantize_sample(b, 4).seed == b.seed


def test_quantized_mixture_masses():
    Q = quantize_measure(MixtureMeasure(0.5), 4)
    assert Q.support.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert np.allclose(Q.weights, [0.25 + 0.125, 0.125, 0.125, 0.125, 0.25])


def test_discrete_measure_merges_duplicates():
    D = DiscreteMeasure1D(np.array([0.5, 0.1, 0.5]), np.array([0.25, 0.5, 0.25]))
    assert D.support.tolist() == [0.1, 0.5]
    assert D.weights.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("m", [
    FiniteMeasure1D.from_p([0.2, 0.3, 0.5]),
    MixtureMeasure(0.25),
    FiniteMeasure2D.from_p([[0.1, 0.2], [0.3, 0.4]]),
    DiscreteMeasure1D(np.array([0.1, 0.7]), np.array([0.5, 0.5])),
])
def test_measure_json_round_trip(m):
    back = measure_from_dict(measure_to_dict(m))
    assert measure_to_dict(back) == measure_to_dict(m)


def test_measure_json_size_mismatch():
    with pytest.raises(MeasureError, match="n=3"):
        measure_from_dict({"kind": "finite1d", "n": 3, "p": [0.5, 0.5]})


@given(arrays(float, st.integers(1, 30), elements=st.floats(0, 1)))
def test_batch_csv_round_trip_is_exact(x):
    b = SampleBatch(x, seed=[7, [1, 2]])
    back = batch_from_csv(batch_to_csv(b))
    assert np.array_equal(back.draws, b.draws)
    assert back.seed == [7, [1, 2]]
