import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import PPF_95, PPF_975
from wq.normal import norm_cdf, norm_ppf, wilson_interval


def test_reference_quantiles():
    assert norm_ppf(0.975) == pytest.approx(PPF_975, abs=1e-13)
    assert norm_ppf(0.95) == pytest.approx(PPF_95, abs=1e-13)
    assert norm_ppf(0.5) == 0.0
    assert norm_ppf(0.0) == -np.inf and norm_ppf(1.0) == np.inf


def mp_ppf(u: float) -> float:
    with mp.workdps(60):
        lower = mp.mpf(u) if u <= 0.5 else 1 - mp.mpf(u)
        x = mp.findroot(lambda t: mp.ncdf(t) - lower, mp.mpf(float(norm_ppf(float(lower)))))
        return float(x if u <= 0.5 else -x)


@given(st.floats(1e-300, 1 - 1e-16))
def test_inverse_against_mpmath(u):
    assert norm_ppf(u) == pytest.approx(mp_ppf(u), abs=1e-12, rel=1e-12)


@given(st.floats(-8, 1))
def test_cdf_inverse_round_trip(x):
    # upper tail loses digits in norm_cdf itself, so stay below 1
    assert norm_ppf(norm_cdf(x)) == pytest.approx(x, abs=1e-9)


def test_out_of_range():
    with pytest.raises(ValueError):
        norm_ppf(1.5)


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(95, 100)
    assert lo < 0.95 < hi
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi > 0
